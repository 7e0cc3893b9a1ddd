#include "firedrift/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

namespace firedrift {

namespace {

// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double da = a[i] - ma, db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0)
    throw DegenerateInput("correlation of a constant sequence is undefined");
  return cov / std::sqrt(va * vb);
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("spearman: length mismatch");
  if (a.size() < 2)
    throw DegenerateInput("spearman needs at least two observations");
  return pearson(average_ranks(a), average_ranks(b));
}

void to_json(Json& j, const MidrEvalReport& r) {
  Json per = Json::array();
  for (const StructureRho& s : r.per_structure)
    per.push_back(Json{{"structure_id", s.structure_id},
                       {"rho", s.rho},
                       {"severe", s.severe},
                       {"degenerate", s.degenerate}});
  j = Json{{"mse", r.mse},
           {"mae", r.mae},
           {"spearman_mean", r.spearman_mean},
           {"spearman_mean_severe", r.spearman_mean_severe},
           {"num_pairs", r.num_pairs},
           {"num_structures", r.num_structures},
           {"num_severe", r.num_severe},
           {"num_degenerate", r.num_degenerate},
           {"per_structure", per},
           {"ccdf_grid", r.ccdf_grid},
           {"ccdf", r.ccdf}};
}

MidrEvalReport midr_eval(const std::vector<ScenarioValue>& predictions,
                         const std::vector<ScenarioValue>& ground_truth) {
  if (predictions.size() != ground_truth.size())
    throw KeyMismatch("midr_eval: prediction/ground-truth counts differ");
  if (predictions.empty()) throw KeyMismatch("midr_eval: no pairs");

  std::map<std::pair<int, int>, double> pred;
  for (const ScenarioValue& p : predictions) {
    auto key = std::make_pair(p.structure_id, p.scenario_id);
    if (!pred.emplace(key, p.value).second)
      throw KeyMismatch("midr_eval: duplicate prediction key");
  }

  // structure id -> scenario id -> (pred, gt), ordered for determinism
  std::map<int, std::map<int, std::pair<double, double>>> grouped;
  double se = 0.0, ae = 0.0;
  for (const ScenarioValue& g : ground_truth) {
    auto it = pred.find(std::make_pair(g.structure_id, g.scenario_id));
    if (it == pred.end())
      throw KeyMismatch("midr_eval: ground truth key missing in predictions");
    double d = it->second - g.value;
    se += d * d;
    ae += std::abs(d);
    grouped[g.structure_id][g.scenario_id] = {it->second, g.value};
  }

  MidrEvalReport r;
  r.num_pairs = static_cast<int>(ground_truth.size());
  r.mse = se / r.num_pairs;
  r.mae = ae / r.num_pairs;

  double rho_sum = 0.0, rho_sum_severe = 0.0;
  int rho_n = 0, rho_n_severe = 0;
  for (const auto& [sid, by_scenario] : grouped) {
    std::vector<double> p, g;
    p.reserve(by_scenario.size());
    g.reserve(by_scenario.size());
    bool severe = false;
    for (const auto& [scid, pg] : by_scenario) {
      p.push_back(pg.first);
      g.push_back(pg.second);
      if (pg.second > 2.0) severe = true;
    }
    StructureRho sr;
    sr.structure_id = sid;
    sr.severe = severe;
    try {
      sr.rho = spearman(p, g);
    } catch (const DegenerateInput&) {
      sr.degenerate = true;
    }
    if (!sr.degenerate) {
      rho_sum += sr.rho;
      ++rho_n;
      if (severe) {
        rho_sum_severe += sr.rho;
        ++rho_n_severe;
      }
    } else {
      ++r.num_degenerate;
    }
    if (severe) ++r.num_severe;
    r.per_structure.push_back(sr);
  }
  r.num_structures = static_cast<int>(r.per_structure.size());
  r.spearman_mean = rho_n > 0 ? rho_sum / rho_n : 0.0;
  r.spearman_mean_severe =
      rho_n_severe > 0 ? rho_sum_severe / rho_n_severe : 0.0;

  // CCDF over per-structure rho, thresholds -1.00 .. 1.00 step 0.01.
  for (int t = -100; t <= 100; ++t) {
    double thr = t / 100.0;
    int above = 0;
    for (const StructureRho& s : r.per_structure)
      if (!s.degenerate && s.rho > thr) ++above;
    r.ccdf_grid.push_back(thr);
    r.ccdf.push_back(rho_n > 0 ? static_cast<double>(above) / rho_n : 0.0);
  }
  return r;
}

void to_json(Json& j, const MfspEvalReport& r) {
  Json cases = Json::array();
  for (const MfspCase& c : r.cases)
    cases.push_back(Json{{"structure_id", c.structure_id},
                         {"e", c.e},
                         {"e_room", c.e_room},
                         {"rank", c.rank},
                         {"midr_at_prediction", c.midr_at_prediction}});
  j = Json{{"avg_e", r.avg_e},
           {"avg_e_room", r.avg_e_room},
           {"avg_rank", r.avg_rank},
           {"avg_midr", r.avg_midr},
           {"num_structures", r.num_structures},
           {"frac_e_le_5", r.frac_e_le_5},
           {"frac_e_le_10", r.frac_e_le_10},
           {"frac_eroom_le_sqrt2", r.frac_eroom_le_sqrt2},
           {"frac_eroom_le_2", r.frac_eroom_le_2},
           {"frac_rank_le_5", r.frac_rank_le_5},
           {"frac_rank_le_10", r.frac_rank_le_10},
           {"cases", cases},
           {"e_grid", r.e_grid},
           {"e_cdf", r.e_cdf},
           {"eroom_grid", r.eroom_grid},
           {"eroom_cdf", r.eroom_cdf},
           {"rank_grid", r.rank_grid},
           {"rank_cdf", r.rank_cdf}};
}

namespace {

std::vector<double> cdf_over(const std::vector<double>& values,
                             const std::vector<double>& grid) {
  std::vector<double> out;
  out.reserve(grid.size());
  for (double thr : grid) {
    int le = 0;
    for (double v : values)
      if (v <= thr) ++le;
    out.push_back(values.empty()
                      ? 0.0
                      : static_cast<double>(le) /
                            static_cast<double>(values.size()));
  }
  return out;
}

std::vector<double> grid_to(double max_value, double step) {
  std::vector<double> g;
  int n = static_cast<int>(std::ceil(max_value / step)) + 1;
  g.reserve(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) g.push_back(i * step);
  return g;
}

}  // namespace

MfspEvalReport mfsp_eval(const std::vector<MfspPrediction>& predictions,
                         const std::vector<PseudoLabel>& labels,
                         const std::vector<const Structure*>& structures) {
  if (predictions.empty()) throw KeyMismatch("mfsp_eval: no predictions");
  std::map<int, const PseudoLabel*> label_of;
  for (const PseudoLabel& l : labels) label_of[l.structure_id] = &l;
  std::map<int, const Structure*> struct_of;
  for (const Structure* s : structures) struct_of[s->id] = s;

  MfspEvalReport r;
  std::vector<double> es, erooms, ranks;
  for (const MfspPrediction& p : predictions) {
    auto li = label_of.find(p.structure_id);
    auto si = struct_of.find(p.structure_id);
    if (li == label_of.end() || si == struct_of.end())
      throw KeyMismatch("mfsp_eval: structure " +
                        std::to_string(p.structure_id) +
                        " missing label or geometry");
    const PseudoLabel& lab = *li->second;
    const RoomGrid& grid = si->second->grid;

    if (p.point.x < 0.0 || p.point.x > grid.extent_x() || p.point.y < 0.0 ||
        p.point.y > grid.extent_y() || p.point.z < 0.0 ||
        p.point.z > grid.extent_z())
      throw OutOfBox("mfsp_eval: prediction outside the bounding box");

    int room = containing_room(grid, p.point.x, p.point.y, p.point.z);
    Vec3 rc = room_center(grid, room);

    MfspCase c;
    c.structure_id = p.structure_id;
    c.e = std::sqrt((p.point.x - lab.pgt_point.x) * (p.point.x - lab.pgt_point.x) +
                    (p.point.y - lab.pgt_point.y) * (p.point.y - lab.pgt_point.y) +
                    (p.point.z - lab.pgt_point.z) * (p.point.z - lab.pgt_point.z));
    double nx = (lab.pgt_point.x - rc.x) / grid.room_len_x;
    double ny = (lab.pgt_point.y - rc.y) / grid.room_len_y;
    double nz = (lab.pgt_point.z - rc.z) / grid.room_len_z;
    c.e_room = std::sqrt(nx * nx + ny * ny + nz * nz);

    c.rank = 0;
    for (std::size_t i = 0; i < lab.rooms.size(); ++i) {
      if (lab.rooms[i].room_index == room) {
        c.rank = static_cast<int>(i) + 1;
        c.midr_at_prediction = lab.rooms[i].midr;
        break;
      }
    }
    if (c.rank == 0)
      throw KeyMismatch("mfsp_eval: predicted room missing from label list");

    r.cases.push_back(c);
    r.avg_e += c.e;
    r.avg_e_room += c.e_room;
    r.avg_rank += c.rank;
    r.avg_midr += c.midr_at_prediction;
    if (c.e <= 5.0) r.frac_e_le_5 += 1.0;
    if (c.e <= 10.0) r.frac_e_le_10 += 1.0;
    if (c.e_room <= std::sqrt(2.0)) r.frac_eroom_le_sqrt2 += 1.0;
    if (c.e_room <= 2.0) r.frac_eroom_le_2 += 1.0;
    if (c.rank <= 5) r.frac_rank_le_5 += 1.0;
    if (c.rank <= 10) r.frac_rank_le_10 += 1.0;
    es.push_back(c.e);
    erooms.push_back(c.e_room);
    ranks.push_back(static_cast<double>(c.rank));
  }

  const double n = static_cast<double>(r.cases.size());
  r.num_structures = static_cast<int>(r.cases.size());
  r.avg_e /= n;
  r.avg_e_room /= n;
  r.avg_rank /= n;
  r.avg_midr /= n;
  r.frac_e_le_5 /= n;
  r.frac_e_le_10 /= n;
  r.frac_eroom_le_sqrt2 /= n;
  r.frac_eroom_le_2 /= n;
  r.frac_rank_le_5 /= n;
  r.frac_rank_le_10 /= n;

  r.e_grid = grid_to(*std::max_element(es.begin(), es.end()), 0.1);
  r.e_cdf = cdf_over(es, r.e_grid);
  r.eroom_grid = grid_to(*std::max_element(erooms.begin(), erooms.end()), 0.05);
  r.eroom_cdf = cdf_over(erooms, r.eroom_grid);
  r.rank_grid = grid_to(*std::max_element(ranks.begin(), ranks.end()), 1.0);
  r.rank_cdf = cdf_over(ranks, r.rank_grid);
  return r;
}

void write_curve_csv(std::ostream& os, const std::string& xname,
                     const std::string& yname, const std::vector<double>& x,
                     const std::vector<double>& y) {
  os << xname << "," << yname << "\n";
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i)
    os << x[i] << "," << y[i] << "\n";
}

}  // namespace firedrift
