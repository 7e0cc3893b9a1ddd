#include "firedrift/fea.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <cstdio>

namespace firedrift {

StiffnessLaw StiffnessLaw::carbon_steel() {
  StiffnessLaw law;
  law.knot_temp = {20,  100, 200, 300, 400,  500,   600,
                   700, 800, 900, 1000, 1100, 1200};
  law.knot_factor = {1.0,  1.0,  0.9,    0.8,   0.7,    0.6,    0.31,
                     0.13, 0.09, 0.0675, 0.045, 0.0225, 0.0};
  return law;
}

double StiffnessLaw::eta(double temp) const {
  if (temp <= knot_temp.front()) return knot_factor.front();
  if (temp >= knot_temp.back()) {
    if (temp > knot_temp.back()) {
      static bool warned = false;
      if (!warned) {
        std::fprintf(stderr,
                     "firedrift: stiffness law queried at %.1f degC, beyond "
                     "the tabulated range; clamping\n",
                     temp);
        warned = true;
      }
    }
    return knot_factor.back();
  }
  auto it = std::upper_bound(knot_temp.begin(), knot_temp.end(), temp);
  std::size_t i = static_cast<std::size_t>(it - knot_temp.begin());
  double t0 = knot_temp[i - 1], t1 = knot_temp[i];
  double f0 = knot_factor[i - 1], f1 = knot_factor[i];
  return f0 + (f1 - f0) * (temp - t0) / (t1 - t0);
}

namespace {

using Mat12 = Eigen::Matrix<double, 12, 12>;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat3 = Eigen::Matrix3d;
using Vec3d = Eigen::Vector3d;

Mat12 local_stiffness(double E, double G, const SectionProps& sec, double L) {
  double a = E * sec.area / L;
  double t = G * sec.torsion_j / L;
  double bz1 = 12.0 * E * sec.inertia_z / (L * L * L);
  double bz2 = 6.0 * E * sec.inertia_z / (L * L);
  double bz3 = 4.0 * E * sec.inertia_z / L;
  double bz4 = 2.0 * E * sec.inertia_z / L;
  double by1 = 12.0 * E * sec.inertia_y / (L * L * L);
  double by2 = 6.0 * E * sec.inertia_y / (L * L);
  double by3 = 4.0 * E * sec.inertia_y / L;
  double by4 = 2.0 * E * sec.inertia_y / L;

  Mat12 k = Mat12::Zero();
  k(0, 0) = a;
  k(0, 6) = -a;
  k(6, 6) = a;
  k(3, 3) = t;
  k(3, 9) = -t;
  k(9, 9) = t;
  // bending in the local x-y plane (about z)
  k(1, 1) = bz1;
  k(1, 5) = bz2;
  k(1, 7) = -bz1;
  k(1, 11) = bz2;
  k(5, 5) = bz3;
  k(5, 7) = -bz2;
  k(5, 11) = bz4;
  k(7, 7) = bz1;
  k(7, 11) = -bz2;
  k(11, 11) = bz3;
  // bending in the local x-z plane (about y); theta_y = -dw/dx flips signs
  k(2, 2) = by1;
  k(2, 4) = -by2;
  k(2, 8) = -by1;
  k(2, 10) = -by2;
  k(4, 4) = by3;
  k(4, 8) = by2;
  k(4, 10) = by4;
  k(8, 8) = by1;
  k(8, 10) = by2;
  k(10, 10) = by3;

  return k.selfadjointView<Eigen::Upper>();
}

// Rows are the local axes expressed in global coordinates.
Mat3 local_axes(const Vec3d& dir) {
  Vec3d x = dir.normalized();
  Vec3d y, z;
  if (std::abs(x.z()) > 0.999) {
    // vertical member: pick global x as the first transverse axis
    z = x.cross(Vec3d(1, 0, 0)).normalized();
    y = z.cross(x);
  } else {
    y = Vec3d(0, 0, 1).cross(x).normalized();
    z = x.cross(y);
  }
  Mat3 r;
  r.row(0) = x;
  r.row(1) = y;
  r.row(2) = z;
  return r;
}

// Consistent equivalent nodal loads for a uniform member load q_local [N/m]
// expressed along the local axes.
Vec12 member_load_vector(const Vec3d& q, double L) {
  Vec12 f = Vec12::Zero();
  f(0) = q.x() * L / 2.0;
  f(6) = q.x() * L / 2.0;
  f(1) = q.y() * L / 2.0;
  f(7) = q.y() * L / 2.0;
  f(5) = q.y() * L * L / 12.0;
  f(11) = -q.y() * L * L / 12.0;
  f(2) = q.z() * L / 2.0;
  f(8) = q.z() * L / 2.0;
  f(4) = -q.z() * L * L / 12.0;
  f(10) = q.z() * L * L / 12.0;
  return f;
}

struct DofMap {
  std::vector<int> dof;  // 6 per node in s.nodes order; -1 for constrained
  std::vector<int> fixed_dof;  // constrained-side numbering, -1 for free
  int n_free = 0;
  int n_fixed = 0;
};

DofMap build_dof_map(const Structure& s) {
  DofMap m;
  m.dof.assign(s.nodes.size() * 6, -1);
  m.fixed_dof.assign(s.nodes.size() * 6, -1);
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    bool fixed = s.nodes[i].h == 0;
    for (int c = 0; c < 6; ++c) {
      if (fixed)
        m.fixed_dof[i * 6 + c] = m.n_fixed++;
      else
        m.dof[i * 6 + c] = m.n_free++;
    }
  }
  return m;
}

struct AssembledSystem {
  Eigen::SparseMatrix<double> k_ff;
  Eigen::SparseMatrix<double> k_cf;  // constrained rows x free cols
  Eigen::VectorXd f_free;
  Eigen::VectorXd f_fixed;
};

AssembledSystem assemble(const Structure& s, const DofMap& dofs,
                         const std::vector<double>& temp_rise,
                         double load_fraction, const FeaConfig& config,
                         const NodalLoads& extra) {
  const auto idx = node_index(s);
  double E0 = s.material.young_modulus_gpa * 1e9;

  std::vector<Eigen::Triplet<double>> trip_ff, trip_cf;
  trip_ff.reserve(s.elements.size() * 78);
  Eigen::VectorXd f_free = Eigen::VectorXd::Zero(dofs.n_free);
  Eigen::VectorXd f_fixed = Eigen::VectorXd::Zero(dofs.n_fixed);

  for (std::size_t ei = 0; ei < s.elements.size(); ++ei) {
    const Element& e = s.elements[ei];
    int ia = idx.at(e.node_a);
    int ib = idx.at(e.node_b);
    const StructNode& na = s.nodes[ia];
    const StructNode& nb = s.nodes[ib];
    Vec3d d(nb.x - na.x, nb.y - na.y, nb.z - na.z);
    double L = d.norm();

    double rise = temp_rise.empty() ? 0.0 : temp_rise[ei];
    double temp = config.law.ambient + rise;
    double E = config.law.eta(temp) * E0;
    double G = E / (2.0 * (1.0 + config.poisson));

    Mat3 r = local_axes(d);
    Mat12 tr = Mat12::Zero();
    for (int b = 0; b < 4; ++b) tr.block<3, 3>(3 * b, 3 * b) = r;

    Mat12 kl = local_stiffness(E, G, config.section, L);
    Mat12 kg = tr.transpose() * kl * tr;

    // member gravity load, scaled by the current load fraction
    Vec3d q_global(0.0, 0.0, -e.gravity_load * 1e3 * load_fraction);
    Vec12 fl = member_load_vector(r * q_global, L);
    // thermal equivalent axial forces at the current temperature
    double nt = E * config.section.area * config.law.thermal_expansion * rise;
    fl(0) -= nt;
    fl(6) += nt;
    Vec12 fg = tr.transpose() * fl;

    int base[12];
    for (int c = 0; c < 6; ++c) {
      base[c] = ia * 6 + c;
      base[6 + c] = ib * 6 + c;
    }
    for (int r1 = 0; r1 < 12; ++r1) {
      int g1 = dofs.dof[base[r1]];
      int c1 = dofs.fixed_dof[base[r1]];
      if (g1 >= 0)
        f_free(g1) += fg(r1);
      else
        f_fixed(c1) += fg(r1);
      for (int r2 = 0; r2 < 12; ++r2) {
        int g2 = dofs.dof[base[r2]];
        if (g2 < 0) continue;  // u = 0 on constrained columns
        if (g1 >= 0)
          trip_ff.emplace_back(g1, g2, kg(r1, r2));
        else
          trip_cf.emplace_back(c1, g2, kg(r1, r2));
      }
    }
  }

  for (const auto& [nid, load] : extra) {
    auto it = idx.find(nid);
    if (it == idx.end()) continue;
    for (int c = 0; c < 6; ++c) {
      int g = dofs.dof[it->second * 6 + c];
      int f = dofs.fixed_dof[it->second * 6 + c];
      double v = load[c] * load_fraction;
      if (g >= 0)
        f_free(g) += v;
      else
        f_fixed(f) += v;
    }
  }

  AssembledSystem sys;
  sys.k_ff.resize(dofs.n_free, dofs.n_free);
  sys.k_ff.setFromTriplets(trip_ff.begin(), trip_ff.end());
  sys.k_cf.resize(dofs.n_fixed, dofs.n_free);
  sys.k_cf.setFromTriplets(trip_cf.begin(), trip_cf.end());
  sys.f_free = std::move(f_free);
  sys.f_fixed = std::move(f_fixed);
  return sys;
}

Eigen::VectorXd solve_spd(const Eigen::SparseMatrix<double>& k,
                          const Eigen::VectorXd& f) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(k);
  if (solver.info() != Eigen::Success)
    throw SingularSystem("stiffness factorization failed");
  if (solver.vectorD().minCoeff() <= 0.0)
    throw SingularSystem("stiffness matrix is not positive definite");
  Eigen::VectorXd u = solver.solve(f);
  if (!u.allFinite()) throw SingularSystem("non-finite displacement solution");
  return u;
}

}  // namespace

FrameSolution solve_frame(const Structure& s,
                          const std::vector<double>& temp_rise,
                          const FeaConfig& config, const NodalLoads& extra) {
  if (!temp_rise.empty() && temp_rise.size() != s.elements.size())
    throw std::invalid_argument(
        "solve_frame: temp_rise must align with elements");

  DofMap dofs = build_dof_map(s);
  std::vector<double> zero_rise;
  const std::vector<double>& rise =
      temp_rise.empty() ? zero_rise : temp_rise;

  Eigen::VectorXd u = Eigen::VectorXd::Zero(dofs.n_free);
  AssembledSystem final_sys;

  if (dofs.n_free == 0) {
    final_sys = assemble(s, dofs, rise, 1.0, config, extra);
  } else if (!config.stepped) {
    final_sys = assemble(s, dofs, rise, 1.0, config, extra);
    u = solve_spd(final_sys.k_ff, final_sys.f_free);
  } else {
    // Gravity ramp at ambient stiffness: one factorization, scaled loads.
    AssembledSystem amb = assemble(s, dofs, {}, 1.0, config, extra);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(amb.k_ff);
    if (solver.info() != Eigen::Success || solver.vectorD().minCoeff() <= 0.0)
      throw SingularSystem("stiffness matrix is not positive definite");
    for (int step = 1; step <= config.schedule.gravity_steps; ++step) {
      double f = static_cast<double>(step) / config.schedule.gravity_steps;
      u = solver.solve((f * amb.f_free).eval());
    }
    // Thermal ramp: secant solve of the total system at each temperature.
    std::vector<double> scaled(rise.size());
    for (int step = 1; step <= config.schedule.thermal_steps; ++step) {
      double f = static_cast<double>(step) / config.schedule.thermal_steps;
      for (std::size_t i = 0; i < rise.size(); ++i) scaled[i] = f * rise[i];
      AssembledSystem sys = assemble(s, dofs, scaled, 1.0, config, extra);
      u = solve_spd(sys.k_ff, sys.f_free);
      if (step == config.schedule.thermal_steps) final_sys = std::move(sys);
    }
    if (config.schedule.thermal_steps == 0)
      final_sys = assemble(s, dofs, rise, 1.0, config, extra);
  }

  FrameSolution out;
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    std::array<double, 6> d{};
    for (int c = 0; c < 6; ++c) {
      int g = dofs.dof[i * 6 + c];
      d[c] = g >= 0 ? u(g) : 0.0;
    }
    out.displacements[s.nodes[i].id] = d;
  }
  if (dofs.n_fixed > 0) {
    Eigen::VectorXd r = -final_sys.f_fixed;
    if (dofs.n_free > 0) r += final_sys.k_cf * u;
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
      if (s.nodes[i].h != 0) continue;
      std::array<double, 6> rv{};
      for (int c = 0; c < 6; ++c) rv[c] = r(dofs.fixed_dof[i * 6 + c]);
      out.reactions[s.nodes[i].id] = rv;
    }
  }
  return out;
}

std::map<int, std::array<double, 6>> assemble_and_solve(
    const Structure& s, const std::vector<double>& temp_rise,
    const FeaConfig& config, const NodalLoads& extra) {
  return solve_frame(s, temp_rise, config, extra).displacements;
}

IdrField compute_idr(const Structure& s,
                     const std::map<int, std::array<double, 6>>& disp) {
  double height = s.grid.story_height();
  IdrField out;
  if (height <= 0.0) return out;

  // (quantized x, quantized y, h) -> node id
  auto key = [](double x, double y, int h) {
    return std::tuple<long long, long long, int>(
        std::llround(x * 1e6), std::llround(y * 1e6), h);
  };
  std::map<std::tuple<long long, long long, int>, int> plan;
  for (const StructNode& n : s.nodes) plan[key(n.x, n.y, n.h)] = n.id;

  for (const StructNode& n : s.nodes) {
    if (n.h < 1) continue;
    auto below = plan.find(key(n.x, n.y, n.h - 1));
    if (below == plan.end()) {
      ++out.skipped;
      continue;
    }
    const auto& du = disp.at(n.id);
    const auto& dl = disp.at(below->second);
    double dx = du[0] - dl[0];
    double dy = du[1] - dl[1];
    double idr = std::sqrt(dx * dx + dy * dy) / height * 100.0;
    out.node_idr[n.id] = idr;
    if (idr > out.midr) out.midr = idr;
  }
  return out;
}

SimResult run_scenario(const Structure& s, int scenario_id,
                       const std::vector<double>& temp_rise,
                       const FeaConfig& config) {
  SimResult r;
  r.structure_id = s.id;
  r.scenario_id = scenario_id;
  r.node_displacements = assemble_and_solve(s, temp_rise, config);
  IdrField idr = compute_idr(s, r.node_displacements);
  r.node_idr = std::move(idr.node_idr);
  r.midr = idr.midr;
  r.idr_skipped = idr.skipped;
  return r;
}

double total_gravity_load(const Structure& s) {
  double total = 0.0;
  for (const Element& e : s.elements) total += e.gravity_load * 1e3 * e.length;
  return total;
}

void to_json(Json& j, const SimResult& r) {
  Json disp = Json::object();
  for (const auto& [nid, d] : r.node_displacements)
    disp[std::to_string(nid)] = d;
  Json idr = Json::object();
  for (const auto& [nid, v] : r.node_idr) idr[std::to_string(nid)] = v;
  j = Json{{"structure_id", r.structure_id},
           {"scenario_id", r.scenario_id},
           {"midr", r.midr},
           {"idr_skipped", r.idr_skipped},
           {"node_idr", idr},
           {"node_displacements", disp}};
}

void from_json(const Json& j, SimResult& r) {
  j.at("structure_id").get_to(r.structure_id);
  j.at("scenario_id").get_to(r.scenario_id);
  j.at("midr").get_to(r.midr);
  j.at("idr_skipped").get_to(r.idr_skipped);
  r.node_idr.clear();
  for (const auto& [k, v] : j.at("node_idr").items())
    r.node_idr[std::stoi(k)] = v.get<double>();
  r.node_displacements.clear();
  for (const auto& [k, v] : j.at("node_displacements").items())
    r.node_displacements[std::stoi(k)] = v.get<std::array<double, 6>>();
}

}  // namespace firedrift
