#include "firedrift/graph.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace firedrift {

namespace {

void fill_edges(const Structure& s, GraphSample& g) {
  auto idx = node_index(s);
  Eigen::Index e2 = static_cast<Eigen::Index>(s.elements.size()) * 2;
  g.edge_attrs.resize(e2, kEdgeFeatures);
  g.edge_src.resize(static_cast<std::size_t>(e2));
  g.edge_dst.resize(static_cast<std::size_t>(e2));

  for (std::size_t i = 0; i < s.elements.size(); ++i) {
    const Element& e = s.elements[i];
    Eigen::RowVectorXd row(kEdgeFeatures);
    row << s.material.young_modulus_gpa, s.material.yield_strength_mpa,
        s.material.hardening_ratio, e.length, static_cast<double>(e.floor),
        e.kind == ElementKind::BeamX ? 1.0 : 0.0,
        e.kind == ElementKind::BeamY ? 1.0 : 0.0,
        e.kind == ElementKind::Column ? 1.0 : 0.0, e.gravity_load;
    int a = idx.at(e.node_a);
    int b = idx.at(e.node_b);
    g.edge_attrs.row(static_cast<Eigen::Index>(2 * i)) = row;
    g.edge_attrs.row(static_cast<Eigen::Index>(2 * i + 1)) = row;
    g.edge_src[2 * i] = a;
    g.edge_dst[2 * i] = b;
    g.edge_src[2 * i + 1] = b;
    g.edge_dst[2 * i + 1] = a;
  }
}

}  // namespace

GraphSample encode(const Structure& s, const FirePoint& fire,
                   int scenario_id) {
  GraphSample g;
  g.structure_id = s.id;
  g.scenario_id = scenario_id;
  g.num_stories = s.num_stories();
  g.grid = s.grid;

  Eigen::Index n = static_cast<Eigen::Index>(s.nodes.size());
  g.node_attrs.resize(n, kNodeFeatures);
  g.node_ids.resize(s.nodes.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const StructNode& nd = s.nodes[static_cast<std::size_t>(i)];
    double dx = nd.x - fire.x;
    double dy = nd.y - fire.y;
    double dz = nd.z - fire.z;
    double ls = std::sqrt(dx * dx + dy * dy + dz * dz);
    g.node_attrs.row(i) << nd.x, nd.y, nd.z, static_cast<double>(nd.h),
        fire.x, fire.y, fire.z, static_cast<double>(fire.h), dx, dy, dz,
        static_cast<double>(nd.h - fire.h), ls;
    g.node_ids[static_cast<std::size_t>(i)] = nd.id;
  }
  fill_edges(s, g);
  return g;
}

GraphSample encode_spatial(const Structure& s) {
  GraphSample g;
  g.structure_id = s.id;
  g.scenario_id = 0;
  g.num_stories = s.num_stories();
  g.grid = s.grid;

  Eigen::Index n = static_cast<Eigen::Index>(s.nodes.size());
  g.node_attrs.resize(n, kNodeFeaturesSpatial);
  g.node_ids.resize(s.nodes.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const StructNode& nd = s.nodes[static_cast<std::size_t>(i)];
    g.node_attrs.row(i) << nd.x, nd.y, nd.z;
    g.node_ids[static_cast<std::size_t>(i)] = nd.id;
  }
  fill_edges(s, g);
  return g;
}

FeatureStats fit_stats(const std::vector<const Mat*>& mats) {
  if (mats.empty()) throw std::invalid_argument("fit_stats: no matrices");
  Eigen::Index cols = mats.front()->cols();
  FeatureStats stats;
  stats.min = Eigen::RowVectorXd::Constant(
      cols, std::numeric_limits<double>::infinity());
  stats.max = Eigen::RowVectorXd::Constant(
      cols, -std::numeric_limits<double>::infinity());
  for (const Mat* m : mats) {
    if (m->cols() != cols)
      throw std::invalid_argument("fit_stats: column count mismatch");
    if (m->rows() == 0) continue;
    stats.min = stats.min.cwiseMin(m->colwise().minCoeff());
    stats.max = stats.max.cwiseMax(m->colwise().maxCoeff());
  }
  if (!stats.min.allFinite() || !stats.max.allFinite())
    throw std::invalid_argument("fit_stats: no rows");
  return stats;
}

void normalize_coeffs(const FeatureStats& stats, Eigen::RowVectorXd& scale,
                      Eigen::RowVectorXd& shift) {
  Eigen::Index cols = stats.min.size();
  scale.resize(cols);
  shift.resize(cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    double range = stats.max(c) - stats.min(c);
    if (range > 0.0) {
      scale(c) = 1.0 / range;
      shift(c) = -stats.min(c) / range;
    } else {
      scale(c) = 0.0;
      shift(c) = 0.0;
    }
  }
}

Mat normalize(const Mat& x, const FeatureStats& stats) {
  if (x.cols() != stats.min.size())
    throw std::invalid_argument("normalize: column count mismatch");
  Eigen::RowVectorXd scale, shift;
  normalize_coeffs(stats, scale, shift);
  return (x.array().rowwise() * scale.array()).rowwise() + shift.array();
}

ScalarStats fit_scalar_stats(const std::vector<double>& values) {
  if (values.empty())
    throw std::invalid_argument("fit_scalar_stats: no values");
  ScalarStats s;
  s.min = values.front();
  s.max = values.front();
  for (double v : values) {
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  return s;
}

void to_json(Json& j, const FeatureStats& s) {
  std::vector<double> mn(s.min.begin(), s.min.end());
  std::vector<double> mx(s.max.begin(), s.max.end());
  j = Json{{"min", mn}, {"max", mx}};
}

void from_json(const Json& j, FeatureStats& s) {
  auto mn = j.at("min").get<std::vector<double>>();
  auto mx = j.at("max").get<std::vector<double>>();
  s.min = Eigen::Map<Eigen::RowVectorXd>(mn.data(),
                                         static_cast<Eigen::Index>(mn.size()));
  s.max = Eigen::Map<Eigen::RowVectorXd>(mx.data(),
                                         static_cast<Eigen::Index>(mx.size()));
}

void to_json(Json& j, const ScalarStats& s) {
  j = Json{{"min", s.min}, {"max", s.max}};
}

void from_json(const Json& j, ScalarStats& s) {
  j.at("min").get_to(s.min);
  j.at("max").get_to(s.max);
}

}  // namespace firedrift
