#pragma once

#include <vector>

#include "firedrift/autodiff.hpp"
#include "firedrift/structure.hpp"

namespace firedrift {

// Node feature columns (13): x, y, z, h, x_f, y_f, z_f, h_f,
// x - x_f, y - y_f, z - z_f, h - h_f, straight-line distance to the fire.
inline constexpr int kNodeFeatures = 13;
// De-novo node features (3): x, y, z. No fire information.
inline constexpr int kNodeFeaturesSpatial = 3;
// Edge feature columns (9): E0 [GPa], f_y [MPa], hardening ratio, length,
// floor, one-hot kind (beam_x, beam_y, column), gravity load [kN/m].
inline constexpr int kEdgeFeatures = 9;

struct GraphSample {
  int structure_id = 0;
  int scenario_id = 0;
  int num_stories = 0;
  Mat node_attrs;  // N x 13 (or N x 3 for spatial-only samples), raw units
  Mat edge_attrs;  // 2E x 9, both directions of every element
  std::vector<int> edge_src;  // node row indices, length 2E
  std::vector<int> edge_dst;
  std::vector<int> node_ids;  // row -> structure node id
  RoomGrid grid;
};

// Full encoding with fire-point features. Every element contributes two
// directed edges (a->b at row 2i, b->a at row 2i+1) with identical
// attributes.
GraphSample encode(const Structure& s, const FirePoint& fire,
                   int scenario_id = 0);

// Spatial-only encoding for models that must not see the fire point.
GraphSample encode_spatial(const Structure& s);

// Per-column min/max over a feature matrix set.
struct FeatureStats {
  Eigen::RowVectorXd min;
  Eigen::RowVectorXd max;

  int cols() const { return static_cast<int>(min.size()); }
};

FeatureStats fit_stats(const std::vector<const Mat*>& mats);

// (x - min) / (max - min) columnwise; constant columns map to 0.
Mat normalize(const Mat& x, const FeatureStats& stats);

// Affine coefficients of the normalization: norm = x * scale + shift
// (rowwise), with scale = 1/(max-min) and shift = -min*scale; constant
// columns get scale = shift = 0. Lets the same transform run on a Tape.
void normalize_coeffs(const FeatureStats& stats, Eigen::RowVectorXd& scale,
                      Eigen::RowVectorXd& shift);

struct ScalarStats {
  double min = 0.0;
  double max = 0.0;

  double normalize(double x) const {
    double range = max - min;
    return range > 0.0 ? (x - min) / range : 0.0;
  }
  double denormalize(double n) const {
    double range = max - min;
    return range > 0.0 ? n * range + min : min;
  }
};

ScalarStats fit_scalar_stats(const std::vector<double>& values);

void to_json(Json& j, const FeatureStats& s);
void from_json(const Json& j, FeatureStats& s);
void to_json(Json& j, const ScalarStats& s);
void from_json(const Json& j, ScalarStats& s);

}  // namespace firedrift
