#pragma once

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "firedrift/mfsp.hpp"
#include "firedrift/structure.hpp"

namespace firedrift {

struct DegenerateInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct KeyMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OutOfBox : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rank correlation with average ranks on ties. Throws DegenerateInput when
// either list is constant or shorter than two entries.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// One (structure, scenario) MIDR value, percent.
struct ScenarioValue {
  int structure_id = 0;
  int scenario_id = 0;
  double value = 0.0;
};

struct StructureRho {
  int structure_id = 0;
  double rho = 0.0;
  bool severe = false;      // any ground-truth MIDR > 2%
  bool degenerate = false;  // rho undefined, excluded from means
};

struct MidrEvalReport {
  double mse = 0.0;  // percent^2
  double mae = 0.0;  // percent
  double spearman_mean = 0.0;
  double spearman_mean_severe = 0.0;
  int num_pairs = 0;
  int num_structures = 0;
  int num_severe = 0;
  int num_degenerate = 0;
  std::vector<StructureRho> per_structure;
  // Fraction of (non-degenerate) structures with rho strictly above each
  // threshold; thresholds run -1.00 .. 1.00 in 0.01 steps.
  std::vector<double> ccdf_grid;
  std::vector<double> ccdf;
};

void to_json(Json& j, const MidrEvalReport& r);

// Pairs predictions and ground truths by (structure, scenario) key; both
// lists must contain exactly the same keys.
MidrEvalReport midr_eval(const std::vector<ScenarioValue>& predictions,
                         const std::vector<ScenarioValue>& ground_truth);

struct MfspPrediction {
  int structure_id = 0;
  Vec3 point;  // meters
};

struct MfspCase {
  int structure_id = 0;
  double e = 0.0;       // distance to the pseudo ground truth point, meters
  double e_room = 0.0;  // room-normalized distance between room centers
  int rank = 0;         // 1-based rank of the predicted room
  double midr_at_prediction = 0.0;  // agent MIDR of the predicted room
};

struct MfspEvalReport {
  double avg_e = 0.0;
  double avg_e_room = 0.0;
  double avg_rank = 0.0;
  double avg_midr = 0.0;
  int num_structures = 0;
  double frac_e_le_5 = 0.0;
  double frac_e_le_10 = 0.0;
  double frac_eroom_le_sqrt2 = 0.0;
  double frac_eroom_le_2 = 0.0;
  double frac_rank_le_5 = 0.0;
  double frac_rank_le_10 = 0.0;
  std::vector<MfspCase> cases;
  // CDF tables (fraction <= threshold).
  std::vector<double> e_grid, e_cdf;
  std::vector<double> eroom_grid, eroom_cdf;
  std::vector<double> rank_grid, rank_cdf;
};

void to_json(Json& j, const MfspEvalReport& r);

// Scores point predictions against pseudo-labels. Every prediction needs its
// structure and label; predictions outside the bounding box raise OutOfBox.
MfspEvalReport mfsp_eval(const std::vector<MfspPrediction>& predictions,
                         const std::vector<PseudoLabel>& labels,
                         const std::vector<const Structure*>& structures);

// Two-column CSV with a header row, for external plotting.
void write_curve_csv(std::ostream& os, const std::string& xname,
                     const std::string& yname, const std::vector<double>& x,
                     const std::vector<double>& y);

}  // namespace firedrift
