#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "firedrift/gnn.hpp"
#include "firedrift/structgen.hpp"
#include "firedrift/train_midr.hpp"

namespace firedrift {

struct FrozenAgentViolated : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RankedRoom {
  int room_index = 0;
  double midr = 0.0;  // agent-predicted, percent
};

void to_json(Json& j, const RankedRoom& r);
void from_json(const Json& j, RankedRoom& r);

// Surrogate ground truth for one structure: the room-center fire location
// the agent scores worst, plus the full per-room ranking.
struct PseudoLabel {
  int structure_id = 0;
  Vec3 pgt_point;  // center of the worst room, meters
  int pgt_room = 0;
  double pgt_midr = 0.0;
  std::vector<RankedRoom> rooms;  // descending MIDR, ties broken low index
};

void to_json(Json& j, const PseudoLabel& p);
void from_json(const Json& j, PseudoLabel& p);

// Scores every room center with the agent and takes the argmax.
PseudoLabel pseudo_label(const Structure& s, const MidrModel& agent);

enum class MfspInit { DeNovo, Transfer };
enum class MfspLoss { Mse, Hybrid };

std::string to_string(MfspInit i);
MfspInit mfsp_init_from_string(const std::string& name);
std::string to_string(MfspLoss l);
MfspLoss mfsp_loss_from_string(const std::string& name);

struct MfspConfig {
  MfspLoss loss = MfspLoss::Mse;
  double w1 = 50.0;  // weight of the (negated) predicted-MIDR term
  double w2 = 1.0;   // weight of the squared-distance term
  int epochs = 200;
  int batch_size = 32;
  int patience = 20;
  double lr = 1e-3;
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
  bool verbose = false;
};

void to_json(Json& j, const MfspConfig& c);
void from_json(const Json& j, MfspConfig& c);

// Point predictor: GNN backbone pooled into a graph embedding, then an MLP
// head whose sigmoid output is scaled by the building's bounding box. The
// transfer flavor sees the full fire-aware encoding with a virtual fire
// point (random in training, bounding-box center at inference); the de-novo
// flavor sees only node coordinates.
class MfspModel {
 public:
  MfspModel(const GnnConfig& cfg, MfspInit init, std::uint64_t seed);

  const GnnConfig& config() const { return cfg_; }
  MfspInit init() const { return init_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  NormStats& norm() { return norm_; }
  const NormStats& norm() const { return norm_; }
  std::size_t parameter_count() const { return store_.parameter_count(); }

  // Transfer setup: copy the agent's backbone weights and input
  // normalization. Configurations must match.
  void adopt_agent(const MidrModel& agent);

  // Encoding used by this flavor, given the virtual fire point.
  GraphSample encode_for(const Structure& s, const FirePoint& vfp) const;

  // Batched predicted points in meters: sigmoid(head(pooled)) * extents.
  // `extents` is a G x 3 tape value of bounding-box dimensions.
  Var run_points(Tape& tape, TapeBinding& bind, const GraphBatch& batch,
                 Var node_x, Var edge_x, Var extents) const;

  // Inference: VFP at the bounding-box center.
  Vec3 predict(const Structure& s) const;
  // Inference with an explicit VFP (used to measure VFP sensitivity).
  Vec3 predict_with(const Structure& s, const FirePoint& vfp) const;

 private:
  GnnConfig cfg_;
  MfspInit init_;
  ParamStore store_;
  GnnBackbone backbone_;
  Mlp head_;
  NormStats norm_;
};

// Rebuilds the agent's 13-column node features for `agent_batch` with the
// fire point replaced by the per-graph `points` (G x 3, meters) and applies
// the agent's input normalization, entirely on the tape so gradients flow
// from the agent's output back into `points`. The fire floor is fed as the
// continuous value z/H here; integer flooring applies everywhere else.
// `node_xyzh` is the N x 4 raw (x, y, z, h) block and `inv_story` the N x 1
// per-node 1/story-height column.
Var agent_features_at(Tape& tape, const MidrModel& agent,
                      const GraphBatch& agent_batch, const Mat& node_xyzh,
                      const Mat& inv_story, Var points);

struct MfspTrainResult {
  std::vector<EpochLog> history;
  double best_val_loss = 0.0;
  std::vector<int> train_structures;
  std::vector<int> val_structures;
  // Mean RMS scatter of validation predictions under VFP resampling, meters
  // (zero for de-novo models, whose input ignores the fire point).
  double vfp_spread = 0.0;
};

// Trains the point predictor against pseudo-labels. In hybrid mode the
// predicted point is fed back into the frozen agent as the fire location and
// the loss adds -w1 * mean predicted MIDR to w2 * mean squared distance.
// The agent is never updated; its parameter hash is checked before/after.
MfspTrainResult train_mfsp(MfspModel& model,
                           const std::vector<const Structure*>& structures,
                           const std::vector<PseudoLabel>& labels,
                           const MidrModel& agent, const MfspConfig& cfg);

}  // namespace firedrift
