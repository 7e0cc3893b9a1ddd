#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "firedrift/graph.hpp"
#include "firedrift/nn.hpp"

namespace firedrift {

struct LayerOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// How the graph-level MIDR prediction is produced and trained.
//   TwoStep:   node-IDR head first, then MIDR head on the frozen backbone,
//              then a full fine-tune (the proposed transfer-learning scheme).
//   Strawman1: MIDR head trained directly, no node-level supervision.
//   Strawman2: node-IDR head only; MIDR = max over node predictions.
enum class MidrMethod { TwoStep, Strawman1, Strawman2 };

std::string to_string(MidrMethod m);
MidrMethod midr_method_from_string(const std::string& name);

struct GnnConfig {
  int node_in = kNodeFeatures;
  int edge_in = kEdgeFeatures;
  int node_dim = 32;
  int edge_dim = 32;
  int msg_hidden = 64;
  int upd_hidden = 64;
  int eu_hidden = 32;
  int max_layers = 7;
  bool edge_update = true;

  static GnnConfig small_size(bool edge_update = true);
  static GnnConfig large_size(bool edge_update = true);
};

void to_json(Json& j, const GnnConfig& c);
void from_json(const Json& j, GnnConfig& c);

// Input/target normalization fitted on the training split and carried with
// the model.
struct NormStats {
  FeatureStats node;
  FeatureStats edge;
  ScalarStats idr;
  ScalarStats midr;
};

void to_json(Json& j, const NormStats& s);
void from_json(const Json& j, NormStats& s);

// Block-diagonal concatenation of graph samples with the per-layer index
// structure precomputed. Layer k (1-based) runs only over graphs with at
// least k stories; shallower graphs keep their embeddings from their own
// final layer, so batching is exactly equivalent to per-sample forwards.
struct GraphBatch {
  Mat node_x;  // total nodes x node_in, normalized
  Mat edge_x;  // total directed edges x edge_in, normalized
  int num_graphs = 0;
  int depth = 0;  // deepest graph in the batch
  std::vector<int> node_bounds;  // G+1 row bounds of each graph's node block
  std::vector<int> stories;      // per graph
  std::vector<int> structure_ids;
  std::vector<int> scenario_ids;
  // Per layer k (0-based): rows into edge_x that are active, their source and
  // destination node rows, and a 0/1 node activity column for masking.
  std::vector<std::vector<int>> layer_edges;
  std::vector<std::vector<int>> layer_src;
  std::vector<std::vector<int>> layer_dst;
  std::vector<Mat> layer_mask;
  std::vector<bool> layer_full;  // true when every graph is active at k

  int total_nodes() const { return static_cast<int>(node_x.rows()); }
};

GraphBatch make_batch(const std::vector<const GraphSample*>& samples,
                      const NormStats& stats, int max_layers);

// Encoders plus the message-passing stack, shared between the MIDR surrogate
// and the MFSP predictor. Messages flow along directed edges
// (concat(source embedding, edge embedding) -> MLP), are max-aggregated per
// destination, and update nodes residually. With edge_update enabled, edge
// embeddings are refined each layer from the updated endpoint embeddings.
class GnnBackbone {
 public:
  GnnBackbone() = default;

  static GnnBackbone create(ParamStore& store, const GnnConfig& cfg,
                            Rng& rng);

  struct Out {
    Var node_emb;  // N x node_dim, each graph at its own depth
    Var edge_emb;  // 2E x edge_dim after the final refinement
    Var pooled;    // G x 2*node_dim, mean || max over each graph's nodes
  };

  // `node_x` / `edge_x` are normalized features already on the tape, so
  // callers can feed constants or differentiable expressions alike.
  Out run(Tape& tape, TapeBinding& bind, const GraphBatch& batch, Var node_x,
          Var edge_x) const;

  // Just the edge encoder; with edge_update disabled, Out.edge_emb equals
  // this at any depth.
  Var encode_edges(Tape& tape, TapeBinding& bind, Var edge_x) const;

  std::size_t parameter_count() const;
  const std::vector<Param*>& parameters() const { return params_; }

  // Copy parameter values from a backbone of identical configuration.
  void copy_values_from(const GnnBackbone& other);

  const GnnConfig& config() const { return cfg_; }

 private:
  GnnConfig cfg_;
  Mlp node_enc_;
  Mlp edge_enc_;
  std::vector<Mlp> msg_;  // one per layer
  std::vector<Mlp> upd_;  // one per layer
  Mlp eu_;                // shared across layers
  std::vector<Param*> params_;
};

// Pieces of one batched forward pass.
struct GnnForward {
  Var node_emb;
  Var pooled;
  Var node_pred;  // N x 1 normalized node IDR
  Var midr_pred;  // G x 1 normalized MIDR (method-dependent space)
};

// The MIDR surrogate: backbone plus a per-node IDR head and a pooled-graph
// MIDR head. Once trained it doubles as the differentiable agent for MFSP
// search.
class MidrModel {
 public:
  MidrModel(const GnnConfig& cfg, MidrMethod method, std::uint64_t seed);

  const GnnConfig& config() const { return cfg_; }
  MidrMethod method() const { return method_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const GnnBackbone& backbone() const { return backbone_; }
  NormStats& norm() { return norm_; }
  const NormStats& norm() const { return norm_; }

  std::size_t parameter_count() const { return store_.parameter_count(); }

  // Freeze or unfreeze parts for the two training steps.
  void set_backbone_trainable(bool trainable);
  void set_head1_trainable(bool trainable);
  void set_head2_trainable(bool trainable);

  GnnForward run(Tape& tape, TapeBinding& bind, const GraphBatch& batch,
                 Var node_x, Var edge_x) const;
  GnnForward run(Tape& tape, TapeBinding& bind,
                 const GraphBatch& batch) const;

  // head2 on externally computed pooled embeddings (frozen-backbone step).
  Var head2_on(Tape& tape, TapeBinding& bind, Var pooled) const;

  // Map a normalized midr_pred back to percent on the tape (affine).
  Var denorm_midr(Tape& tape, Var midr_pred) const;

  // Inference in percent units.
  Eigen::VectorXd predict_node_idr(const GraphSample& sample) const;
  double predict_midr(const GraphSample& sample) const;
  Eigen::VectorXd predict_midr_batch(
      const std::vector<const GraphSample*>& samples) const;

  // Pooled embeddings as plain values (cached inputs for the frozen step).
  Mat pooled_embeddings(const GraphBatch& batch) const;

 private:
  GnnConfig cfg_;
  MidrMethod method_;
  ParamStore store_;
  GnnBackbone backbone_;
  Linear head1_;
  Linear head2_;
  NormStats norm_;
};

}  // namespace firedrift
