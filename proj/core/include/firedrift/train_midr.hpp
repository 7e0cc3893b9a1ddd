#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "firedrift/gnn.hpp"

namespace firedrift {

struct DataEmpty : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One training example: an encoded fire scenario with its simulated per-node
// IDRs and structure-level MIDR, in percent.
struct LabeledGraph {
  GraphSample sample;
  Eigen::VectorXd node_idr;  // aligned with sample node rows
  double midr = 0.0;
};

struct TrainConfig {
  int epochs_step1 = 200;
  int epochs_step2 = 200;
  int epochs_finetune = 200;
  int batch_size = 32;
  int patience = 20;
  double lr = 1e-3;
  double finetune_lr_scale = 0.1;
  double train_fraction = 0.8;  // split is by structure, not by scenario
  std::uint64_t seed = 1;
  bool verbose = false;
};

void to_json(Json& j, const TrainConfig& c);
void from_json(const Json& j, TrainConfig& c);

struct EpochLog {
  std::string phase;
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

void to_json(Json& j, const EpochLog& e);
void from_json(const Json& j, EpochLog& e);

struct TrainResult {
  std::vector<EpochLog> history;
  double best_val_loss = 0.0;
  std::vector<int> train_structures;
  std::vector<int> val_structures;
};

// Fits normalization on the training split, writes it into the model, then
// trains according to model.method():
//   TwoStep:   node-IDR phase, frozen-backbone MIDR head phase (on cached
//              pooled embeddings), then a full fine-tune at reduced rate.
//   Strawman1: direct MIDR training of backbone + graph head.
//   Strawman2: node-IDR phase only.
// Each phase early-stops on validation loss and restores its best snapshot.
TrainResult train_midr(MidrModel& model, const std::vector<LabeledGraph>& data,
                       const TrainConfig& cfg);

}  // namespace firedrift
