#pragma once

#include <stdexcept>
#include <string>

#include "firedrift/mfsp.hpp"
#include "firedrift/train_midr.hpp"

namespace firedrift {

struct BundleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Model bundles are single JSON files holding the configuration, method or
// init mode, normalization stats, training history, split ids and every
// parameter matrix. Doubles survive the round trip exactly, so a reloaded
// model reproduces its predictions bit for bit.
void save_midr_bundle(const std::string& path, const MidrModel& model,
                      const TrainConfig& cfg, const TrainResult& result);
MidrModel load_midr_bundle(const std::string& path);

void save_mfsp_bundle(const std::string& path, const MfspModel& model,
                      const MfspConfig& cfg, const MfspTrainResult& result);
MfspModel load_mfsp_bundle(const std::string& path);

}  // namespace firedrift
