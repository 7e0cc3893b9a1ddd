#include "firedrift/bundle.hpp"

#include <fstream>

namespace firedrift {

namespace {

Json params_to_json(const ParamStore& store) {
  Json j = Json::object();
  for (const Param* p : store.all()) {
    Json flat = Json::array();
    for (int r = 0; r < p->value.rows(); ++r)
      for (int c = 0; c < p->value.cols(); ++c) flat.push_back(p->value(r, c));
    j[p->name] = Json{{"rows", p->value.rows()},
                      {"cols", p->value.cols()},
                      {"data", std::move(flat)}};
  }
  return j;
}

void params_from_json(const Json& j, ParamStore& store) {
  std::size_t seen = 0;
  for (Param* p : store.all()) {
    if (!j.contains(p->name))
      throw BundleError("bundle: missing parameter " + p->name);
    const Json& e = j.at(p->name);
    int rows = e.at("rows").get<int>();
    int cols = e.at("cols").get<int>();
    if (rows != p->value.rows() || cols != p->value.cols())
      throw BundleError("bundle: shape mismatch for " + p->name);
    const Json& data = e.at("data");
    if (static_cast<int>(data.size()) != rows * cols)
      throw BundleError("bundle: bad data length for " + p->name);
    int at = 0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        p->value(r, c) = data[static_cast<std::size_t>(at++)].get<double>();
    ++seen;
  }
  if (seen != j.size())
    throw BundleError("bundle: extra parameters in file");
}

void write_file(const std::string& path, const Json& j) {
  std::ofstream os(path);
  if (!os) throw BundleError("bundle: cannot write " + path);
  os << j.dump(2) << "\n";
  if (!os) throw BundleError("bundle: write failed for " + path);
}

Json read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw BundleError("bundle: cannot read " + path);
  Json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw BundleError("bundle: parse error in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace

void save_midr_bundle(const std::string& path, const MidrModel& model,
                      const TrainConfig& cfg, const TrainResult& result) {
  Json j{{"format_version", 1},
         {"kind", "midr"},
         {"config", model.config()},
         {"method", to_string(model.method())},
         {"norm", model.norm()},
         {"train_config", cfg},
         {"best_val_loss", result.best_val_loss},
         {"train_structures", result.train_structures},
         {"val_structures", result.val_structures},
         {"history", result.history},
         {"params", params_to_json(model.params())}};
  write_file(path, j);
}

MidrModel load_midr_bundle(const std::string& path) {
  Json j = read_file(path);
  if (j.value("kind", "") != "midr")
    throw BundleError("bundle: " + path + " is not a midr bundle");
  GnnConfig cfg = j.at("config").get<GnnConfig>();
  MidrMethod method =
      midr_method_from_string(j.at("method").get<std::string>());
  MidrModel model(cfg, method, 0);
  model.norm() = j.at("norm").get<NormStats>();
  params_from_json(j.at("params"), model.params());
  return model;
}

void save_mfsp_bundle(const std::string& path, const MfspModel& model,
                      const MfspConfig& cfg, const MfspTrainResult& result) {
  Json j{{"format_version", 1},
         {"kind", "mfsp"},
         {"config", model.config()},
         {"init", to_string(model.init())},
         {"norm", model.norm()},
         {"train_config", cfg},
         {"best_val_loss", result.best_val_loss},
         {"vfp_spread", result.vfp_spread},
         {"train_structures", result.train_structures},
         {"val_structures", result.val_structures},
         {"history", result.history},
         {"params", params_to_json(model.params())}};
  write_file(path, j);
}

MfspModel load_mfsp_bundle(const std::string& path) {
  Json j = read_file(path);
  if (j.value("kind", "") != "mfsp")
    throw BundleError("bundle: " + path + " is not an mfsp bundle");
  GnnConfig cfg = j.at("config").get<GnnConfig>();
  MfspInit init = mfsp_init_from_string(j.at("init").get<std::string>());
  MfspModel model(cfg, init, 0);
  model.norm() = j.at("norm").get<NormStats>();
  params_from_json(j.at("params"), model.params());
  return model;
}

}  // namespace firedrift
