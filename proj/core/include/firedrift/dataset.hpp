#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "firedrift/fea.hpp"
#include "firedrift/structure.hpp"

namespace firedrift {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One dataset directory:
//   manifest.json                       corpus summary
//   structures/<id>.json                generated structures
//   scenarios/<structure>/fires.json    sampled fire points
//   scenarios/<structure>/<fire>.json   simulation results
//   pseudo_labels.json                  agent-derived worst-room labels
//   models/<name>.json                  trained model bundles
//   reports/<name>.json|.csv            evaluation output
//   runs/<command>.json                 per-command run manifests
struct DatasetManifest {
  int format_version = 1;
  std::uint64_t seed = 0;
  int requested = 0;  // structures asked for, before the gravity filter
  double labeled_fraction = 0.0;
  std::vector<int> structure_ids;  // survivors, ascending
  std::vector<int> labeled_ids;
  std::vector<int> unlabeled_ids;
  int fires_per_structure = 0;  // set once simulation has run
};

void to_json(Json& j, const DatasetManifest& m);
void from_json(const Json& j, DatasetManifest& m);

// Written before a command touches any output, then rewritten with the
// elapsed time when it finishes. Timestamps live only here, never in
// reports, so seeded reruns stay byte-identical where it matters.
struct RunManifest {
  std::string command;
  std::string tool_version;
  std::uint64_t seed = 0;
  Json config = Json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::string> failures;  // flagged work items, e.g. singular solves
  std::string started_at;             // ISO 8601 UTC
  double wall_seconds = 0.0;
};

void to_json(Json& j, const RunManifest& m);
void from_json(const Json& j, RunManifest& m);

std::string iso_timestamp_utc();

void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

void ensure_dataset_dirs(const std::string& root);

std::string manifest_path(const std::string& root);
std::string structure_path(const std::string& root, int id);
std::string scenario_path(const std::string& root, int structure_id,
                          int scenario_id);
std::string fires_path(const std::string& root, int structure_id);
std::string label_path(const std::string& root);
std::string model_path(const std::string& root, const std::string& name);
std::string report_path(const std::string& root, const std::string& name);
std::string run_manifest_path(const std::string& root,
                              const std::string& command);

void save_dataset_manifest(const std::string& root, const DatasetManifest& m);
DatasetManifest load_dataset_manifest(const std::string& root);

void save_structure(const std::string& root, const Structure& s);
Structure load_structure(const std::string& root, int id);

bool scenario_exists(const std::string& root, int structure_id,
                     int scenario_id);
void save_sim_result(const std::string& root, const SimResult& r);
SimResult load_sim_result(const std::string& root, int structure_id,
                          int scenario_id);

void save_fire_points(const std::string& root, int structure_id,
                      const std::vector<FirePoint>& fires);
std::vector<FirePoint> load_fire_points(const std::string& root,
                                        int structure_id);

void write_run_manifest(const std::string& root, const RunManifest& m);

}  // namespace firedrift
