#include "firedrift/dataset.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

namespace firedrift {

namespace fs = std::filesystem;

void to_json(Json& j, const DatasetManifest& m) {
  j = Json{{"format_version", m.format_version},
           {"seed", m.seed},
           {"requested", m.requested},
           {"labeled_fraction", m.labeled_fraction},
           {"structure_ids", m.structure_ids},
           {"labeled_ids", m.labeled_ids},
           {"unlabeled_ids", m.unlabeled_ids},
           {"fires_per_structure", m.fires_per_structure}};
}

void from_json(const Json& j, DatasetManifest& m) {
  j.at("format_version").get_to(m.format_version);
  j.at("seed").get_to(m.seed);
  j.at("requested").get_to(m.requested);
  j.at("labeled_fraction").get_to(m.labeled_fraction);
  j.at("structure_ids").get_to(m.structure_ids);
  j.at("labeled_ids").get_to(m.labeled_ids);
  j.at("unlabeled_ids").get_to(m.unlabeled_ids);
  j.at("fires_per_structure").get_to(m.fires_per_structure);
}

void to_json(Json& j, const RunManifest& m) {
  j = Json{{"command", m.command},
           {"tool_version", m.tool_version},
           {"seed", m.seed},
           {"config", m.config},
           {"inputs", m.inputs},
           {"outputs", m.outputs},
           {"failures", m.failures},
           {"started_at", m.started_at},
           {"wall_seconds", m.wall_seconds}};
}

void from_json(const Json& j, RunManifest& m) {
  j.at("command").get_to(m.command);
  j.at("tool_version").get_to(m.tool_version);
  j.at("seed").get_to(m.seed);
  m.config = j.at("config");
  j.at("inputs").get_to(m.inputs);
  j.at("outputs").get_to(m.outputs);
  j.at("failures").get_to(m.failures);
  j.at("started_at").get_to(m.started_at);
  j.at("wall_seconds").get_to(m.wall_seconds);
}

std::string iso_timestamp_utc() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  os << j.dump(2) << "\n";
  if (!os) throw IoError("write failed for " + path);
}

Json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path);
  Json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw IoError("parse error in " + path + ": " + e.what());
  }
  return j;
}

void ensure_dataset_dirs(const std::string& root) {
  fs::create_directories(fs::path(root) / "structures");
  fs::create_directories(fs::path(root) / "scenarios");
  fs::create_directories(fs::path(root) / "models");
  fs::create_directories(fs::path(root) / "reports");
  fs::create_directories(fs::path(root) / "runs");
}

namespace {

std::string padded(int v, int width) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%0*d", width, v);
  return buf;
}

}  // namespace

std::string manifest_path(const std::string& root) {
  return (fs::path(root) / "manifest.json").string();
}

std::string structure_path(const std::string& root, int id) {
  return (fs::path(root) / "structures" / (padded(id, 6) + ".json")).string();
}

std::string scenario_path(const std::string& root, int structure_id,
                          int scenario_id) {
  return (fs::path(root) / "scenarios" / padded(structure_id, 6) /
          (padded(scenario_id, 4) + ".json"))
      .string();
}

std::string fires_path(const std::string& root, int structure_id) {
  return (fs::path(root) / "scenarios" / padded(structure_id, 6) /
          "fires.json")
      .string();
}

std::string label_path(const std::string& root) {
  return (fs::path(root) / "pseudo_labels.json").string();
}

std::string model_path(const std::string& root, const std::string& name) {
  return (fs::path(root) / "models" / (name + ".json")).string();
}

std::string report_path(const std::string& root, const std::string& name) {
  return (fs::path(root) / "reports" / name).string();
}

std::string run_manifest_path(const std::string& root,
                              const std::string& command) {
  return (fs::path(root) / "runs" / (command + ".json")).string();
}

void save_dataset_manifest(const std::string& root,
                           const DatasetManifest& m) {
  write_json_file(manifest_path(root), Json(m));
}

DatasetManifest load_dataset_manifest(const std::string& root) {
  return read_json_file(manifest_path(root)).get<DatasetManifest>();
}

void save_structure(const std::string& root, const Structure& s) {
  write_json_file(structure_path(root, s.id), Json(s));
}

Structure load_structure(const std::string& root, int id) {
  return read_json_file(structure_path(root, id)).get<Structure>();
}

bool scenario_exists(const std::string& root, int structure_id,
                     int scenario_id) {
  return fs::exists(scenario_path(root, structure_id, scenario_id));
}

void save_sim_result(const std::string& root, const SimResult& r) {
  fs::path p = scenario_path(root, r.structure_id, r.scenario_id);
  fs::create_directories(p.parent_path());
  write_json_file(p.string(), Json(r));
}

SimResult load_sim_result(const std::string& root, int structure_id,
                          int scenario_id) {
  return read_json_file(scenario_path(root, structure_id, scenario_id))
      .get<SimResult>();
}

void save_fire_points(const std::string& root, int structure_id,
                      const std::vector<FirePoint>& fires) {
  fs::path p = fires_path(root, structure_id);
  fs::create_directories(p.parent_path());
  write_json_file(p.string(), Json(fires));
}

std::vector<FirePoint> load_fire_points(const std::string& root,
                                        int structure_id) {
  return read_json_file(fires_path(root, structure_id))
      .get<std::vector<FirePoint>>();
}

void write_run_manifest(const std::string& root, const RunManifest& m) {
  write_json_file(run_manifest_path(root, m.command), Json(m));
}

}  // namespace firedrift
