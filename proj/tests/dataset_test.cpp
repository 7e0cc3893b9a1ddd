#include "firedrift/dataset.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <vector>

#include "firedrift/structgen.hpp"
#include "test_util.hpp"

namespace firedrift {
namespace {

namespace fs = std::filesystem;

TEST(DatasetPaths, IdsArePaddedAndNamesPassThrough) {
  const std::string root = "/data/run";
  EXPECT_EQ(manifest_path(root), "/data/run/manifest.json");
  EXPECT_EQ(structure_path(root, 7), "/data/run/structures/000007.json");
  EXPECT_EQ(scenario_path(root, 7, 3), "/data/run/scenarios/000007/0003.json");
  EXPECT_EQ(fires_path(root, 12), "/data/run/scenarios/000012/fires.json");
  EXPECT_EQ(label_path(root), "/data/run/pseudo_labels.json");
  EXPECT_EQ(model_path(root, "agent"), "/data/run/models/agent.json");
  EXPECT_EQ(report_path(root, "midr_eval.csv"),
            "/data/run/reports/midr_eval.csv");
  EXPECT_EQ(report_path(root, "summary.json"),
            "/data/run/reports/summary.json");
  EXPECT_EQ(run_manifest_path(root, "simulate"),
            "/data/run/runs/simulate.json");
}

TEST(DatasetPaths, EnsureDirsCreatesTheLayoutIdempotently) {
  TempDir dir("dataset_dirs");
  ensure_dataset_dirs(dir.path());
  for (const char* name :
       {"structures", "scenarios", "models", "reports", "runs"})
    EXPECT_TRUE(fs::is_directory(fs::path(dir.path()) / name)) << name;
  EXPECT_NO_THROW(ensure_dataset_dirs(dir.path()));
}

TEST(DatasetJson, FileRoundTripAndTypedErrors) {
  TempDir dir("dataset_json");
  Json j{{"alpha", 1}, {"beta", Json::array({1.5, -2.0})}};
  const std::string path = dir.sub("blob.json");
  write_json_file(path, j);
  EXPECT_EQ(read_json_file(path), j);

  EXPECT_THROW(read_json_file(dir.sub("absent.json")), IoError);
  EXPECT_THROW(write_json_file(dir.sub("no_such_dir/blob.json"), j), IoError);

  const std::string bad = dir.sub("bad.json");
  {
    std::ofstream os(bad);
    os << "{\"alpha\": ";
  }
  EXPECT_THROW(read_json_file(bad), IoError);
}

TEST(DatasetManifestTest, RoundTripsEveryField) {
  TempDir dir("dataset_manifest");
  ensure_dataset_dirs(dir.path());

  DatasetManifest m;
  m.seed = 123456789ull;
  m.requested = 12;
  m.labeled_fraction = 0.25;
  m.structure_ids = {0, 1, 2, 5, 7};
  m.labeled_ids = {1, 5};
  m.unlabeled_ids = {0, 2, 7};
  m.fires_per_structure = 10;
  save_dataset_manifest(dir.path(), m);

  DatasetManifest got = load_dataset_manifest(dir.path());
  EXPECT_EQ(got.format_version, 1);
  EXPECT_EQ(got.seed, m.seed);
  EXPECT_EQ(got.requested, m.requested);
  EXPECT_DOUBLE_EQ(got.labeled_fraction, m.labeled_fraction);
  EXPECT_EQ(got.structure_ids, m.structure_ids);
  EXPECT_EQ(got.labeled_ids, m.labeled_ids);
  EXPECT_EQ(got.unlabeled_ids, m.unlabeled_ids);
  EXPECT_EQ(got.fires_per_structure, m.fires_per_structure);

  EXPECT_THROW(load_dataset_manifest(dir.sub("nowhere")), IoError);
}

TEST(DatasetStore, StructureSurvivesSaveLoadByteForByte) {
  TempDir dir("dataset_structure");
  ensure_dataset_dirs(dir.path());

  Structure s = tiny_structure(42);
  s.id = 7;
  save_structure(dir.path(), s);
  EXPECT_TRUE(fs::exists(structure_path(dir.path(), 7)));

  Structure got = load_structure(dir.path(), 7);
  EXPECT_EQ(Json(got).dump(), Json(s).dump());

  EXPECT_THROW(load_structure(dir.path(), 8), IoError);
}

TEST(DatasetStore, SimResultSurvivesSaveLoad) {
  TempDir dir("dataset_sim");
  ensure_dataset_dirs(dir.path());

  Structure s = tiny_structure(43);
  s.id = 3;
  std::vector<double> rise(s.elements.size(), 250.0);
  SimResult r = run_scenario(s, 5, rise);
  r.structure_id = s.id;

  EXPECT_FALSE(scenario_exists(dir.path(), 3, 5));
  save_sim_result(dir.path(), r);
  EXPECT_TRUE(scenario_exists(dir.path(), 3, 5));
  EXPECT_FALSE(scenario_exists(dir.path(), 3, 6));

  SimResult got = load_sim_result(dir.path(), 3, 5);
  EXPECT_EQ(Json(got).dump(), Json(r).dump());
  EXPECT_EQ(got.structure_id, 3);
  EXPECT_EQ(got.scenario_id, 5);
  EXPECT_DOUBLE_EQ(got.midr, r.midr);
  EXPECT_EQ(got.node_displacements.size(), r.node_displacements.size());
  EXPECT_EQ(got.idr_skipped, r.idr_skipped);

  EXPECT_THROW(load_sim_result(dir.path(), 3, 6), IoError);
}

TEST(DatasetStore, FirePointsSurviveSaveLoad) {
  TempDir dir("dataset_fires");
  ensure_dataset_dirs(dir.path());

  Structure s = tiny_structure(44);
  s.id = 2;
  std::vector<FirePoint> fires = sample_fire_points(s, 4, 99);
  save_fire_points(dir.path(), s.id, fires);
  EXPECT_TRUE(fs::exists(fires_path(dir.path(), 2)));

  std::vector<FirePoint> got = load_fire_points(dir.path(), 2);
  ASSERT_EQ(got.size(), fires.size());
  for (std::size_t i = 0; i < fires.size(); ++i) {
    EXPECT_DOUBLE_EQ(got[i].x, fires[i].x);
    EXPECT_DOUBLE_EQ(got[i].y, fires[i].y);
    EXPECT_DOUBLE_EQ(got[i].z, fires[i].z);
    EXPECT_DOUBLE_EQ(got[i].h, fires[i].h);
    EXPECT_EQ(got[i].room_index, fires[i].room_index);
  }

  EXPECT_THROW(load_fire_points(dir.path(), 9), IoError);
}

TEST(RunManifestTest, RoundTripsThroughItsCommandFile) {
  TempDir dir("dataset_runs");
  ensure_dataset_dirs(dir.path());

  RunManifest m;
  m.command = "simulate";
  m.tool_version = "0.1.0";
  m.seed = 77;
  m.config = Json{{"fires", 10}, {"jobs", 2}};
  m.inputs = {"manifest.json"};
  m.outputs = {"scenarios"};
  m.failures = {"structure 4 scenario 2: singular system"};
  m.started_at = iso_timestamp_utc();
  m.wall_seconds = 1.25;
  write_run_manifest(dir.path(), m);

  RunManifest got = read_json_file(run_manifest_path(dir.path(), "simulate"))
                        .get<RunManifest>();
  EXPECT_EQ(got.command, m.command);
  EXPECT_EQ(got.tool_version, m.tool_version);
  EXPECT_EQ(got.seed, m.seed);
  EXPECT_EQ(got.config, m.config);
  EXPECT_EQ(got.inputs, m.inputs);
  EXPECT_EQ(got.outputs, m.outputs);
  EXPECT_EQ(got.failures, m.failures);
  EXPECT_EQ(got.started_at, m.started_at);
  EXPECT_DOUBLE_EQ(got.wall_seconds, m.wall_seconds);
}

TEST(RunManifestTest, TimestampIsIsoUtc) {
  std::string stamp = iso_timestamp_utc();
  std::regex shape(R"(^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$)");
  EXPECT_TRUE(std::regex_match(stamp, shape)) << stamp;
}

}  // namespace
}  // namespace firedrift
