#if defined(__linux__)
#include <malloc.h>
#endif

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "firedrift/bundle.hpp"
#include "firedrift/dataset.hpp"
#include "firedrift/fea.hpp"
#include "firedrift/graph.hpp"
#include "firedrift/metrics.hpp"
#include "firedrift/mfsp.hpp"
#include "firedrift/structgen.hpp"
#include "firedrift/thermal.hpp"
#include "firedrift/train_midr.hpp"

namespace {

using namespace firedrift;

constexpr const char* kVersion = "0.1.0";

// Stream id for the labeled/unlabeled partition draw within the global seed.
constexpr std::uint64_t kLabelSplitStream = 7001;

int default_jobs() {
  if (const char* env = std::getenv("FIREDRIFT_JOBS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

int resolve_jobs(int requested) {
  return requested > 0 ? requested : default_jobs();
}

// Runs fn(0..n-1) on up to `jobs` threads. Work items must be independent;
// the index-claiming order is the only nondeterminism, so results stay
// identical across job counts as long as each item writes its own slot or
// file. The first exception wins and is rethrown after the pool drains.
void parallel_for(int jobs, int n, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(jobs));
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> g(err_mu);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

void shuffle_ids(std::vector<int>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
    int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
  }
}

// Writes the run manifest before any command output exists, then again with
// outputs, failures and the elapsed time filled in.
class RunScope {
 public:
  RunScope(std::string root, RunManifest manifest)
      : root_(std::move(root)),
        m_(std::move(manifest)),
        start_(std::chrono::steady_clock::now()) {
    m_.started_at = iso_timestamp_utc();
    write_run_manifest(root_, m_);
  }

  RunManifest& manifest() { return m_; }

  void finish() {
    m_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start_)
            .count();
    write_run_manifest(root_, m_);
  }

 private:
  std::string root_;
  RunManifest m_;
  std::chrono::steady_clock::time_point start_;
};

struct GenOpts {
  std::string out;
  int count = 600;
  std::uint64_t seed = 1;
  double labeled_fraction = 0.09;
  int jobs = 0;
};

void cmd_gen(const GenOpts& o) {
  ensure_dataset_dirs(o.out);
  RunManifest m;
  m.command = "gen";
  m.tool_version = kVersion;
  m.seed = o.seed;
  m.config = Json{{"count", o.count},
                  {"labeled_fraction", o.labeled_fraction},
                  {"jobs", o.jobs}};
  RunScope run(o.out, std::move(m));

  std::vector<std::unique_ptr<Structure>> kept(
      static_cast<std::size_t>(o.count));
  parallel_for(o.jobs, o.count, [&](int id) {
    Structure s =
        generate_structure(mix64(o.seed, static_cast<std::uint64_t>(id)));
    s.id = id;
    SimResult gravity = run_scenario(s, -1, {});
    s.gravity_midr = gravity.midr;
    if (gravity_filter(s, gravity))
      kept[static_cast<std::size_t>(id)] =
          std::make_unique<Structure>(std::move(s));
  });

  DatasetManifest dm;
  dm.seed = o.seed;
  dm.requested = o.count;
  dm.labeled_fraction = o.labeled_fraction;
  for (int id = 0; id < o.count; ++id) {
    const auto& s = kept[static_cast<std::size_t>(id)];
    if (!s) continue;
    save_structure(o.out, *s);
    run.manifest().outputs.push_back(structure_path(o.out, id));
    dm.structure_ids.push_back(id);
  }

  std::vector<int> order = dm.structure_ids;
  Rng label_rng = Rng(o.seed).split(kLabelSplitStream);
  shuffle_ids(order, label_rng);
  auto n_lab = std::clamp<long long>(
      std::llround(o.labeled_fraction * static_cast<double>(order.size())), 0,
      static_cast<long long>(order.size()));
  dm.labeled_ids.assign(order.begin(), order.begin() + n_lab);
  dm.unlabeled_ids.assign(order.begin() + n_lab, order.end());
  std::sort(dm.labeled_ids.begin(), dm.labeled_ids.end());
  std::sort(dm.unlabeled_ids.begin(), dm.unlabeled_ids.end());

  save_dataset_manifest(o.out, dm);
  run.manifest().outputs.push_back(manifest_path(o.out));
  run.finish();
  std::cout << "kept " << dm.structure_ids.size() << "/" << o.count
            << " structures after the gravity filter, "
            << dm.labeled_ids.size() << " labeled, in " << o.out << "\n";
}

struct SimOpts {
  std::string dataset;
  int fires = 30;
  std::uint64_t seed = 1;
  int jobs = 0;
};

void cmd_simulate(const SimOpts& o) {
  DatasetManifest dm = load_dataset_manifest(o.dataset);
  if (dm.fires_per_structure != 0 && dm.fires_per_structure != o.fires)
    throw IoError("dataset was simulated with --fires " +
                  std::to_string(dm.fires_per_structure) +
                  "; rerun with that value or start a fresh dataset");

  RunManifest m;
  m.command = "simulate";
  m.tool_version = kVersion;
  m.seed = o.seed;
  m.config = Json{{"fires", o.fires}, {"jobs", o.jobs}};
  m.inputs.push_back(manifest_path(o.dataset));
  RunScope run(o.dataset, std::move(m));

  std::vector<Structure> structures;
  structures.reserve(dm.labeled_ids.size());
  for (int id : dm.labeled_ids) {
    Structure s = load_structure(o.dataset, id);
    s.fire_points = sample_fire_points(
        s, o.fires, mix64(o.seed, static_cast<std::uint64_t>(id)));
    save_fire_points(o.dataset, id, s.fire_points);
    run.manifest().outputs.push_back(fires_path(o.dataset, id));
    structures.push_back(std::move(s));
  }

  struct Task {
    const Structure* s = nullptr;
    int fire = 0;
  };
  std::vector<Task> tasks;
  int already = 0;
  for (const Structure& s : structures) {
    for (int k = 0; k < o.fires; ++k) {
      if (scenario_exists(o.dataset, s.id, k))
        ++already;
      else
        tasks.push_back({&s, k});
    }
  }

  std::mutex mu;
  std::vector<std::string> failures;
  parallel_for(o.jobs, static_cast<int>(tasks.size()), [&](int i) {
    const Task& t = tasks[static_cast<std::size_t>(i)];
    try {
      std::vector<double> rise = element_temperatures(
          *t.s, t.s->fire_points[static_cast<std::size_t>(t.fire)],
          SpreadParams{}.t_threshold);
      SimResult r = run_scenario(*t.s, t.fire, rise);
      save_sim_result(o.dataset, r);
    } catch (const SingularSystem& e) {
      std::lock_guard<std::mutex> g(mu);
      failures.push_back("structure " + std::to_string(t.s->id) + " fire " +
                         std::to_string(t.fire) + ": " + e.what());
      std::cerr << "flagged " << failures.back() << "\n";
    }
  });
  std::sort(failures.begin(), failures.end());
  run.manifest().failures = std::move(failures);

  for (const Structure& s : structures)
    for (int k = 0; k < o.fires; ++k)
      if (scenario_exists(o.dataset, s.id, k))
        run.manifest().outputs.push_back(scenario_path(o.dataset, s.id, k));

  dm.fires_per_structure = o.fires;
  save_dataset_manifest(o.dataset, dm);
  run.manifest().outputs.push_back(manifest_path(o.dataset));
  run.finish();
  std::cout << "simulated " << tasks.size() << " scenarios (" << already
            << " already present, " << run.manifest().failures.size()
            << " flagged)\n";
}

std::vector<LabeledGraph> load_labeled_graphs(const std::string& root,
                                              const DatasetManifest& dm) {
  std::vector<LabeledGraph> out;
  for (int id : dm.labeled_ids) {
    Structure s = load_structure(root, id);
    std::vector<FirePoint> fires = load_fire_points(root, id);
    int n = std::min(dm.fires_per_structure, static_cast<int>(fires.size()));
    for (int k = 0; k < n; ++k) {
      if (!scenario_exists(root, id, k)) continue;
      SimResult r = load_sim_result(root, id, k);
      LabeledGraph lg;
      lg.sample = encode(s, fires[static_cast<std::size_t>(k)], k);
      lg.node_idr = Eigen::VectorXd::Zero(
          static_cast<Eigen::Index>(lg.sample.node_ids.size()));
      for (std::size_t row = 0; row < lg.sample.node_ids.size(); ++row) {
        auto it = r.node_idr.find(lg.sample.node_ids[row]);
        if (it != r.node_idr.end())
          lg.node_idr[static_cast<Eigen::Index>(row)] = it->second;
      }
      lg.midr = r.midr;
      out.push_back(std::move(lg));
    }
  }
  return out;
}

struct TrainMidrOpts {
  std::string dataset;
  std::string size = "small";
  std::string edge_update = "on";
  std::string method = "proposed";
  std::string name = "agent";
  int epochs = -1;  // caps all three phases when >= 0
  TrainConfig tc;
};

void cmd_train_midr(const TrainMidrOpts& o) {
  DatasetManifest dm = load_dataset_manifest(o.dataset);
  if (dm.fires_per_structure <= 0)
    throw DataEmpty("no simulated scenarios in " + o.dataset +
                    "; run simulate first");

  bool eu = o.edge_update == "on";
  GnnConfig cfg =
      o.size == "large" ? GnnConfig::large_size(eu) : GnnConfig::small_size(eu);
  MidrMethod method = midr_method_from_string(o.method);
  TrainConfig tc = o.tc;
  if (o.epochs >= 0)
    tc.epochs_step1 = tc.epochs_step2 = tc.epochs_finetune = o.epochs;

  RunManifest m;
  m.command = "train-midr";
  m.tool_version = kVersion;
  m.seed = tc.seed;
  m.config = Json{{"size", o.size},
                  {"edge_update", eu},
                  {"method", o.method},
                  {"name", o.name},
                  {"train", tc}};
  m.inputs.push_back(manifest_path(o.dataset));
  RunScope run(o.dataset, std::move(m));

  std::vector<LabeledGraph> data = load_labeled_graphs(o.dataset, dm);
  MidrModel model(cfg, method, tc.seed);
  std::cout << "training " << to_string(method) << " (" << o.size
            << ", edge update " << o.edge_update << ", "
            << model.parameter_count() << " parameters) on " << data.size()
            << " scenarios from " << dm.labeled_ids.size() << " structures\n";
  TrainResult result = train_midr(model, data, tc);

  std::string path = model_path(o.dataset, o.name);
  save_midr_bundle(path, model, tc, result);
  run.manifest().outputs.push_back(path);
  run.finish();
  std::cout << "best validation loss " << result.best_val_loss << ", saved "
            << path << "\n";
}

struct PseudoOpts {
  std::string dataset;
  std::string model = "agent";
};

void cmd_pseudo_label(const PseudoOpts& o) {
  DatasetManifest dm = load_dataset_manifest(o.dataset);
  std::string mpath = model_path(o.dataset, o.model);
  MidrModel agent = load_midr_bundle(mpath);

  RunManifest m;
  m.command = "pseudo-label";
  m.tool_version = kVersion;
  m.seed = 0;  // fully determined by the agent and the corpus
  m.config = Json{{"model", o.model}};
  m.inputs = {manifest_path(o.dataset), mpath};
  RunScope run(o.dataset, std::move(m));

  Json labels = Json::array();
  for (int id : dm.structure_ids) {
    Structure s = load_structure(o.dataset, id);
    labels.push_back(pseudo_label(s, agent));
  }
  write_json_file(label_path(o.dataset), labels);
  run.manifest().outputs.push_back(label_path(o.dataset));
  run.finish();
  std::cout << "pseudo-labeled " << dm.structure_ids.size()
            << " structures with " << o.model << "\n";
}

struct TrainMfspOpts {
  std::string dataset;
  std::string agent = "agent";
  std::string name = "mfsp";
  std::string init = "transfer";
  std::string loss = "mse";
  MfspConfig mc;
};

void cmd_train_mfsp(const TrainMfspOpts& o) {
  load_dataset_manifest(o.dataset);  // existence check
  std::string apath = model_path(o.dataset, o.agent);
  MidrModel agent = load_midr_bundle(apath);
  std::vector<PseudoLabel> labels =
      read_json_file(label_path(o.dataset)).get<std::vector<PseudoLabel>>();

  MfspConfig mc = o.mc;
  mc.loss = mfsp_loss_from_string(o.loss);
  MfspInit init = mfsp_init_from_string(o.init);

  RunManifest m;
  m.command = "train-mfsp";
  m.tool_version = kVersion;
  m.seed = mc.seed;
  m.config = Json{{"agent", o.agent},
                  {"name", o.name},
                  {"init", to_string(init)},
                  {"train", mc}};
  m.inputs = {manifest_path(o.dataset), apath, label_path(o.dataset)};
  RunScope run(o.dataset, std::move(m));

  std::vector<Structure> owned;
  owned.reserve(labels.size());
  for (const PseudoLabel& pl : labels)
    owned.push_back(load_structure(o.dataset, pl.structure_id));
  std::vector<const Structure*> ptrs;
  ptrs.reserve(owned.size());
  for (const Structure& s : owned) ptrs.push_back(&s);

  MfspModel model(agent.config(), init, mc.seed);
  std::cout << "training " << to_string(init) << " point predictor ("
            << to_string(mc.loss) << " loss, " << model.parameter_count()
            << " parameters) on " << labels.size() << " pseudo-labels\n";
  MfspTrainResult result = train_mfsp(model, ptrs, labels, agent, mc);

  std::string path = model_path(o.dataset, o.name);
  save_mfsp_bundle(path, model, mc, result);
  run.manifest().outputs.push_back(path);
  run.finish();
  std::cout << "best validation loss " << result.best_val_loss
            << ", virtual-fire-point spread " << result.vfp_spread
            << " m, saved " << path << "\n";
}

struct EvalOpts {
  std::string dataset;
  std::string midr_model;
  std::string mfsp_model;
};

void cmd_eval(const EvalOpts& o) {
  DatasetManifest dm = load_dataset_manifest(o.dataset);

  RunManifest m;
  m.command = "eval";
  m.tool_version = kVersion;
  m.seed = 0;
  m.config = Json{{"midr_model", o.midr_model}, {"mfsp_model", o.mfsp_model}};
  m.inputs.push_back(manifest_path(o.dataset));
  RunScope run(o.dataset, std::move(m));

  if (!o.midr_model.empty()) {
    std::string mpath = model_path(o.dataset, o.midr_model);
    run.manifest().inputs.push_back(mpath);
    Json bundle = read_json_file(mpath);
    MidrModel agent = load_midr_bundle(mpath);
    std::vector<int> val_ids =
        bundle.at("val_structures").get<std::vector<int>>();

    std::vector<ScenarioValue> pred, gt;
    for (int id : val_ids) {
      Structure s = load_structure(o.dataset, id);
      std::vector<FirePoint> fires = load_fire_points(o.dataset, id);
      int n = std::min(dm.fires_per_structure, static_cast<int>(fires.size()));
      for (int k = 0; k < n; ++k) {
        if (!scenario_exists(o.dataset, id, k)) continue;
        gt.push_back({id, k, load_sim_result(o.dataset, id, k).midr});
        pred.push_back(
            {id, k,
             agent.predict_midr(encode(s, fires[static_cast<std::size_t>(k)],
                                       k))});
      }
    }
    MidrEvalReport rep = midr_eval(pred, gt);

    std::string rpath = report_path(o.dataset, o.midr_model + "_eval.json");
    write_json_file(rpath, Json(rep));
    run.manifest().outputs.push_back(rpath);
    std::string cpath = report_path(o.dataset, o.midr_model + "_ccdf.csv");
    std::ofstream csv(cpath);
    if (!csv) throw IoError("cannot write " + cpath);
    write_curve_csv(csv, "rho_threshold", "fraction_above", rep.ccdf_grid,
                    rep.ccdf);
    run.manifest().outputs.push_back(cpath);

    std::cout << "midr eval (" << o.midr_model << "): mse " << rep.mse
              << ", mae " << rep.mae << ", mean spearman "
              << rep.spearman_mean << " over " << rep.num_structures
              << " structures (severe: " << rep.spearman_mean_severe << " over "
              << rep.num_severe << ")\n";
  }

  if (!o.mfsp_model.empty()) {
    std::string mpath = model_path(o.dataset, o.mfsp_model);
    run.manifest().inputs.push_back(mpath);
    run.manifest().inputs.push_back(label_path(o.dataset));
    Json bundle = read_json_file(mpath);
    MfspModel model = load_mfsp_bundle(mpath);
    std::vector<int> val_ids =
        bundle.at("val_structures").get<std::vector<int>>();

    std::vector<PseudoLabel> all_labels =
        read_json_file(label_path(o.dataset)).get<std::vector<PseudoLabel>>();
    std::vector<PseudoLabel> labels;
    for (const PseudoLabel& pl : all_labels)
      if (std::find(val_ids.begin(), val_ids.end(), pl.structure_id) !=
          val_ids.end())
        labels.push_back(pl);

    std::vector<Structure> owned;
    owned.reserve(labels.size());
    std::vector<MfspPrediction> preds;
    for (const PseudoLabel& pl : labels) {
      owned.push_back(load_structure(o.dataset, pl.structure_id));
      preds.push_back({pl.structure_id, model.predict(owned.back())});
    }
    std::vector<const Structure*> ptrs;
    ptrs.reserve(owned.size());
    for (const Structure& s : owned) ptrs.push_back(&s);

    MfspEvalReport rep = mfsp_eval(preds, labels, ptrs);

    std::string rpath = report_path(o.dataset, o.mfsp_model + "_eval.json");
    write_json_file(rpath, Json(rep));
    run.manifest().outputs.push_back(rpath);
    struct Curve {
      const char* name;
      const char* xname;
      const std::vector<double>*x, *y;
    };
    for (const Curve& c :
         {Curve{"_e_cdf.csv", "meters", &rep.e_grid, &rep.e_cdf},
          Curve{"_eroom_cdf.csv", "room_lengths", &rep.eroom_grid,
                &rep.eroom_cdf},
          Curve{"_rank_cdf.csv", "rank", &rep.rank_grid, &rep.rank_cdf}}) {
      std::string cpath = report_path(o.dataset, o.mfsp_model + c.name);
      std::ofstream csv(cpath);
      if (!csv) throw IoError("cannot write " + cpath);
      write_curve_csv(csv, c.xname, "fraction_le", *c.x, *c.y);
      run.manifest().outputs.push_back(cpath);
    }

    std::cout << "mfsp eval (" << o.mfsp_model << "): avg distance " << rep.avg_e
              << " m, avg room rank " << rep.avg_rank << ", rank<=5 "
              << rep.frac_rank_le_5 * 100.0 << "% over " << rep.num_structures
              << " structures\n";
  }

  run.finish();
}

}  // namespace

int main(int argc, char** argv) {
  // Model forwards allocate and free many multi-megabyte matrices per batch;
  // keep freed blocks in the arena instead of handing pages back to the
  // kernel on every free, which otherwise dominates wall time.
#if defined(M_MMAP_THRESHOLD) && defined(M_TRIM_THRESHOLD)
  mallopt(M_MMAP_THRESHOLD, std::numeric_limits<int>::max());
  mallopt(M_TRIM_THRESHOLD, std::numeric_limits<int>::max());
#endif

  CLI::App app{
      "synthetic fire-response corpus, frame simulation oracle and "
      "fire-sensitivity surrogates"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenOpts gen;
  CLI::App* g = app.add_subcommand(
      "gen", "generate structures, gravity-filter and partition them");
  g->add_option("--out", gen.out, "dataset directory")->required();
  g->add_option("--count", gen.count, "structures to generate before the filter")
      ->capture_default_str();
  g->add_option("--seed", gen.seed, "global seed")->capture_default_str();
  g->add_option("--labeled-fraction", gen.labeled_fraction,
                "fraction of survivors that get simulated labels")
      ->capture_default_str();
  g->add_option("--jobs", gen.jobs,
                "worker threads (default: FIREDRIFT_JOBS or all cores)");
  g->callback([&] {
    gen.jobs = resolve_jobs(gen.jobs);
    cmd_gen(gen);
  });

  SimOpts sim;
  CLI::App* s = app.add_subcommand(
      "simulate", "run fire scenarios through the frame solver");
  s->add_option("--dataset", sim.dataset, "dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  s->add_option("--fires", sim.fires, "fire points per labeled structure")
      ->capture_default_str();
  s->add_option("--seed", sim.seed, "fire sampling seed")
      ->capture_default_str();
  s->add_option("--jobs", sim.jobs,
                "worker threads (default: FIREDRIFT_JOBS or all cores)");
  s->callback([&] {
    sim.jobs = resolve_jobs(sim.jobs);
    cmd_simulate(sim);
  });

  TrainMidrOpts tm;
  CLI::App* t = app.add_subcommand(
      "train-midr", "train the drift surrogate on simulated scenarios");
  t->add_option("--dataset", tm.dataset, "dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  t->add_option("--size", tm.size, "model size")
      ->check(CLI::IsMember({"small", "large"}))
      ->capture_default_str();
  t->add_option("--edge-update", tm.edge_update,
                "per-layer edge embedding refinement")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  t->add_option("--method", tm.method, "training scheme")
      ->check(CLI::IsMember({"proposed", "strawman1", "strawman2"}))
      ->capture_default_str();
  t->add_option("--name", tm.name, "bundle name under models/")
      ->capture_default_str();
  t->add_option("--epochs", tm.epochs, "cap for every training phase");
  t->add_option("--batch-size", tm.tc.batch_size)->capture_default_str();
  t->add_option("--patience", tm.tc.patience)->capture_default_str();
  t->add_option("--lr", tm.tc.lr)->capture_default_str();
  t->add_option("--train-fraction", tm.tc.train_fraction,
                "structure-level train share")
      ->capture_default_str();
  t->add_option("--seed", tm.tc.seed, "split/init/shuffle seed")
      ->capture_default_str();
  t->add_flag("--verbose", tm.tc.verbose, "per-epoch loss lines");
  t->callback([&] { cmd_train_midr(tm); });

  PseudoOpts pl;
  CLI::App* p = app.add_subcommand(
      "pseudo-label", "label every structure with the agent's worst room");
  p->add_option("--dataset", pl.dataset, "dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  p->add_option("--model", pl.model, "agent bundle name")
      ->capture_default_str();
  p->callback([&] { cmd_pseudo_label(pl); });

  TrainMfspOpts tf;
  CLI::App* f = app.add_subcommand(
      "train-mfsp", "train the fire-sensitive-point predictor");
  f->add_option("--dataset", tf.dataset, "dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  f->add_option("--model", tf.agent, "agent bundle name")
      ->capture_default_str();
  f->add_option("--name", tf.name, "bundle name under models/")
      ->capture_default_str();
  f->add_option("--init", tf.init, "backbone initialization")
      ->check(CLI::IsMember({"transfer", "de-novo"}))
      ->capture_default_str();
  f->add_option("--loss", tf.loss, "training loss")
      ->check(CLI::IsMember({"mse", "hybrid"}))
      ->capture_default_str();
  f->add_option("--w1", tf.mc.w1, "weight of the predicted-drift term")
      ->capture_default_str();
  f->add_option("--w2", tf.mc.w2, "weight of the squared-distance term")
      ->capture_default_str();
  f->add_option("--epochs", tf.mc.epochs)->capture_default_str();
  f->add_option("--batch-size", tf.mc.batch_size)->capture_default_str();
  f->add_option("--patience", tf.mc.patience)->capture_default_str();
  f->add_option("--lr", tf.mc.lr)->capture_default_str();
  f->add_option("--train-fraction", tf.mc.train_fraction)
      ->capture_default_str();
  f->add_option("--seed", tf.mc.seed, "split/init/shuffle seed")
      ->capture_default_str();
  f->add_flag("--verbose", tf.mc.verbose, "per-epoch loss lines");
  f->callback([&] { cmd_train_mfsp(tf); });

  EvalOpts ev;
  CLI::App* e = app.add_subcommand(
      "eval", "score trained models on their held-out structures");
  e->add_option("--dataset", ev.dataset, "dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  e->add_option("--midr-model", ev.midr_model,
                "drift surrogate bundle to score");
  e->add_option("--mfsp-model", ev.mfsp_model,
                "point predictor bundle to score");
  e->callback([&] {
    if (ev.midr_model.empty() && ev.mfsp_model.empty())
      throw CLI::ValidationError(
          "eval", "pass --midr-model and/or --mfsp-model");
    cmd_eval(ev);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
