#include "firedrift/train_midr.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <unordered_map>
#include <unordered_set>
#include <utility>

namespace firedrift {

void to_json(Json& j, const TrainConfig& c) {
  j = Json{{"epochs_step1", c.epochs_step1},
           {"epochs_step2", c.epochs_step2},
           {"epochs_finetune", c.epochs_finetune},
           {"batch_size", c.batch_size},
           {"patience", c.patience},
           {"lr", c.lr},
           {"finetune_lr_scale", c.finetune_lr_scale},
           {"train_fraction", c.train_fraction},
           {"seed", c.seed}};
}

void from_json(const Json& j, TrainConfig& c) {
  j.at("epochs_step1").get_to(c.epochs_step1);
  j.at("epochs_step2").get_to(c.epochs_step2);
  j.at("epochs_finetune").get_to(c.epochs_finetune);
  j.at("batch_size").get_to(c.batch_size);
  j.at("patience").get_to(c.patience);
  j.at("lr").get_to(c.lr);
  j.at("finetune_lr_scale").get_to(c.finetune_lr_scale);
  j.at("train_fraction").get_to(c.train_fraction);
  j.at("seed").get_to(c.seed);
}

void to_json(Json& j, const EpochLog& e) {
  j = Json{{"phase", e.phase},
           {"epoch", e.epoch},
           {"train_loss", e.train_loss},
           {"val_loss", e.val_loss}};
}

void from_json(const Json& j, EpochLog& e) {
  j.at("phase").get_to(e.phase);
  j.at("epoch").get_to(e.epoch);
  j.at("train_loss").get_to(e.train_loss);
  j.at("val_loss").get_to(e.val_loss);
}

namespace {

void shuffle_ints(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

enum class LossKind { Node, Graph };

struct Prepared {
  GraphBatch batch;
  Mat node_target;
  Mat midr_target;
};

Prepared prepare(const std::vector<const LabeledGraph*>& chunk,
                 const NormStats& norm, int max_layers) {
  std::vector<const GraphSample*> samples;
  samples.reserve(chunk.size());
  for (const LabeledGraph* g : chunk) {
    if (g->node_idr.size() != g->sample.node_attrs.rows())
      throw ShapeMismatch("labeled graph: node_idr length != node count");
    samples.push_back(&g->sample);
  }
  Prepared p;
  p.batch = make_batch(samples, norm, max_layers);
  p.node_target.resize(p.batch.total_nodes(), 1);
  p.midr_target.resize(p.batch.num_graphs, 1);
  int row = 0;
  for (std::size_t g = 0; g < chunk.size(); ++g) {
    const Eigen::VectorXd& idr = chunk[g]->node_idr;
    for (int i = 0; i < idr.size(); ++i)
      p.node_target(row++, 0) = norm.idr.normalize(idr(i));
    p.midr_target(static_cast<int>(g), 0) =
        norm.midr.normalize(chunk[g]->midr);
  }
  return p;
}

double unit_count(const Prepared& p, LossKind kind) {
  return kind == LossKind::Node ? static_cast<double>(p.batch.total_nodes())
                                : static_cast<double>(p.batch.num_graphs);
}

double train_on(MidrModel& model, const Prepared& p, LossKind kind, Adam& opt,
                double lr_scale) {
  Tape tape;
  TapeBinding bind;
  GnnForward fwd = model.run(tape, bind, p.batch);
  Var pred = kind == LossKind::Node ? fwd.node_pred : fwd.midr_pred;
  const Mat& tgt = kind == LossKind::Node ? p.node_target : p.midr_target;
  Var loss = tape.mse(pred, tape.constant(tgt));
  double lv = tape.value(loss)(0, 0);
  model.params().zero_grads();
  tape.backward(loss);
  bind.collect(tape);
  opt.step(model.params(), lr_scale);
  return lv;
}

double eval_on(const MidrModel& model, const Prepared& p, LossKind kind) {
  Tape tape;
  TapeBinding bind;
  GnnForward fwd = model.run(tape, bind, p.batch);
  Var pred = kind == LossKind::Node ? fwd.node_pred : fwd.midr_pred;
  const Mat& tgt = kind == LossKind::Node ? p.node_target : p.midr_target;
  const Mat& pv = tape.value(pred);
  return (pv - tgt).squaredNorm() / static_cast<double>(pv.size());
}

// Runs one early-stopped phase: trains until validation loss stops improving
// for `patience` epochs, then restores the best snapshot.
double run_phase(MidrModel& model, const std::string& name, int max_epochs,
                 int patience, const std::function<double(int)>& train_epoch,
                 const std::function<double()>& val_eval,
                 std::vector<EpochLog>& history, bool verbose) {
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<Mat> snap = model.params().snapshot();
  for (int e = 0; e < max_epochs; ++e) {
    double tr = train_epoch(e);
    double vl = val_eval();
    history.push_back({name, e, tr, vl});
    if (verbose)
      std::cerr << "[train] " << name << " epoch " << e << " train " << tr
                << " val " << vl << "\n";
    if (vl < best) {
      best = vl;
      snap = model.params().snapshot();
      since_best = 0;
    } else if (++since_best >= patience) {
      break;
    }
  }
  model.params().restore(snap);
  return best;
}

}  // namespace

TrainResult train_midr(MidrModel& model, const std::vector<LabeledGraph>& data,
                       const TrainConfig& cfg) {
  if (data.empty()) throw DataEmpty("train_midr: no labeled graphs");
  if (cfg.batch_size < 1)
    throw std::invalid_argument("train_midr: batch_size must be >= 1");

  Rng root(cfg.seed);
  TrainResult result;

  // Split by structure so validation scenarios never share a structure with
  // training ones.
  std::vector<int> structs;
  std::unordered_set<int> seen;
  for (const LabeledGraph& g : data)
    if (seen.insert(g.sample.structure_id).second)
      structs.push_back(g.sample.structure_id);
  {
    Rng srng = root.split(1);
    shuffle_ints(structs, srng);
  }
  int s_total = static_cast<int>(structs.size());
  int s_train = std::clamp(
      static_cast<int>(std::llround(cfg.train_fraction * s_total)), 1,
      s_total);
  result.train_structures.assign(structs.begin(), structs.begin() + s_train);
  result.val_structures.assign(structs.begin() + s_train, structs.end());
  // Degenerate corpora fall back to validating on the training structures.
  bool val_is_train = result.val_structures.empty();
  if (val_is_train) result.val_structures = result.train_structures;

  std::unordered_set<int> train_set(result.train_structures.begin(),
                                    result.train_structures.end());
  std::unordered_set<int> val_set(result.val_structures.begin(),
                                  result.val_structures.end());
  std::vector<int> train_idx, val_idx;
  for (std::size_t i = 0; i < data.size(); ++i) {
    int sid = data[i].sample.structure_id;
    if (train_set.count(sid)) train_idx.push_back(static_cast<int>(i));
    if (val_set.count(sid)) val_idx.push_back(static_cast<int>(i));
  }

  // Normalization comes from the training split only.
  {
    std::vector<const Mat*> node_mats, edge_mats;
    std::vector<double> idrs, midrs;
    for (int i : train_idx) {
      const LabeledGraph& g = data[static_cast<std::size_t>(i)];
      node_mats.push_back(&g.sample.node_attrs);
      edge_mats.push_back(&g.sample.edge_attrs);
      for (int r = 0; r < g.node_idr.size(); ++r) idrs.push_back(g.node_idr(r));
      midrs.push_back(g.midr);
    }
    NormStats norm;
    norm.node = fit_stats(node_mats);
    norm.edge = fit_stats(edge_mats);
    norm.idr = fit_scalar_stats(idrs);
    norm.midr = fit_scalar_stats(midrs);
    model.norm() = norm;
  }

  const int max_layers = model.config().max_layers;

  auto chunks_of = [&](const std::vector<int>& order) {
    std::vector<std::vector<const LabeledGraph*>> chunks;
    for (std::size_t at = 0; at < order.size();
         at += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t hi = std::min(order.size(),
                                at + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const LabeledGraph*> c;
      c.reserve(hi - at);
      for (std::size_t i = at; i < hi; ++i)
        c.push_back(&data[static_cast<std::size_t>(order[i])]);
      chunks.push_back(std::move(c));
    }
    return chunks;
  };

  // Validation batches are fixed for the whole run.
  std::vector<Prepared> val_prepared;
  for (const auto& c : chunks_of(val_idx))
    val_prepared.push_back(prepare(c, model.norm(), max_layers));

  auto full_phase = [&](const std::string& name, int max_epochs, LossKind kind,
                        double lr_scale, std::uint64_t stream) {
    Adam opt(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
    auto train_epoch = [&, stream](int epoch) {
      std::vector<int> order = train_idx;
      Rng erng = root.split(stream).split(static_cast<std::uint64_t>(epoch));
      shuffle_ints(order, erng);
      double tot = 0.0, units = 0.0;
      for (const auto& c : chunks_of(order)) {
        Prepared p = prepare(c, model.norm(), max_layers);
        double u = unit_count(p, kind);
        tot += train_on(model, p, kind, opt, lr_scale) * u;
        units += u;
      }
      return tot / units;
    };
    auto val_eval = [&]() {
      double tot = 0.0, units = 0.0;
      for (const Prepared& p : val_prepared) {
        double u = unit_count(p, kind);
        tot += eval_on(model, p, kind) * u;
        units += u;
      }
      return tot / units;
    };
    return run_phase(model, name, max_epochs, cfg.patience, train_epoch,
                     val_eval, result.history, cfg.verbose);
  };

  // Head-2 training against a frozen backbone only ever sees the pooled
  // embeddings, so those are computed once and the epochs run on the cache.
  auto frozen_head2_phase = [&](const std::string& name, int max_epochs) {
    struct Cached {
      Mat pooled;
      Mat target;
    };
    std::vector<int> order = train_idx;
    Rng srng = root.split(40);
    shuffle_ints(order, srng);
    std::vector<Cached> train_cache;
    for (const auto& c : chunks_of(order)) {
      Prepared p = prepare(c, model.norm(), max_layers);
      train_cache.push_back({model.pooled_embeddings(p.batch), p.midr_target});
    }
    std::vector<Cached> val_cache;
    for (const Prepared& p : val_prepared)
      val_cache.push_back({model.pooled_embeddings(p.batch), p.midr_target});

    Adam opt(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
    auto train_epoch = [&](int) {
      double tot = 0.0, units = 0.0;
      for (const Cached& cb : train_cache) {
        Tape tape;
        TapeBinding bind;
        Var pred = model.head2_on(tape, bind, tape.constant(cb.pooled));
        Var loss = tape.mse(pred, tape.constant(cb.target));
        double lv = tape.value(loss)(0, 0);
        model.params().zero_grads();
        tape.backward(loss);
        bind.collect(tape);
        opt.step(model.params(), 1.0);
        double u = static_cast<double>(cb.target.rows());
        tot += lv * u;
        units += u;
      }
      return tot / units;
    };
    auto val_eval = [&]() {
      double tot = 0.0, units = 0.0;
      for (const Cached& cb : val_cache) {
        Tape tape;
        TapeBinding bind;
        Var pred = model.head2_on(tape, bind, tape.constant(cb.pooled));
        const Mat& pv = tape.value(pred);
        tot += (pv - cb.target).squaredNorm();
        units += static_cast<double>(cb.target.rows());
      }
      return tot / units;
    };
    return run_phase(model, name, max_epochs, cfg.patience, train_epoch,
                     val_eval, result.history, cfg.verbose);
  };

  try {
    switch (model.method()) {
      case MidrMethod::TwoStep:
        model.set_backbone_trainable(true);
        model.set_head1_trainable(true);
        model.set_head2_trainable(false);
        full_phase("step1", cfg.epochs_step1, LossKind::Node, 1.0, 10);

        model.set_backbone_trainable(false);
        model.set_head1_trainable(false);
        model.set_head2_trainable(true);
        frozen_head2_phase("step2", cfg.epochs_step2);

        model.set_backbone_trainable(true);
        model.set_head1_trainable(true);
        model.set_head2_trainable(true);
        result.best_val_loss = full_phase("finetune", cfg.epochs_finetune,
                                          LossKind::Graph,
                                          cfg.finetune_lr_scale, 12);
        break;
      case MidrMethod::Strawman1:
        model.set_backbone_trainable(true);
        model.set_head1_trainable(true);
        model.set_head2_trainable(true);
        result.best_val_loss =
            full_phase("direct", cfg.epochs_step2, LossKind::Graph, 1.0, 10);
        break;
      case MidrMethod::Strawman2:
        model.set_backbone_trainable(true);
        model.set_head1_trainable(true);
        model.set_head2_trainable(false);
        result.best_val_loss =
            full_phase("step1", cfg.epochs_step1, LossKind::Node, 1.0, 10);
        break;
    }
  } catch (const NonFiniteValue& e) {
    model.params().set_trainable(true);
    throw NonFiniteLoss(std::string("train_midr: ") + e.what());
  }
  model.params().set_trainable(true);
  return result;
}

}  // namespace firedrift
