#include "firedrift/mfsp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <utility>

namespace firedrift {

void to_json(Json& j, const RankedRoom& r) {
  j = Json{{"room_index", r.room_index}, {"midr", r.midr}};
}

void from_json(const Json& j, RankedRoom& r) {
  j.at("room_index").get_to(r.room_index);
  j.at("midr").get_to(r.midr);
}

void to_json(Json& j, const PseudoLabel& p) {
  j = Json{{"structure_id", p.structure_id},
           {"pgt_point",
            Json{{"x", p.pgt_point.x}, {"y", p.pgt_point.y},
                 {"z", p.pgt_point.z}}},
           {"pgt_room", p.pgt_room},
           {"pgt_midr", p.pgt_midr},
           {"rooms", p.rooms}};
}

void from_json(const Json& j, PseudoLabel& p) {
  j.at("structure_id").get_to(p.structure_id);
  const Json& pt = j.at("pgt_point");
  pt.at("x").get_to(p.pgt_point.x);
  pt.at("y").get_to(p.pgt_point.y);
  pt.at("z").get_to(p.pgt_point.z);
  j.at("pgt_room").get_to(p.pgt_room);
  j.at("pgt_midr").get_to(p.pgt_midr);
  j.at("rooms").get_to(p.rooms);
}

PseudoLabel pseudo_label(const Structure& s, const MidrModel& agent) {
  const int rooms = s.grid.room_count();
  PseudoLabel lab;
  lab.structure_id = s.id;
  lab.rooms.reserve(static_cast<std::size_t>(rooms));

  // The forward pass over room centers is batched, sliced to bound peak
  // memory on buildings with hundreds of rooms. Small slices also keep the
  // allocator arena below its trim threshold so pages get reused.
  const int kSlice = 12;
  for (int at = 0; at < rooms; at += kSlice) {
    int hi = std::min(rooms, at + kSlice);
    std::vector<GraphSample> samples;
    samples.reserve(static_cast<std::size_t>(hi - at));
    for (int r = at; r < hi; ++r)
      samples.push_back(encode(s, fire_point_at_room_center(s.grid, r), r));
    std::vector<const GraphSample*> ptrs;
    ptrs.reserve(samples.size());
    for (const GraphSample& g : samples) ptrs.push_back(&g);
    Eigen::VectorXd midrs = agent.predict_midr_batch(ptrs);
    for (int r = at; r < hi; ++r)
      lab.rooms.push_back({r, midrs(r - at)});
  }

  std::sort(lab.rooms.begin(), lab.rooms.end(),
            [](const RankedRoom& a, const RankedRoom& b) {
              if (a.midr != b.midr) return a.midr > b.midr;
              return a.room_index < b.room_index;
            });
  lab.pgt_room = lab.rooms.front().room_index;
  lab.pgt_midr = lab.rooms.front().midr;
  lab.pgt_point = room_center(s.grid, lab.pgt_room);
  return lab;
}

std::string to_string(MfspInit i) {
  return i == MfspInit::DeNovo ? "de-novo" : "transfer";
}

MfspInit mfsp_init_from_string(const std::string& name) {
  if (name == "de-novo") return MfspInit::DeNovo;
  if (name == "transfer") return MfspInit::Transfer;
  throw std::invalid_argument("unknown init mode: " + name);
}

std::string to_string(MfspLoss l) {
  return l == MfspLoss::Mse ? "mse" : "hybrid";
}

MfspLoss mfsp_loss_from_string(const std::string& name) {
  if (name == "mse") return MfspLoss::Mse;
  if (name == "hybrid") return MfspLoss::Hybrid;
  throw std::invalid_argument("unknown loss mode: " + name);
}

void to_json(Json& j, const MfspConfig& c) {
  j = Json{{"loss", to_string(c.loss)},
           {"w1", c.w1},
           {"w2", c.w2},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"patience", c.patience},
           {"lr", c.lr},
           {"train_fraction", c.train_fraction},
           {"seed", c.seed}};
}

void from_json(const Json& j, MfspConfig& c) {
  c.loss = mfsp_loss_from_string(j.at("loss").get<std::string>());
  j.at("w1").get_to(c.w1);
  j.at("w2").get_to(c.w2);
  j.at("epochs").get_to(c.epochs);
  j.at("batch_size").get_to(c.batch_size);
  j.at("patience").get_to(c.patience);
  j.at("lr").get_to(c.lr);
  j.at("train_fraction").get_to(c.train_fraction);
  j.at("seed").get_to(c.seed);
}

MfspModel::MfspModel(const GnnConfig& cfg, MfspInit init, std::uint64_t seed)
    : cfg_(cfg), init_(init) {
  if (init_ == MfspInit::DeNovo) cfg_.node_in = kNodeFeaturesSpatial;
  Rng root(seed);
  backbone_ = GnnBackbone::create(store_, cfg_, root);
  Rng rh = root.split(60);
  head_ = Mlp::create(store_, "mfsp_head", 2 * cfg_.node_dim,
                      2 * cfg_.node_dim, 3, rh);
}

void MfspModel::adopt_agent(const MidrModel& agent) {
  if (init_ != MfspInit::Transfer)
    throw std::logic_error("adopt_agent: model is not in transfer mode");
  const GnnConfig& a = agent.config();
  if (a.node_in != cfg_.node_in || a.edge_in != cfg_.edge_in ||
      a.node_dim != cfg_.node_dim || a.edge_dim != cfg_.edge_dim ||
      a.msg_hidden != cfg_.msg_hidden || a.upd_hidden != cfg_.upd_hidden ||
      a.eu_hidden != cfg_.eu_hidden || a.max_layers != cfg_.max_layers ||
      a.edge_update != cfg_.edge_update)
    throw ShapeMismatch("adopt_agent: agent configuration differs");
  backbone_.copy_values_from(agent.backbone());
  norm_.node = agent.norm().node;
  norm_.edge = agent.norm().edge;
}

GraphSample MfspModel::encode_for(const Structure& s,
                                  const FirePoint& vfp) const {
  return init_ == MfspInit::Transfer ? encode(s, vfp) : encode_spatial(s);
}

Var MfspModel::run_points(Tape& tape, TapeBinding& bind,
                          const GraphBatch& batch, Var node_x, Var edge_x,
                          Var extents) const {
  GnnBackbone::Out out = backbone_.run(tape, bind, batch, node_x, edge_x);
  Var raw = head_.forward(tape, bind, out.pooled);
  return tape.hadamard(tape.sigmoid(raw), extents);
}

namespace {

FirePoint center_vfp(const RoomGrid& grid) {
  return fire_point_at(grid, grid.extent_x() / 2.0, grid.extent_y() / 2.0,
                       grid.extent_z() / 2.0);
}

Mat extents_of(const std::vector<const Structure*>& structs) {
  Mat ext(static_cast<int>(structs.size()), 3);
  for (std::size_t i = 0; i < structs.size(); ++i) {
    ext(static_cast<int>(i), 0) = structs[i]->grid.extent_x();
    ext(static_cast<int>(i), 1) = structs[i]->grid.extent_y();
    ext(static_cast<int>(i), 2) = structs[i]->grid.extent_z();
  }
  return ext;
}

}  // namespace

Vec3 MfspModel::predict(const Structure& s) const {
  return predict_with(s, center_vfp(s.grid));
}

Vec3 MfspModel::predict_with(const Structure& s, const FirePoint& vfp) const {
  GraphSample sample = encode_for(s, vfp);
  GraphBatch batch = make_batch({&sample}, norm_, cfg_.max_layers);
  Tape tape;
  TapeBinding bind;
  Mat ext(1, 3);
  ext << s.grid.extent_x(), s.grid.extent_y(), s.grid.extent_z();
  Var pts = run_points(tape, bind, batch, tape.constant(batch.node_x),
                       tape.constant(batch.edge_x), tape.constant(ext));
  const Mat& v = tape.value(pts);
  return {v(0, 0), v(0, 1), v(0, 2)};
}

Var agent_features_at(Tape& tape, const MidrModel& agent,
                      const GraphBatch& agent_batch, const Mat& node_xyzh,
                      const Mat& inv_story, Var points) {
  const std::vector<int>& bounds = agent_batch.node_bounds;
  Var rep = tape.segment_repeat(points, bounds);  // N x 3 fire coordinates

  Mat e1 = Mat::Zero(3, 1), e2 = Mat::Zero(3, 1), e3 = Mat::Zero(3, 1);
  e1(0, 0) = 1.0;
  e2(1, 0) = 1.0;
  e3(2, 0) = 1.0;
  Var xf = tape.matmul(rep, tape.constant(e1));
  Var yf = tape.matmul(rep, tape.constant(e2));
  Var zf = tape.matmul(rep, tape.constant(e3));
  Var hf = tape.hadamard(zf, tape.constant(inv_story));  // continuous z/H

  Var xyz = tape.constant(node_xyzh.leftCols(3));
  Var h = tape.constant(node_xyzh.col(3));
  Var d3 = tape.sub(xyz, rep);
  Var ls = tape.sqrt(tape.row_sum(tape.hadamard(d3, d3)));
  Var dh = tape.sub(h, hf);

  Var full = tape.constant(node_xyzh);  // x, y, z, h
  full = tape.concat_cols(full, xf);
  full = tape.concat_cols(full, yf);
  full = tape.concat_cols(full, zf);
  full = tape.concat_cols(full, hf);
  full = tape.concat_cols(full, d3);
  full = tape.concat_cols(full, dh);
  full = tape.concat_cols(full, ls);

  Eigen::RowVectorXd scale, shift;
  normalize_coeffs(agent.norm().node, scale, shift);
  return tape.add_row(tape.mul_row(full, tape.constant(scale)),
                      tape.constant(shift));
}

MfspTrainResult train_mfsp(MfspModel& model,
                           const std::vector<const Structure*>& structures,
                           const std::vector<PseudoLabel>& labels,
                           const MidrModel& agent, const MfspConfig& cfg) {
  if (structures.empty()) throw DataEmpty("train_mfsp: no structures");
  if (cfg.batch_size < 1)
    throw std::invalid_argument("train_mfsp: batch_size must be >= 1");

  std::unordered_map<int, const PseudoLabel*> label_of;
  for (const PseudoLabel& l : labels) label_of[l.structure_id] = &l;
  for (const Structure* s : structures)
    if (!label_of.count(s->id))
      throw std::invalid_argument("train_mfsp: structure " +
                                  std::to_string(s->id) +
                                  " has no pseudo label");

  const std::uint64_t agent_hash = agent.params().value_hash();
  Rng root(cfg.seed);
  MfspTrainResult result;

  std::vector<int> order(structures.size());
  std::iota(order.begin(), order.end(), 0);
  {
    Rng srng = root.split(1);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1],
                order[static_cast<std::size_t>(srng.next_below(i))]);
  }
  int m_total = static_cast<int>(order.size());
  int m_train = std::clamp(
      static_cast<int>(std::llround(cfg.train_fraction * m_total)), 1,
      m_total);
  std::vector<const Structure*> train_ptrs, val_ptrs;
  for (int i = 0; i < m_total; ++i) {
    const Structure* s = structures[static_cast<std::size_t>(
        order[static_cast<std::size_t>(i)])];
    if (i < m_train) {
      train_ptrs.push_back(s);
      result.train_structures.push_back(s->id);
    } else {
      val_ptrs.push_back(s);
      result.val_structures.push_back(s->id);
    }
  }
  if (val_ptrs.empty()) {
    val_ptrs = train_ptrs;
    result.val_structures = result.train_structures;
  }

  if (model.init() == MfspInit::Transfer) {
    model.adopt_agent(agent);
  } else {
    std::vector<GraphSample> enc;
    enc.reserve(train_ptrs.size());
    for (const Structure* s : train_ptrs) enc.push_back(encode_spatial(*s));
    std::vector<const Mat*> node_mats, edge_mats;
    for (const GraphSample& g : enc) {
      node_mats.push_back(&g.node_attrs);
      edge_mats.push_back(&g.edge_attrs);
    }
    model.norm().node = fit_stats(node_mats);
    model.norm().edge = fit_stats(edge_mats);
  }

  const int max_layers = model.config().max_layers;
  const bool hybrid = cfg.loss == MfspLoss::Hybrid;
  const bool transfer = model.init() == MfspInit::Transfer;

  struct Chunk {
    std::vector<const Structure*> structs;
    Mat extents;  // G x 3
    Mat targets;  // G x 3
    // Model-side cache; valid when the encoding does not change per epoch
    // (de-novo always, transfer only for center-VFP validation).
    std::vector<GraphSample> model_samples;
    GraphBatch model_batch;
    bool model_cached = false;
    // Agent-side cache for the hybrid loss: topology and edge features are
    // static, node features are rebuilt on the tape from the predictions.
    std::vector<GraphSample> agent_samples;
    GraphBatch agent_batch;
    Mat node_xyzh;
    Mat inv_story;
  };

  auto build_chunks = [&](const std::vector<const Structure*>& ptrs,
                          bool cache_model_center) {
    std::vector<Chunk> chunks;
    for (std::size_t at = 0; at < ptrs.size();
         at += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t hi = std::min(ptrs.size(),
                                at + static_cast<std::size_t>(cfg.batch_size));
      Chunk ch;
      ch.structs.assign(ptrs.begin() + static_cast<long>(at),
                        ptrs.begin() + static_cast<long>(hi));
      ch.extents = extents_of(ch.structs);
      ch.targets.resize(static_cast<int>(ch.structs.size()), 3);
      for (std::size_t i = 0; i < ch.structs.size(); ++i) {
        const PseudoLabel* lab = label_of.at(ch.structs[i]->id);
        ch.targets(static_cast<int>(i), 0) = lab->pgt_point.x;
        ch.targets(static_cast<int>(i), 1) = lab->pgt_point.y;
        ch.targets(static_cast<int>(i), 2) = lab->pgt_point.z;
      }
      if (!transfer || cache_model_center) {
        std::vector<const GraphSample*> sp;
        for (const Structure* s : ch.structs)
          ch.model_samples.push_back(
              model.encode_for(*s, center_vfp(s->grid)));
        for (const GraphSample& g : ch.model_samples) sp.push_back(&g);
        ch.model_batch = make_batch(sp, model.norm(), max_layers);
        ch.model_cached = true;
      }
      if (hybrid) {
        std::vector<const GraphSample*> sp;
        for (const Structure* s : ch.structs)
          ch.agent_samples.push_back(encode(*s, center_vfp(s->grid)));
        for (const GraphSample& g : ch.agent_samples) sp.push_back(&g);
        ch.agent_batch = make_batch(sp, agent.norm(), agent.config().max_layers);
        int n = ch.agent_batch.total_nodes();
        ch.node_xyzh.resize(n, 4);
        ch.inv_story.resize(n, 1);
        int row = 0;
        for (std::size_t g = 0; g < ch.agent_samples.size(); ++g) {
          const Mat& attrs = ch.agent_samples[g].node_attrs;
          double inv_h = 1.0 / ch.structs[g]->grid.story_height();
          for (int i = 0; i < attrs.rows(); ++i, ++row) {
            ch.node_xyzh.row(row) = attrs.row(i).leftCols(4);
            ch.inv_story(row, 0) = inv_h;
          }
        }
      }
      chunks.push_back(std::move(ch));
    }
    return chunks;
  };

  std::vector<Chunk> train_chunks = build_chunks(train_ptrs, false);
  std::vector<Chunk> val_chunks = build_chunks(val_ptrs, true);

  // Loss over one chunk; when `vfp_rng` is set (transfer training), a fresh
  // VFP is drawn per structure and the model inputs are re-encoded.
  auto chunk_loss = [&](Tape& tape, TapeBinding& bind, const Chunk& ch,
                        Rng* vfp_rng) {
    const GraphBatch* mb = &ch.model_batch;
    GraphBatch local;
    std::vector<GraphSample> local_samples;
    if (!ch.model_cached || vfp_rng) {
      std::vector<const GraphSample*> sp;
      for (const Structure* s : ch.structs) {
        FirePoint vfp =
            vfp_rng ? fire_point_at(s->grid,
                                    vfp_rng->uniform(0.0, s->grid.extent_x()),
                                    vfp_rng->uniform(0.0, s->grid.extent_y()),
                                    vfp_rng->uniform(0.0, s->grid.extent_z()))
                    : center_vfp(s->grid);
        local_samples.push_back(model.encode_for(*s, vfp));
      }
      for (const GraphSample& g : local_samples) sp.push_back(&g);
      local = make_batch(sp, model.norm(), max_layers);
      mb = &local;
    }

    Var pts = model.run_points(tape, bind, *mb, tape.constant(mb->node_x),
                               tape.constant(mb->edge_x),
                               tape.constant(ch.extents));
    Var d = tape.sub(pts, tape.constant(ch.targets));
    Var lmse = tape.mean_all(tape.row_sum(tape.hadamard(d, d)));
    if (!hybrid) return lmse;

    Var feat = agent_features_at(tape, agent, ch.agent_batch, ch.node_xyzh,
                                 ch.inv_story, pts);
    TapeBinding frozen(true);
    GnnForward afwd = agent.run(tape, frozen, ch.agent_batch, feat,
                                tape.constant(ch.agent_batch.edge_x));
    Var midr_pct = agent.denorm_midr(tape, afwd.midr_pred);
    return tape.add(tape.scale(tape.mean_all(midr_pct), -cfg.w1),
                    tape.scale(lmse, cfg.w2));
  };

  Adam opt(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<Mat> snap = model.params().snapshot();

  try {
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      Rng erng = root.split(100).split(static_cast<std::uint64_t>(epoch));
      double tr_tot = 0.0, tr_units = 0.0;
      for (const Chunk& ch : train_chunks) {
        Tape tape;
        TapeBinding bind;
        Var loss = chunk_loss(tape, bind, ch, transfer ? &erng : nullptr);
        tr_tot += tape.value(loss)(0, 0) *
                  static_cast<double>(ch.structs.size());
        tr_units += static_cast<double>(ch.structs.size());
        model.params().zero_grads();
        tape.backward(loss);
        bind.collect(tape);
        opt.step(model.params(), 1.0);
      }

      double vl_tot = 0.0, vl_units = 0.0;
      for (const Chunk& ch : val_chunks) {
        Tape tape;
        TapeBinding bind;
        Var loss = chunk_loss(tape, bind, ch, nullptr);
        vl_tot += tape.value(loss)(0, 0) *
                  static_cast<double>(ch.structs.size());
        vl_units += static_cast<double>(ch.structs.size());
      }

      double tr = tr_tot / tr_units, vl = vl_tot / vl_units;
      result.history.push_back({"mfsp", epoch, tr, vl});
      if (cfg.verbose)
        std::cerr << "[train] mfsp epoch " << epoch << " train " << tr
                  << " val " << vl << "\n";
      if (vl < best) {
        best = vl;
        snap = model.params().snapshot();
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        break;
      }
    }
  } catch (const NonFiniteValue& e) {
    throw NonFiniteLoss(std::string("train_mfsp: ") + e.what());
  }
  model.params().restore(snap);
  result.best_val_loss = best;

  // Report how much inference moves when the virtual fire point is
  // resampled; de-novo inputs carry no fire information at all.
  if (transfer) {
    const int kResamples = 8;
    double acc = 0.0;
    for (const Structure* s : val_ptrs) {
      Rng vr = root.split(900).split(static_cast<std::uint64_t>(s->id));
      std::vector<Vec3> preds;
      preds.reserve(kResamples);
      for (int k = 0; k < kResamples; ++k) {
        FirePoint vfp =
            fire_point_at(s->grid, vr.uniform(0.0, s->grid.extent_x()),
                          vr.uniform(0.0, s->grid.extent_y()),
                          vr.uniform(0.0, s->grid.extent_z()));
        preds.push_back(model.predict_with(*s, vfp));
      }
      Vec3 mean{0, 0, 0};
      for (const Vec3& p : preds) {
        mean.x += p.x / kResamples;
        mean.y += p.y / kResamples;
        mean.z += p.z / kResamples;
      }
      double ms = 0.0;
      for (const Vec3& p : preds)
        ms += ((p.x - mean.x) * (p.x - mean.x) +
               (p.y - mean.y) * (p.y - mean.y) +
               (p.z - mean.z) * (p.z - mean.z)) /
              kResamples;
      acc += std::sqrt(ms);
    }
    result.vfp_spread = acc / static_cast<double>(val_ptrs.size());
  }

  if (agent.params().value_hash() != agent_hash)
    throw FrozenAgentViolated("agent parameters changed during MFSP training");
  return result;
}

}  // namespace firedrift
