#include "firedrift/gnn.hpp"

#include <stdexcept>
#include <utility>

namespace firedrift {

std::string to_string(MidrMethod m) {
  switch (m) {
    case MidrMethod::TwoStep: return "proposed";
    case MidrMethod::Strawman1: return "strawman1";
    case MidrMethod::Strawman2: return "strawman2";
  }
  throw std::invalid_argument("unknown MidrMethod");
}

MidrMethod midr_method_from_string(const std::string& name) {
  if (name == "proposed") return MidrMethod::TwoStep;
  if (name == "strawman1") return MidrMethod::Strawman1;
  if (name == "strawman2") return MidrMethod::Strawman2;
  throw std::invalid_argument("unknown method: " + name);
}

GnnConfig GnnConfig::small_size(bool edge_update) {
  GnnConfig c;
  c.node_dim = 32;
  c.edge_dim = 32;
  c.msg_hidden = 64;
  c.upd_hidden = 64;
  c.eu_hidden = 32;
  c.edge_update = edge_update;
  return c;
}

GnnConfig GnnConfig::large_size(bool edge_update) {
  GnnConfig c;
  c.node_dim = 64;
  c.edge_dim = 64;
  c.msg_hidden = 128;
  c.upd_hidden = 128;
  c.eu_hidden = 64;
  c.edge_update = edge_update;
  return c;
}

void to_json(Json& j, const GnnConfig& c) {
  j = Json{{"node_in", c.node_in},       {"edge_in", c.edge_in},
           {"node_dim", c.node_dim},     {"edge_dim", c.edge_dim},
           {"msg_hidden", c.msg_hidden}, {"upd_hidden", c.upd_hidden},
           {"eu_hidden", c.eu_hidden},   {"max_layers", c.max_layers},
           {"edge_update", c.edge_update}};
}

void from_json(const Json& j, GnnConfig& c) {
  j.at("node_in").get_to(c.node_in);
  j.at("edge_in").get_to(c.edge_in);
  j.at("node_dim").get_to(c.node_dim);
  j.at("edge_dim").get_to(c.edge_dim);
  j.at("msg_hidden").get_to(c.msg_hidden);
  j.at("upd_hidden").get_to(c.upd_hidden);
  j.at("eu_hidden").get_to(c.eu_hidden);
  j.at("max_layers").get_to(c.max_layers);
  j.at("edge_update").get_to(c.edge_update);
}

void to_json(Json& j, const NormStats& s) {
  j = Json{{"node", s.node}, {"edge", s.edge}, {"idr", s.idr},
           {"midr", s.midr}};
}

void from_json(const Json& j, NormStats& s) {
  j.at("node").get_to(s.node);
  j.at("edge").get_to(s.edge);
  j.at("idr").get_to(s.idr);
  j.at("midr").get_to(s.midr);
}

GraphBatch make_batch(const std::vector<const GraphSample*>& samples,
                      const NormStats& stats, int max_layers) {
  if (samples.empty()) throw std::invalid_argument("make_batch: no samples");

  GraphBatch b;
  b.num_graphs = static_cast<int>(samples.size());
  b.node_bounds.reserve(samples.size() + 1);
  b.node_bounds.push_back(0);

  int n_nodes = 0, n_edges = 0;
  for (const GraphSample* s : samples) {
    if (s->num_stories < 1)
      throw std::invalid_argument("make_batch: sample with no stories");
    if (s->num_stories > max_layers)
      throw LayerOverflow("sample depth " + std::to_string(s->num_stories) +
                          " exceeds layer budget " +
                          std::to_string(max_layers));
    if (s->node_attrs.cols() != stats.node.cols() ||
        s->edge_attrs.cols() != stats.edge.cols())
      throw ShapeMismatch("make_batch: feature width does not match stats");
    n_nodes += static_cast<int>(s->node_attrs.rows());
    n_edges += static_cast<int>(s->edge_attrs.rows());
    b.node_bounds.push_back(n_nodes);
    b.stories.push_back(s->num_stories);
    b.structure_ids.push_back(s->structure_id);
    b.scenario_ids.push_back(s->scenario_id);
    b.depth = std::max(b.depth, s->num_stories);
  }

  Mat node_raw(n_nodes, stats.node.cols());
  Mat edge_raw(n_edges, stats.edge.cols());
  std::vector<int> src_all(static_cast<std::size_t>(n_edges));
  std::vector<int> dst_all(static_cast<std::size_t>(n_edges));
  std::vector<int> edge_lo;  // first edge row of each graph
  edge_lo.reserve(samples.size() + 1);

  int nr = 0, er = 0;
  for (const GraphSample* s : samples) {
    int nn = static_cast<int>(s->node_attrs.rows());
    int ne = static_cast<int>(s->edge_attrs.rows());
    node_raw.middleRows(nr, nn) = s->node_attrs;
    edge_raw.middleRows(er, ne) = s->edge_attrs;
    edge_lo.push_back(er);
    for (int i = 0; i < ne; ++i) {
      src_all[static_cast<std::size_t>(er + i)] = nr + s->edge_src[static_cast<std::size_t>(i)];
      dst_all[static_cast<std::size_t>(er + i)] = nr + s->edge_dst[static_cast<std::size_t>(i)];
    }
    nr += nn;
    er += ne;
  }
  edge_lo.push_back(er);

  b.node_x = normalize(node_raw, stats.node);
  b.edge_x = normalize(edge_raw, stats.edge);

  b.layer_edges.resize(static_cast<std::size_t>(b.depth));
  b.layer_src.resize(static_cast<std::size_t>(b.depth));
  b.layer_dst.resize(static_cast<std::size_t>(b.depth));
  b.layer_mask.resize(static_cast<std::size_t>(b.depth));
  b.layer_full.resize(static_cast<std::size_t>(b.depth));

  for (int k = 0; k < b.depth; ++k) {
    auto uk = static_cast<std::size_t>(k);
    Mat mask = Mat::Zero(n_nodes, 1);
    int active = 0;
    for (int g = 0; g < b.num_graphs; ++g) {
      auto ug = static_cast<std::size_t>(g);
      if (b.stories[ug] <= k) continue;
      ++active;
      mask.middleRows(b.node_bounds[ug],
                      b.node_bounds[ug + 1] - b.node_bounds[ug])
          .setOnes();
      for (int e = edge_lo[ug]; e < edge_lo[ug + 1]; ++e) {
        auto ue = static_cast<std::size_t>(e);
        b.layer_edges[uk].push_back(e);
        b.layer_src[uk].push_back(src_all[ue]);
        b.layer_dst[uk].push_back(dst_all[ue]);
      }
    }
    b.layer_mask[uk] = std::move(mask);
    b.layer_full[uk] = active == b.num_graphs;
  }
  return b;
}

GnnBackbone GnnBackbone::create(ParamStore& store, const GnnConfig& cfg,
                                Rng& rng) {
  GnnBackbone bb;
  bb.cfg_ = cfg;

  auto grab = [&bb](const Mlp& m) {
    bb.params_.push_back(m.w1);
    bb.params_.push_back(m.b1);
    bb.params_.push_back(m.w2);
    bb.params_.push_back(m.b2);
  };

  Rng r_node = rng.split(1);
  bb.node_enc_ = Mlp::create(store, "node_enc", cfg.node_in, cfg.node_dim,
                             cfg.node_dim, r_node);
  grab(bb.node_enc_);

  Rng r_edge = rng.split(2);
  bb.edge_enc_ = Mlp::create(store, "edge_enc", cfg.edge_in, cfg.edge_dim,
                             cfg.edge_dim, r_edge);
  grab(bb.edge_enc_);

  bb.msg_.reserve(static_cast<std::size_t>(cfg.max_layers));
  bb.upd_.reserve(static_cast<std::size_t>(cfg.max_layers));
  for (int k = 0; k < cfg.max_layers; ++k) {
    std::string tag = std::to_string(k + 1);
    Rng rm = rng.split(10 + static_cast<std::uint64_t>(k));
    bb.msg_.push_back(Mlp::create(store, "msg" + tag,
                                  cfg.node_dim + cfg.edge_dim, cfg.msg_hidden,
                                  cfg.node_dim, rm));
    grab(bb.msg_.back());
    Rng ru = rng.split(20 + static_cast<std::uint64_t>(k));
    bb.upd_.push_back(Mlp::create(store, "upd" + tag, cfg.node_dim,
                                  cfg.upd_hidden, cfg.node_dim, ru));
    grab(bb.upd_.back());
  }

  if (cfg.edge_update) {
    Rng re = rng.split(40);
    bb.eu_ = Mlp::create(store, "eu", 2 * cfg.node_dim, cfg.eu_hidden,
                         cfg.edge_dim, re);
    grab(bb.eu_);
  }
  return bb;
}

GnnBackbone::Out GnnBackbone::run(Tape& tape, TapeBinding& bind,
                                  const GraphBatch& batch, Var node_x,
                                  Var edge_x) const {
  if (batch.depth > cfg_.max_layers)
    throw LayerOverflow("batch depth exceeds configured layers");

  const int n = batch.total_nodes();
  Var v = node_enc_.forward(tape, bind, node_x);
  Var e = edge_enc_.forward(tape, bind, edge_x);

  for (int k = 0; k < batch.depth; ++k) {
    auto uk = static_cast<std::size_t>(k);
    const auto& rows = batch.layer_edges[uk];

    Var agg;
    if (rows.empty()) {
      agg = tape.constant(Mat::Zero(n, cfg_.node_dim));
    } else {
      Var src = tape.gather_rows(v, batch.layer_src[uk]);
      // When every graph is active the edge subset is the identity.
      Var eat = batch.layer_full[uk] ? e : tape.gather_rows(e, rows);
      Var msg = msg_[uk].forward(tape, bind, tape.concat_cols(src, eat));
      agg = tape.scatter_max(msg, batch.layer_dst[uk], n);
    }

    Var delta = upd_[uk].forward(tape, bind, agg);
    if (!batch.layer_full[uk])
      delta = tape.mul_col(delta, tape.constant(batch.layer_mask[uk]));
    v = tape.add(v, delta);

    if (cfg_.edge_update && !rows.empty()) {
      Var vi = tape.gather_rows(v, batch.layer_dst[uk]);
      Var vj = tape.gather_rows(v, batch.layer_src[uk]);
      Var dz = eu_.forward(tape, bind, tape.concat_cols(vi, vj));
      // Residual refresh of just the active edge rows; inactive rows get +0.
      e = batch.layer_full[uk]
              ? tape.add(e, dz)
              : tape.add(e, tape.scatter_rows(
                                dz, rows,
                                static_cast<int>(batch.edge_x.rows())));
    }
  }

  Out out;
  out.node_emb = v;
  out.edge_emb = e;
  out.pooled = tape.concat_cols(tape.segment_mean(v, batch.node_bounds),
                                tape.segment_max(v, batch.node_bounds));
  return out;
}

Var GnnBackbone::encode_edges(Tape& tape, TapeBinding& bind,
                              Var edge_x) const {
  return edge_enc_.forward(tape, bind, edge_x);
}

std::size_t GnnBackbone::parameter_count() const {
  std::size_t n = 0;
  for (const Param* p : params_)
    n += static_cast<std::size_t>(p->value.size());
  return n;
}

void GnnBackbone::copy_values_from(const GnnBackbone& other) {
  if (params_.size() != other.params_.size())
    throw ShapeMismatch("backbone copy: parameter lists differ");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i]->value.rows() != other.params_[i]->value.rows() ||
        params_[i]->value.cols() != other.params_[i]->value.cols())
      throw ShapeMismatch("backbone copy: shape mismatch at " +
                          params_[i]->name);
    params_[i]->value = other.params_[i]->value;
  }
}

MidrModel::MidrModel(const GnnConfig& cfg, MidrMethod method,
                     std::uint64_t seed)
    : cfg_(cfg), method_(method) {
  Rng root(seed);
  backbone_ = GnnBackbone::create(store_, cfg_, root);
  Rng r1 = root.split(50);
  head1_ = Linear::create(store_, "head1", cfg_.node_dim, 1, r1);
  Rng r2 = root.split(51);
  head2_ = Linear::create(store_, "head2", 2 * cfg_.node_dim, 1, r2);
}

void MidrModel::set_backbone_trainable(bool trainable) {
  for (Param* p : backbone_.parameters()) p->trainable = trainable;
}

void MidrModel::set_head1_trainable(bool trainable) {
  head1_.w->trainable = trainable;
  head1_.b->trainable = trainable;
}

void MidrModel::set_head2_trainable(bool trainable) {
  head2_.w->trainable = trainable;
  head2_.b->trainable = trainable;
}

GnnForward MidrModel::run(Tape& tape, TapeBinding& bind,
                          const GraphBatch& batch, Var node_x,
                          Var edge_x) const {
  GnnBackbone::Out out = backbone_.run(tape, bind, batch, node_x, edge_x);

  GnnForward fwd;
  fwd.node_emb = out.node_emb;
  fwd.pooled = out.pooled;
  fwd.node_pred = head1_.forward(tape, bind, out.node_emb);
  if (method_ == MidrMethod::Strawman2)
    fwd.midr_pred = tape.segment_max(fwd.node_pred, batch.node_bounds);
  else
    fwd.midr_pred = head2_.forward(tape, bind, out.pooled);
  return fwd;
}

GnnForward MidrModel::run(Tape& tape, TapeBinding& bind,
                          const GraphBatch& batch) const {
  Var nx = tape.constant(batch.node_x);
  Var ex = tape.constant(batch.edge_x);
  return run(tape, bind, batch, nx, ex);
}

Var MidrModel::head2_on(Tape& tape, TapeBinding& bind, Var pooled) const {
  return head2_.forward(tape, bind, pooled);
}

Var MidrModel::denorm_midr(Tape& tape, Var midr_pred) const {
  const ScalarStats& st =
      method_ == MidrMethod::Strawman2 ? norm_.idr : norm_.midr;
  double range = st.max - st.min;
  Var scaled = tape.scale(midr_pred, range > 0.0 ? range : 0.0);
  return tape.add_row(scaled, tape.constant(Mat::Constant(1, 1, st.min)));
}

Eigen::VectorXd MidrModel::predict_node_idr(const GraphSample& sample) const {
  GraphBatch batch = make_batch({&sample}, norm_, cfg_.max_layers);
  Tape tape;
  TapeBinding bind;
  GnnForward fwd = run(tape, bind, batch);
  const Mat& np = tape.value(fwd.node_pred);
  Eigen::VectorXd out(np.rows());
  for (int i = 0; i < np.rows(); ++i)
    out(i) = norm_.idr.denormalize(np(i, 0));
  return out;
}

double MidrModel::predict_midr(const GraphSample& sample) const {
  return predict_midr_batch({&sample})(0);
}

Eigen::VectorXd MidrModel::predict_midr_batch(
    const std::vector<const GraphSample*>& samples) const {
  GraphBatch batch = make_batch(samples, norm_, cfg_.max_layers);
  Tape tape;
  TapeBinding bind;
  GnnForward fwd = run(tape, bind, batch);
  const Mat& mp = tape.value(fwd.midr_pred);
  const ScalarStats& st =
      method_ == MidrMethod::Strawman2 ? norm_.idr : norm_.midr;
  Eigen::VectorXd out(mp.rows());
  for (int i = 0; i < mp.rows(); ++i) out(i) = st.denormalize(mp(i, 0));
  return out;
}

Mat MidrModel::pooled_embeddings(const GraphBatch& batch) const {
  Tape tape;
  TapeBinding bind;
  GnnBackbone::Out out = backbone_.run(tape, bind, batch,
                                       tape.constant(batch.node_x),
                                       tape.constant(batch.edge_x));
  return tape.value(out.pooled);
}

}  // namespace firedrift
