#include "firedrift/nn.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace firedrift {

Param* ParamStore::add(const std::string& name, int rows, int cols) {
  if (by_name_.count(name))
    throw std::invalid_argument("duplicate parameter name: " + name);
  auto p = std::make_unique<Param>();
  p->name = name;
  p->value = Mat::Zero(rows, cols);
  p->grad = Mat::Zero(rows, cols);
  Param* raw = p.get();
  params_.push_back(std::move(p));
  by_name_[name] = raw;
  return raw;
}

Param* ParamStore::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

const Param* ParamStore::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

std::vector<Param*> ParamStore::all() {
  std::vector<Param*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Param*> ParamStore::all() const {
  std::vector<const Param*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p->grad.setZero();
}

void ParamStore::set_trainable(bool trainable) {
  for (auto& p : params_) p->trainable = trainable;
}

std::vector<Mat> ParamStore::snapshot() const {
  std::vector<Mat> snap;
  snap.reserve(params_.size());
  for (const auto& p : params_) snap.push_back(p->value);
  return snap;
}

void ParamStore::restore(const std::vector<Mat>& snap) {
  if (snap.size() != params_.size())
    throw std::invalid_argument("snapshot size mismatch");
  for (std::size_t i = 0; i < snap.size(); ++i) params_[i]->value = snap[i];
}

std::uint64_t ParamStore::value_hash() const {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  auto feed = [&h](const void* data, std::size_t len) {
    const unsigned char* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& p : params_)
    feed(p->value.data(),
         static_cast<std::size_t>(p->value.size()) * sizeof(double));
  return h;
}

void glorot_init(Mat& w, int fan_in, int fan_out, Rng& rng) {
  double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (Eigen::Index c = 0; c < w.cols(); ++c)
    for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-a, a);
}

Var TapeBinding::use(Tape& tape, Param* p) {
  if (frozen_) return tape.constant(p->value);
  Var v = tape.leaf(p->value, p->trainable);
  bound_.emplace_back(p, v);
  return v;
}

void TapeBinding::collect(const Tape& tape) {
  for (auto& [p, v] : bound_) {
    if (!p->trainable) continue;
    p->grad += tape.grad(v);
  }
}

Mlp Mlp::create(ParamStore& store, const std::string& prefix, int in,
                int hidden, int out, Rng& rng) {
  Mlp mlp;
  mlp.w1 = store.add(prefix + ".w1", in, hidden);
  mlp.b1 = store.add(prefix + ".b1", 1, hidden);
  mlp.w2 = store.add(prefix + ".w2", hidden, out);
  mlp.b2 = store.add(prefix + ".b2", 1, out);
  glorot_init(mlp.w1->value, in, hidden, rng);
  glorot_init(mlp.w2->value, hidden, out, rng);
  return mlp;
}

Var Mlp::forward(Tape& tape, TapeBinding& bind, Var x) const {
  Var h =
      tape.relu(tape.affine(x, bind.use(tape, w1), bind.use(tape, b1)));
  return tape.affine(h, bind.use(tape, w2), bind.use(tape, b2));
}

std::size_t Mlp::parameter_count() const {
  return static_cast<std::size_t>(w1->value.size() + b1->value.size() +
                                  w2->value.size() + b2->value.size());
}

Linear Linear::create(ParamStore& store, const std::string& prefix, int in,
                      int out, Rng& rng) {
  Linear lin;
  lin.w = store.add(prefix + ".w", in, out);
  lin.b = store.add(prefix + ".b", 1, out);
  glorot_init(lin.w->value, in, out, rng);
  return lin;
}

Var Linear::forward(Tape& tape, TapeBinding& bind, Var x) const {
  return tape.affine(x, bind.use(tape, w), bind.use(tape, b));
}

std::size_t Linear::parameter_count() const {
  return static_cast<std::size_t>(w->value.size() + b->value.size());
}

void Adam::step(ParamStore& store, double lr_scale) {
  ++t_;
  double b1t = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double b2t = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (Param* p : store.all()) {
    if (!p->trainable) continue;
    if (p->m.size() == 0) {
      p->m = Mat::Zero(p->value.rows(), p->value.cols());
      p->v = Mat::Zero(p->value.rows(), p->value.cols());
    }
    p->m = cfg_.beta1 * p->m + (1.0 - cfg_.beta1) * p->grad;
    p->v = cfg_.beta2 * p->v +
           (1.0 - cfg_.beta2) * p->grad.cwiseProduct(p->grad);
    Mat m_hat = p->m / b1t;
    Mat v_hat = p->v / b2t;
    p->value.array() -= cfg_.lr * lr_scale * m_hat.array() /
                        (v_hat.array().sqrt() + cfg_.eps);
  }
}

}  // namespace firedrift
