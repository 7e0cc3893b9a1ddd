#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "firedrift/autodiff.hpp"
#include "firedrift/rng.hpp"

namespace firedrift {

struct Param {
  std::string name;
  Mat value;
  Mat grad;
  Mat m, v;  // optimizer moments, allocated on first step
  bool trainable = true;
};

// Owns model parameters by name. Pointers handed out stay valid for the
// store's lifetime.
class ParamStore {
 public:
  Param* add(const std::string& name, int rows, int cols);
  Param* find(const std::string& name);
  const Param* find(const std::string& name) const;

  std::vector<Param*> all();
  std::vector<const Param*> all() const;

  std::size_t parameter_count() const;
  void zero_grads();
  void set_trainable(bool trainable);

  // Deep copy of current values, restorable later (early-stopping snapshots).
  std::vector<Mat> snapshot() const;
  void restore(const std::vector<Mat>& snap);

  // FNV-1a over the raw bytes of all values, in registration order.
  std::uint64_t value_hash() const;

 private:
  std::vector<std::unique_ptr<Param>> params_;
  std::unordered_map<std::string, Param*> by_name_;
};

// U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
void glorot_init(Mat& w, int fan_in, int fan_out, Rng& rng);

// Records which tape leaf holds which parameter during one forward pass so
// gradients can be pulled back out after backward(). A frozen binding feeds
// parameter values through as constants instead: no gradients are computed
// for them and collect() is a no-op, which is how a frozen agent is run
// inside someone else's training loop.
class TapeBinding {
 public:
  TapeBinding() = default;
  explicit TapeBinding(bool frozen) : frozen_(frozen) {}

  Var use(Tape& tape, Param* p);
  // Accumulate tape gradients into Param::grad for trainable parameters.
  void collect(const Tape& tape);

 private:
  std::vector<std::pair<Param*, Var>> bound_;
  bool frozen_ = false;
};

// Single-hidden-layer perceptron: Linear, ReLU, Linear. The output is linear
// unless an activation is requested at the call site.
struct Mlp {
  Param* w1 = nullptr;
  Param* b1 = nullptr;
  Param* w2 = nullptr;
  Param* b2 = nullptr;

  static Mlp create(ParamStore& store, const std::string& prefix, int in,
                    int hidden, int out, Rng& rng);

  Var forward(Tape& tape, TapeBinding& bind, Var x) const;
  std::size_t parameter_count() const;
};

// Affine map with no hidden layer, for task heads.
struct Linear {
  Param* w = nullptr;
  Param* b = nullptr;

  static Linear create(ParamStore& store, const std::string& prefix, int in,
                       int out, Rng& rng);

  Var forward(Tape& tape, TapeBinding& bind, Var x) const;
  std::size_t parameter_count() const;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive-moment optimizer with bias correction. Skips frozen parameters.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(ParamStore& store, double lr_scale = 1.0);
  void reset() { t_ = 0; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
};

}  // namespace firedrift
