#include "firedrift/nn.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

namespace firedrift {
namespace {

TEST(ParamStore, AddFindAndCount) {
  ParamStore store;
  Param* w = store.add("w", 3, 4);
  Param* b = store.add("b", 1, 4);
  EXPECT_EQ(store.find("w"), w);
  EXPECT_EQ(store.find("b"), b);
  EXPECT_EQ(store.find("missing"), nullptr);
  EXPECT_EQ(store.parameter_count(), 16u);
  EXPECT_EQ(store.all().size(), 2u);
}

TEST(ParamStore, ZeroGradsClearsAccumulation) {
  ParamStore store;
  Param* w = store.add("w", 2, 2);
  w->grad = Mat::Ones(2, 2);
  store.zero_grads();
  EXPECT_TRUE(mats_equal(w->grad, Mat::Zero(2, 2)));
}

TEST(ParamStore, SnapshotRestoreIsBitExact) {
  ParamStore store;
  Param* w = store.add("w", 3, 3);
  w->value = test_matrix(3, 3, 1);
  std::uint64_t h0 = store.value_hash();
  std::vector<Mat> snap = store.snapshot();

  w->value(1, 1) += 0.5;
  EXPECT_NE(store.value_hash(), h0);

  store.restore(snap);
  EXPECT_EQ(store.value_hash(), h0);
  EXPECT_TRUE(mats_equal(w->value, test_matrix(3, 3, 1)));
}

TEST(ParamStore, ValueHashSeesEveryEntry) {
  ParamStore a, b;
  a.add("w", 2, 2)->value = Mat::Zero(2, 2);
  b.add("w", 2, 2)->value = Mat::Zero(2, 2);
  EXPECT_EQ(a.value_hash(), b.value_hash());
  b.find("w")->value(1, 0) = 1e-300;
  EXPECT_NE(a.value_hash(), b.value_hash());
}

TEST(Nn, GlorotBoundsAndDeterminism) {
  Mat w1(64, 32), w2(64, 32);
  {
    Rng rng(7);
    glorot_init(w1, 64, 32, rng);
  }
  {
    Rng rng(7);
    glorot_init(w2, 64, 32, rng);
  }
  EXPECT_TRUE(mats_equal(w1, w2));
  double a = std::sqrt(6.0 / (64 + 32));
  EXPECT_LE(w1.maxCoeff(), a);
  EXPECT_GE(w1.minCoeff(), -a);
  // Values actually spread over the range.
  EXPECT_GT(w1.maxCoeff(), 0.5 * a);
  EXPECT_LT(w1.minCoeff(), -0.5 * a);
}

TEST(Nn, MlpForwardMatchesHandRolledMath) {
  ParamStore store;
  Rng rng(3);
  Mlp mlp = Mlp::create(store, "mlp", 5, 8, 2, rng);
  Mat x = test_matrix(7, 5, 9);

  Tape tape;
  TapeBinding bind;
  Mat got = tape.value(mlp.forward(tape, bind, tape.constant(x)));

  Mat h = (x * mlp.w1->value).rowwise() + mlp.b1->value.row(0);
  Mat relu = h.cwiseMax(0.0);
  Mat want = (relu * mlp.w2->value).rowwise() + mlp.b2->value.row(0);
  EXPECT_TRUE(mats_near(got, want, 1e-12));
}

TEST(Nn, MlpParameterCount) {
  ParamStore store;
  Rng rng(3);
  Mlp mlp = Mlp::create(store, "mlp", 5, 8, 2, rng);
  EXPECT_EQ(mlp.parameter_count(), 5u * 8 + 8 + 8 * 2 + 2);
  EXPECT_EQ(store.parameter_count(), mlp.parameter_count());
}

TEST(Nn, LinearForwardAndCount) {
  ParamStore store;
  Rng rng(4);
  Linear lin = Linear::create(store, "lin", 6, 3, rng);
  EXPECT_EQ(lin.parameter_count(), 6u * 3 + 3);

  Mat x = test_matrix(4, 6, 10);
  Tape tape;
  TapeBinding bind;
  Mat got = tape.value(lin.forward(tape, bind, tape.constant(x)));
  Mat want = (x * lin.w->value).rowwise() + lin.b->value.row(0);
  EXPECT_TRUE(mats_near(got, want, 1e-12));
}

TEST(Nn, BindingCollectsGradientsIntoParams) {
  ParamStore store;
  Param* w = store.add("w", 2, 2);
  w->value = test_matrix(2, 2, 11);
  w->grad = Mat::Zero(2, 2);

  Tape tape;
  TapeBinding bind;
  Var a = bind.use(tape, w);
  Var b = bind.use(tape, w);  // a second use of the same parameter
  tape.backward(tape.sum_all(tape.add(a, b)));
  bind.collect(tape);
  EXPECT_TRUE(mats_equal(w->grad, 2.0 * Mat::Ones(2, 2)));
}

TEST(Nn, FrozenBindingFeedsConstants) {
  ParamStore store;
  Param* w = store.add("w", 2, 2);
  w->value = test_matrix(2, 2, 12);
  w->grad = Mat::Zero(2, 2);

  Tape tape;
  TapeBinding bind(true);
  Var a = bind.use(tape, w);
  Var x = tape.leaf(test_matrix(2, 2, 13), true);
  tape.backward(tape.sum_all(tape.hadamard(a, x)));
  bind.collect(tape);
  // The surrounding graph still differentiates; the parameter does not.
  EXPECT_TRUE(mats_equal(w->grad, Mat::Zero(2, 2)));
  EXPECT_TRUE(mats_equal(tape.grad(x), w->value));
}

TEST(Nn, NonTrainableParamsBindAsConstants) {
  ParamStore store;
  Param* w = store.add("w", 1, 1);
  w->value = Mat::Ones(1, 1);
  w->grad = Mat::Zero(1, 1);
  w->trainable = false;

  Tape tape;
  TapeBinding bind;
  Var a = bind.use(tape, w);
  tape.backward(tape.sum_all(a));
  bind.collect(tape);
  EXPECT_TRUE(mats_equal(w->grad, Mat::Zero(1, 1)));
}

TEST(Adam, QuadraticConvergesWithinBudget) {
  // One scalar parameter, loss (x - c)^2. Adam rides at roughly lr per step
  // and then limit-cycles near the optimum until momentum decays, so the
  // budget is generous relative to the 1.0 starting distance.
  ParamStore store;
  Param* x = store.add("x", 1, 1);
  x->value = Mat::Constant(1, 1, 1.3);
  const double target = 0.3;

  AdamConfig cfg;
  cfg.lr = 0.01;
  Adam opt(cfg);
  for (int step = 0; step < 1000; ++step) {
    store.zero_grads();
    Tape tape;
    TapeBinding bind;
    Var xv = bind.use(tape, x);
    Var diff = tape.sub(xv, tape.scalar(target));
    tape.backward(tape.hadamard(diff, diff));
    bind.collect(tape);
    opt.step(store);
  }
  EXPECT_LT(std::abs(x->value(0, 0) - target), 1e-3);
}

TEST(Adam, IdenticalRunsProduceIdenticalTrajectories) {
  auto run = [] {
    ParamStore store;
    Rng rng(21);
    Mlp mlp = Mlp::create(store, "m", 3, 4, 1, rng);
    Adam opt;
    Mat x = test_matrix(6, 3, 22);
    Mat y = test_matrix(6, 1, 23);
    for (int step = 0; step < 10; ++step) {
      store.zero_grads();
      Tape tape;
      TapeBinding bind;
      Var pred = mlp.forward(tape, bind, tape.constant(x));
      tape.backward(tape.mse(pred, tape.constant(y)));
      bind.collect(tape);
      opt.step(store);
    }
    return store.value_hash();
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, ZeroGradientLeavesParametersUntouched) {
  ParamStore store;
  Param* w = store.add("w", 2, 2);
  w->value = test_matrix(2, 2, 31);
  w->grad = Mat::Zero(2, 2);
  Mat before = w->value;

  Adam opt;
  opt.step(store);
  opt.step(store);
  EXPECT_TRUE(mats_equal(w->value, before));
}

TEST(Adam, SkipsFrozenParameters) {
  ParamStore store;
  Param* w = store.add("w", 2, 2);
  w->value = test_matrix(2, 2, 32);
  w->grad = Mat::Ones(2, 2);
  w->trainable = false;
  Mat before = w->value;

  Adam opt;
  opt.step(store);
  EXPECT_TRUE(mats_equal(w->value, before));
}

TEST(Adam, LrScaleShrinksTheStep) {
  auto step_size = [](double scale) {
    ParamStore store;
    Param* w = store.add("w", 1, 1);
    w->value = Mat::Zero(1, 1);
    w->grad = Mat::Ones(1, 1);
    Adam opt;
    opt.step(store, scale);
    return std::abs(w->value(0, 0));
  };
  double full = step_size(1.0);
  double tenth = step_size(0.1);
  EXPECT_GT(full, 0.0);
  EXPECT_NEAR(tenth, 0.1 * full, 1e-12);
}

}  // namespace
}  // namespace firedrift
