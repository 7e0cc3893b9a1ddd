// Acceptance gate for the fire-drift pipeline. Each numbered criterion runs
// its checks, prints one PASS/FAIL summary line, and the process exits
// nonzero if any criterion failed. Pass criterion numbers as arguments to
// run a subset, e.g. `firedrift_acceptance 5 6`.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "firedrift/autodiff.hpp"
#include "firedrift/dataset.hpp"
#include "firedrift/fea.hpp"
#include "firedrift/gnn.hpp"
#include "firedrift/graph.hpp"
#include "firedrift/metrics.hpp"
#include "firedrift/mfsp.hpp"
#include "firedrift/nn.hpp"
#include "firedrift/rng.hpp"
#include "firedrift/structgen.hpp"
#include "firedrift/thermal.hpp"
#include "firedrift/train_midr.hpp"

namespace firedrift {
namespace {

namespace fs = std::filesystem;

std::string str(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct Crit {
  bool pass = true;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    std::printf("    %-4s %s\n", ok ? "ok" : "FAIL", what.c_str());
    std::fflush(stdout);
  }

  void near(double got, double want, double tol, const std::string& what) {
    check(std::abs(got - want) <= tol,
          what + ": got " + str(got) + ", want " + str(want) + " +-" +
              str(tol));
  }

  void rel(double got, double want, double rtol, const std::string& what) {
    double err = std::abs(got - want) / std::max(std::abs(want), 1e-300);
    check(err <= rtol, what + ": got " + str(got) + ", want " + str(want) +
                           " (rel err " + str(err) + ", limit " + str(rtol) +
                           ")");
  }
};

// ---------------------------------------------------------------------------
// Finite-difference gradient checking without the unit-test framework.

using ScalarFn = std::function<Var(Tape&, Var)>;

double eval_scalar(const ScalarFn& f, const Mat& x) {
  Tape t;
  return t.value(f(t, t.leaf(x, false)))(0, 0);
}

// Central differences entry by entry; returns the worst relative error seen
// (0 when every entry lands under the absolute floor).
bool gradients_match(const ScalarFn& f, const Mat& x0, double step,
                     double rel_tol, double abs_floor, double* worst_rel) {
  Tape tape;
  Var x = tape.leaf(x0, true);
  Var y = f(tape, x);
  tape.backward(y);
  Mat g = tape.grad(x);
  if (g.rows() != x0.rows() || g.cols() != x0.cols()) return false;

  bool ok = true;
  double worst = 0.0;
  for (int r = 0; r < x0.rows(); ++r) {
    for (int c = 0; c < x0.cols(); ++c) {
      Mat xp = x0, xm = x0;
      xp(r, c) += step;
      xm(r, c) -= step;
      double fd = (eval_scalar(f, xp) - eval_scalar(f, xm)) / (2.0 * step);
      double scale = std::max(std::abs(fd), std::abs(g(r, c)));
      double diff = std::abs(g(r, c) - fd);
      if (diff <= abs_floor) continue;
      double rel = diff / std::max(scale, 1e-300);
      worst = std::max(worst, rel);
      if (rel > rel_tol) ok = false;
    }
  }
  if (worst_rel) *worst_rel = worst;
  return ok;
}

Mat fixed_matrix(int rows, int cols, std::uint64_t seed, double lo = -1.0,
                 double hi = 1.0) {
  Rng rng(seed);
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
  return m;
}

// ---------------------------------------------------------------------------
// Seeded desk-scale corpus helpers (mirrors the pipeline, in process).

StructGenConfig desk_config(int count_min, int count_max) {
  StructGenConfig cfg;
  cfg.count_min = count_min;
  cfg.count_max = count_max;
  return cfg;
}

std::vector<Structure> desk_corpus(int want, std::uint64_t seed,
                                   const StructGenConfig& cfg) {
  std::vector<Structure> out;
  out.reserve(static_cast<std::size_t>(want));
  for (std::uint64_t candidate = 0; static_cast<int>(out.size()) < want;
       ++candidate) {
    Structure s = generate_structure(mix64(seed, candidate), cfg);
    SimResult gravity;
    try {
      gravity = run_scenario(s, -1, {});
    } catch (const SingularSystem&) {
      continue;
    }
    if (!gravity_filter(s, gravity, cfg)) continue;
    s.id = static_cast<int>(out.size());
    s.gravity_midr = gravity.midr;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LabeledGraph> simulate_labels(const Structure& s, int fires,
                                          std::uint64_t seed) {
  std::vector<FirePoint> pts = sample_fire_points(s, fires, seed);
  SpreadParams sp;
  std::vector<LabeledGraph> out;
  out.reserve(pts.size());
  for (int k = 0; k < static_cast<int>(pts.size()); ++k) {
    std::vector<double> rise = element_temperatures(
        s, pts[static_cast<std::size_t>(k)], sp.t_threshold, sp);
    SimResult r = run_scenario(s, k, rise);
    LabeledGraph g;
    g.sample = encode(s, pts[static_cast<std::size_t>(k)], k);
    g.node_idr = Eigen::VectorXd::Zero(g.sample.node_attrs.rows());
    for (int row = 0; row < static_cast<int>(g.sample.node_ids.size());
         ++row) {
      auto it =
          r.node_idr.find(g.sample.node_ids[static_cast<std::size_t>(row)]);
      if (it != r.node_idr.end()) g.node_idr(row) = it->second;
    }
    g.midr = r.midr;
    out.push_back(std::move(g));
  }
  return out;
}

NormStats fit_sample_norm(const std::vector<const GraphSample*>& samples) {
  NormStats ns;
  std::vector<const Mat*> nodes, edges;
  for (const GraphSample* s : samples) {
    nodes.push_back(&s->node_attrs);
    edges.push_back(&s->edge_attrs);
  }
  ns.node = fit_stats(nodes);
  ns.edge = fit_stats(edges);
  ns.idr = {0.0, 1.0};
  ns.midr = {0.0, 1.0};
  return ns;
}

// Held-out mean Spearman of a trained MIDR surrogate over labeled scenarios.
double held_out_spearman(const MidrModel& model,
                         const std::vector<LabeledGraph>& test) {
  std::vector<const GraphSample*> samples;
  samples.reserve(test.size());
  for (const LabeledGraph& g : test) samples.push_back(&g.sample);
  Eigen::VectorXd preds = model.predict_midr_batch(samples);

  std::vector<ScenarioValue> pred, gt;
  for (std::size_t i = 0; i < test.size(); ++i) {
    pred.push_back({test[i].sample.structure_id, test[i].sample.scenario_id,
                    preds(static_cast<Eigen::Index>(i))});
    gt.push_back({test[i].sample.structure_id, test[i].sample.scenario_id,
                  test[i].midr});
  }
  return midr_eval(pred, gt).spearman_mean;
}

// ---------------------------------------------------------------------------
// 1. Thermal formulas.

void criterion1(Crit& c) {
  TempCurve at_origin{5.0, 0.0};  // fire-room slope, ignition at t = 0
  c.near(temperature_at(60.0, at_origin), 925.340051348972, 0.1,
         "log-stage rise at t - t1 = 60 min");

  // Two stories up, far enough that the arrival saturates at beta.
  c.near(arrival_t1(3, 1, 0.0, 1e9), 31.2, 1e-6,
         "vertical arrival limit at |dh| = 2");

  c.near(arrival_t1(1, 1, 18.0, 99.0), 11.378170058914037, 1e-6,
         "same-story arrival at plan distance 18 m");
}

// ---------------------------------------------------------------------------
// 2. Frame FEA oracle.

Structure single_column(double e_gpa, double length) {
  Structure s;
  s.id = 1;
  s.grid.room_len_x = 3.0;
  s.grid.room_len_y = 3.0;
  s.grid.room_len_z = length;
  s.grid.count_x = 1;
  s.grid.count_y = 1;
  s.grid.count_z = 1;
  s.material.young_modulus_gpa = e_gpa;
  s.material.yield_strength_mpa = 275.0;
  s.material.hardening_ratio = 0.01;
  s.nodes = {{0, 0.0, 0.0, 0.0, 0}, {1, 0.0, 0.0, length, 1}};
  s.elements = {{0, 0, 1, ElementKind::Column, length, 1, 0.0}};
  return s;
}

void criterion2(Crit& c) {
  Structure col = single_column(210.0, 2.0);
  SectionProps sec;

  NodalLoads tip_load{{1, {1000.0, 0.0, 0.0, 0.0, 0.0, 0.0}}};
  FrameSolution bend = solve_frame(col, {}, {}, tip_load);
  double want_tip = 1000.0 * 8.0 / (3.0 * 210e9 * sec.inertia_y);
  c.rel(bend.displacements.at(1)[0], want_tip, 1e-2,
        "cantilever tip deflection vs P L^3 / 3 E I");

  FrameSolution heated = solve_frame(col, {400.0});
  double want_up = 1.2e-5 * 400.0 * 2.0;
  c.rel(heated.displacements.at(1)[2], want_up, 1e-3,
        "free thermal elongation vs alpha dT L");

  Structure frame = desk_corpus(1, 77, desk_config(2, 3)).front();
  FrameSolution grav = solve_frame(frame, {});
  double reaction = 0.0;
  for (const auto& [node, r] : grav.reactions) reaction += r[2];
  c.rel(std::abs(reaction), total_gravity_load(frame), 1e-6,
        "ground reactions balance the applied gravity load");

  std::vector<double> rise(frame.elements.size(), 400.0);
  FeaConfig secant;
  FeaConfig stepped;
  stepped.stepped = true;
  SimResult a = run_scenario(frame, 0, rise, secant);
  SimResult b = run_scenario(frame, 0, rise, stepped);
  c.rel(b.midr, a.midr, 1e-8, "incremental load stepping matches the secant solve");
}

// ---------------------------------------------------------------------------
// 3. Autodiff gradient checks.

void criterion3(Crit& c) {
  struct OpCase {
    const char* name;
    Mat x0;
    ScalarFn f;
  };

  const Mat a34 = fixed_matrix(3, 4, 301);
  const Mat b42 = fixed_matrix(4, 2, 302);
  const Mat w34 = fixed_matrix(3, 4, 303);
  const Mat w32 = fixed_matrix(3, 2, 304);
  const Mat row4 = fixed_matrix(1, 4, 305);
  const Mat col3 = fixed_matrix(3, 1, 306);
  const Mat w44 = fixed_matrix(4, 4, 307);
  const Mat w54 = fixed_matrix(5, 4, 308);
  const Mat w24 = fixed_matrix(2, 4, 309);
  const Mat w31 = fixed_matrix(3, 1, 310);

  // Inputs for kinked or domain-limited ops keep a margin from the
  // problematic set so central differences stay valid.
  Mat relu_in = fixed_matrix(3, 4, 311);
  for (int r = 0; r < relu_in.rows(); ++r)
    for (int k = 0; k < relu_in.cols(); ++k)
      relu_in(r, k) += relu_in(r, k) >= 0.0 ? 0.25 : -0.25;
  Mat sqrt_in = fixed_matrix(3, 4, 312, 0.5, 1.5);
  Mat smax_in = fixed_matrix(3, 4, 313);
  smax_in.row(0) *= 0.25;  // keep the per-group argmax unambiguous
  smax_in.row(1) += Mat::Constant(1, 4, 2.0).row(0);
  smax_in.row(2) -= Mat::Constant(1, 4, 2.0).row(0);

  std::vector<OpCase> cases;
  cases.push_back({"matmul lhs", a34, [&](Tape& t, Var x) {
                     return t.sum_all(t.matmul(x, t.constant(b42)));
                   }});
  cases.push_back({"matmul rhs", b42, [&](Tape& t, Var x) {
                     return t.sum_all(t.matmul(t.constant(a34), x));
                   }});
  cases.push_back({"affine input", a34, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.affine(x, t.constant(b42), t.constant(
                                                          fixed_matrix(1, 2,
                                                                       314))));
                   }});
  cases.push_back({"affine weight", b42, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.affine(t.constant(a34), x,
                                  t.constant(fixed_matrix(1, 2, 314))));
                   }});
  cases.push_back({"affine bias", fixed_matrix(1, 2, 315),
                   [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.affine(t.constant(a34), t.constant(b42), x));
                   }});
  cases.push_back({"add", a34, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.hadamard(t.add(x, t.constant(w34)), t.constant(
                                                                   w34)));
                   }});
  cases.push_back({"sub", a34, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.hadamard(t.sub(t.constant(w34), x), t.constant(
                                                                   w34)));
                   }});
  cases.push_back({"hadamard", a34, [&](Tape& t, Var x) {
                     return t.sum_all(t.hadamard(x, t.constant(w34)));
                   }});
  cases.push_back({"scale", a34, [&](Tape& t, Var x) {
                     return t.sum_all(t.scale(x, -1.7));
                   }});
  cases.push_back({"add_row matrix", a34, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.hadamard(t.add_row(x, t.constant(row4)),
                                    t.constant(w34)));
                   }});
  cases.push_back({"add_row vector", row4, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.hadamard(t.add_row(t.constant(a34), x),
                                    t.constant(w34)));
                   }});
  cases.push_back({"mul_row matrix", a34, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.hadamard(t.mul_row(x, t.constant(row4)),
                                    t.constant(w34)));
                   }});
  cases.push_back({"mul_row vector", row4, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.hadamard(t.mul_row(t.constant(a34), x),
                                    t.constant(w34)));
                   }});
  cases.push_back({"mul_col matrix", a34, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.hadamard(t.mul_col(x, t.constant(col3)),
                                    t.constant(w34)));
                   }});
  cases.push_back({"mul_col vector", col3, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.hadamard(t.mul_col(t.constant(a34), x),
                                    t.constant(w34)));
                   }});
  cases.push_back({"relu", relu_in, [&](Tape& t, Var x) {
                     return t.sum_all(t.hadamard(t.relu(x), t.constant(w34)));
                   }});
  cases.push_back({"sigmoid", a34, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.hadamard(t.sigmoid(x), t.constant(w34)));
                   }});
  cases.push_back({"sqrt", sqrt_in, [&](Tape& t, Var x) {
                     return t.sum_all(t.hadamard(t.sqrt(x), t.constant(w34)));
                   }});
  cases.push_back({"concat_cols", a34, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.hadamard(t.concat_cols(x, t.constant(w34)),
                                    t.constant(fixed_matrix(3, 8, 316))));
                   }});
  cases.push_back({"gather_rows", a34, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.hadamard(t.gather_rows(x, {2, 0, 1, 2, 2}),
                                    t.constant(w54)));
                   }});
  cases.push_back({"scatter_max", smax_in, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.hadamard(t.scatter_max(x, {0, 0, 2}, 4),
                                    t.constant(w44)));
                   }});
  cases.push_back({"scatter_rows", w24, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.hadamard(t.scatter_rows(x, {3, 1}, 4),
                                    t.constant(w44)));
                   }});
  cases.push_back({"row_sum", a34, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.hadamard(t.row_sum(x), t.constant(w31)));
                   }});
  cases.push_back({"segment_mean", a34, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.hadamard(t.segment_mean(x, {0, 2, 3}),
                                    t.constant(w24)));
                   }});
  cases.push_back({"segment_max", smax_in, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.hadamard(t.segment_max(x, {0, 2, 3}),
                                    t.constant(w24)));
                   }});
  cases.push_back({"segment_repeat", w24, [&](Tape& t, Var x) {
                     return t.sum_all(
                         t.hadamard(t.segment_repeat(x, {0, 2, 3}),
                                    t.constant(w32.replicate(1, 2))));
                   }});
  cases.push_back({"mean_all", a34, [&](Tape& t, Var x) {
                     return t.mean_all(t.hadamard(x, t.constant(w34)));
                   }});
  cases.push_back({"sum_all", a34, [&](Tape& t, Var x) {
                     return t.sum_all(t.hadamard(x, t.constant(w34)));
                   }});
  cases.push_back({"mse lhs", a34, [&](Tape& t, Var x) {
                     return t.mse(x, t.constant(w34));
                   }});
  cases.push_back({"mse rhs", a34, [&](Tape& t, Var x) {
                     return t.mse(t.constant(w34), x);
                   }});

  bool all_ok = true;
  double worst = 0.0;
  std::string worst_name = "-";
  for (const OpCase& oc : cases) {
    double rel = 0.0;
    bool ok = gradients_match(oc.f, oc.x0, 1e-6, 1e-4, 1e-6, &rel);
    if (!ok) c.check(false, std::string("op ") + oc.name +
                                ": worst rel err " + str(rel));
    if (rel > worst) {
      worst = rel;
      worst_name = oc.name;
    }
    all_ok = all_ok && ok;
  }
  if (all_ok)
    c.check(true, "all " + std::to_string(cases.size()) +
                      " op gradient checks within 1e-4 (worst rel err " +
                      str(worst) + " in " + worst_name + ")");

  // End to end: d(predicted MIDR)/d(fire coordinates) through a trained
  // small surrogate, with the fire point feeding the feature construction.
  std::vector<Structure> structs = desk_corpus(4, 501, desk_config(2, 3));
  std::vector<LabeledGraph> data;
  for (const Structure& s : structs) {
    std::vector<LabeledGraph> part =
        simulate_labels(s, 2, mix64(501, 1000 + s.id));
    for (LabeledGraph& g : part) data.push_back(std::move(g));
  }
  MidrModel agent(GnnConfig::small_size(true), MidrMethod::TwoStep, 5);
  TrainConfig tc;
  tc.epochs_step1 = tc.epochs_step2 = tc.epochs_finetune = 3;
  tc.batch_size = 8;
  tc.patience = 5;
  tc.seed = 5;
  train_midr(agent, data, tc);

  std::vector<GraphSample> enc;
  Mat points(2, 3);
  for (int g = 0; g < 2; ++g) {
    const Structure& s = structs[static_cast<std::size_t>(g)];
    enc.push_back(encode(
        s, fire_point_at(s.grid, s.grid.extent_x() / 2.0,
                         s.grid.extent_y() / 2.0, s.grid.extent_z() / 2.0)));
    points(g, 0) = 0.31 * s.grid.extent_x();
    points(g, 1) = 0.67 * s.grid.extent_y();
    points(g, 2) = 0.49 * s.grid.extent_z();
  }
  GraphBatch batch = make_batch({&enc[0], &enc[1]}, agent.norm(),
                                agent.config().max_layers);

  int n = batch.total_nodes();
  Mat node_xyzh(n, 4);
  Mat inv_story(n, 1);
  int row = 0;
  for (int g = 0; g < 2; ++g) {
    const Mat& attrs = enc[static_cast<std::size_t>(g)].node_attrs;
    double inv_h =
        1.0 / structs[static_cast<std::size_t>(g)].grid.story_height();
    for (int i = 0; i < attrs.rows(); ++i, ++row) {
      node_xyzh.row(row) = attrs.row(i).leftCols(4);
      inv_story(row, 0) = inv_h;
    }
  }

  ScalarFn f = [&](Tape& tape, Var pts) {
    Var feats = agent_features_at(tape, agent, batch, node_xyzh, inv_story,
                                  pts);
    TapeBinding frozen(true);
    GnnForward fwd =
        agent.run(tape, frozen, batch, feats, tape.constant(batch.edge_x));
    return tape.mean_all(agent.denorm_midr(tape, fwd.midr_pred));
  };
  double rel = 0.0;
  bool ok = gradients_match(f, points, 1e-6, 1e-4, 1e-7, &rel);
  c.check(ok, "d(MIDR)/d(fire xyz) through the trained surrogate (worst rel "
              "err " +
                  str(rel) + ", limit 1e-4)");
}

// ---------------------------------------------------------------------------
// 4. GNN contracts.

void criterion4(Crit& c) {
  std::vector<Structure> structs = desk_corpus(2, 401, desk_config(2, 3));
  const Structure& s = structs.front();
  GraphSample g = encode(s, fire_point_at_room_center(s.grid, 0), 0);
  NormStats norm = fit_sample_norm({&g});

  MidrModel model(GnnConfig::small_size(true), MidrMethod::TwoStep, 11);
  model.norm() = norm;

  // Node permutation: reorder rows and remap edge endpoints.
  int n = static_cast<int>(g.node_ids.size());
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  Rng shuffle(99);
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[shuffle.next_below(static_cast<std::uint64_t>(i + 1))]);
  std::vector<int> inverse(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    inverse[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i;

  GraphSample p = g;
  for (int i = 0; i < n; ++i) {
    p.node_attrs.row(i) = g.node_attrs.row(perm[static_cast<std::size_t>(i)]);
    p.node_ids[static_cast<std::size_t>(i)] =
        g.node_ids[static_cast<std::size_t>(perm[static_cast<std::size_t>(
            i)])];
  }
  for (std::size_t e = 0; e < g.edge_src.size(); ++e) {
    p.edge_src[e] = inverse[static_cast<std::size_t>(g.edge_src[e])];
    p.edge_dst[e] = inverse[static_cast<std::size_t>(g.edge_dst[e])];
  }
  double diff = std::abs(model.predict_midr(g) - model.predict_midr(p));
  c.check(diff <= 1e-10, "node permutation shifts predict_midr by " +
                             str(diff) + " (limit 1e-10)");

  // Layers past the sample depth must stay untouched by the backward pass.
  std::vector<LabeledGraph> labels = simulate_labels(s, 2, 402);
  GraphBatch batch =
      make_batch({&labels[0].sample, &labels[1].sample}, norm, 7);
  model.params().zero_grads();
  Tape tape;
  TapeBinding bind;
  GnnForward fwd = model.run(tape, bind, batch);
  tape.backward(tape.mse(fwd.midr_pred,
                         tape.constant(Mat::Constant(2, 1, 0.5))));
  bind.collect(tape);
  int depth = batch.depth;
  bool deep_zero = true;
  bool shallow_live = false;
  for (const Param* prm : model.params().all()) {
    std::size_t tail = prm->name.find('.');
    std::string stem = prm->name.substr(0, tail);
    int layer = 0;
    if (stem.rfind("msg", 0) == 0)
      layer = std::atoi(stem.c_str() + 3);
    else if (stem.rfind("upd", 0) == 0)
      layer = std::atoi(stem.c_str() + 3);
    else
      continue;
    double g1 =
        prm->grad.size() == 0 ? 0.0 : prm->grad.cwiseAbs().maxCoeff();
    if (layer > depth && g1 != 0.0) deep_zero = false;
    if (layer <= depth && g1 > 0.0) shallow_live = true;
  }
  c.check(deep_zero && shallow_live,
          "message layers beyond " + std::to_string(depth) +
              " stories receive exactly zero gradient");

  // EU off: edge embeddings must be the encoder output at every depth.
  MidrModel plain(GnnConfig::small_size(false), MidrMethod::TwoStep, 11);
  plain.norm() = norm;
  GraphBatch pb = make_batch({&labels[0].sample, &labels[1].sample}, norm, 7);
  Tape t2;
  TapeBinding b2;
  GnnBackbone::Out out = plain.backbone().run(
      t2, b2, pb, t2.constant(pb.node_x), t2.constant(pb.edge_x));
  Var enc_only =
      plain.backbone().encode_edges(t2, b2, t2.constant(pb.edge_x));
  double edge_diff =
      (t2.value(out.edge_emb) - t2.value(enc_only)).cwiseAbs().maxCoeff();
  c.check(edge_diff == 0.0,
          "edge-update off keeps edge embeddings at the encoder output");

  // Parameter budgets.
  struct Budget {
    const char* name;
    GnnConfig cfg;
    double target;
  };
  const Budget budgets[] = {
      {"small, edge update on", GnnConfig::small_size(true), 7.1e4},
      {"small, edge update off", GnnConfig::small_size(false), 6.8e4},
      {"large, edge update on", GnnConfig::large_size(true), 2.8e5},
      {"large, edge update off", GnnConfig::large_size(false), 2.7e5},
  };
  for (const Budget& b : budgets) {
    MidrModel m(b.cfg, MidrMethod::TwoStep, 1);
    double count = static_cast<double>(m.parameter_count());
    double dev = (count - b.target) / b.target;
    char line[160];
    std::snprintf(line, sizeof(line),
                  "%s: %.0f parameters vs %.3g budget (%+.2f%%, limit 10%%)",
                  b.name, count, b.target, dev * 100.0);
    c.check(std::abs(dev) <= 0.10, line);
  }
}

// ---------------------------------------------------------------------------
// 5. Training efficacy at desk scale.

void criterion5(Crit& c) {
  const int kTrainStructures = 200;
  const int kTestStructures = 50;
  const int kFires = 10;
  const std::uint64_t kSeed = 9001;

  std::vector<Structure> structs = desk_corpus(
      kTrainStructures + kTestStructures, kSeed, desk_config(2, 4));

  std::vector<LabeledGraph> train_data, test_data;
  for (const Structure& s : structs) {
    std::vector<LabeledGraph> part =
        simulate_labels(s, kFires, mix64(kSeed, 1000 + s.id));
    auto& sink = s.id < kTrainStructures ? train_data : test_data;
    for (LabeledGraph& g : part) sink.push_back(std::move(g));
  }
  c.check(static_cast<int>(train_data.size()) == kTrainStructures * kFires,
          "corpus holds " + std::to_string(train_data.size()) +
              " labeled scenarios from " + std::to_string(kTrainStructures) +
              " structures (plus " + std::to_string(test_data.size()) +
              " held out)");

  TrainConfig tc;
  tc.epochs_step1 = tc.epochs_step2 = tc.epochs_finetune = 30;
  tc.batch_size = 32;
  tc.patience = 10;
  tc.train_fraction = 0.8;
  tc.seed = 11;

  MidrModel proposed(GnnConfig::small_size(true), MidrMethod::TwoStep,
                     tc.seed);
  train_midr(proposed, train_data, tc);
  double rho_proposed = held_out_spearman(proposed, test_data);

  MidrModel strawman(GnnConfig::small_size(true), MidrMethod::Strawman1,
                     tc.seed);
  train_midr(strawman, train_data, tc);
  double rho_strawman = held_out_spearman(strawman, test_data);

  c.check(rho_proposed > 0.3, "proposed two-step held-out mean rho_s " +
                                  str(rho_proposed) + " > 0.3");
  c.check(rho_proposed > rho_strawman,
          "proposed " + str(rho_proposed) + " beats strawman1 " +
              str(rho_strawman) + " under identical seed and budget");
}

// ---------------------------------------------------------------------------
// 6. MFSP pipeline.

PseudoLabel planted_room_label(const Structure& s) {
  PseudoLabel pl;
  pl.structure_id = s.id;
  Vec3 target = room_center(s.grid, 0);
  int rooms = s.grid.room_count();
  pl.rooms.reserve(static_cast<std::size_t>(rooms));
  for (int r = 0; r < rooms; ++r) {
    Vec3 cr = room_center(s.grid, r);
    double d = std::sqrt((cr.x - target.x) * (cr.x - target.x) +
                         (cr.y - target.y) * (cr.y - target.y) +
                         (cr.z - target.z) * (cr.z - target.z));
    pl.rooms.push_back({r, -d});
  }
  std::sort(pl.rooms.begin(), pl.rooms.end(),
            [](const RankedRoom& a, const RankedRoom& b) {
              if (a.midr != b.midr) return a.midr > b.midr;
              return a.room_index < b.room_index;
            });
  pl.pgt_room = pl.rooms.front().room_index;
  pl.pgt_midr = pl.rooms.front().midr;
  pl.pgt_point = room_center(s.grid, pl.pgt_room);
  return pl;
}

void criterion6(Crit& c) {
  // Exactness: pseudo_label vs a per-room brute-force argmax.
  {
    std::vector<Structure> structs = desk_corpus(10, 601, desk_config(2, 3));
    std::vector<GraphSample> enc;
    for (const Structure& s : structs)
      enc.push_back(encode(s, fire_point_at_room_center(s.grid, 0), 0));
    std::vector<const GraphSample*> ptrs;
    for (const GraphSample& g : enc) ptrs.push_back(&g);

    GnnConfig narrow = GnnConfig::small_size(true);
    narrow.node_dim = narrow.edge_dim = 8;
    narrow.msg_hidden = narrow.upd_hidden = narrow.eu_hidden = 8;
    MidrModel agent(narrow, MidrMethod::TwoStep, 61);
    agent.norm() = fit_sample_norm(ptrs);

    bool rooms_exact = true;
    for (const Structure& s : structs) {
      PseudoLabel pl = pseudo_label(s, agent);
      int best_room = -1;
      double best = -1e300;
      for (int r = 0; r < s.grid.room_count(); ++r) {
        double v = agent.predict_midr(
            encode(s, fire_point_at_room_center(s.grid, r), r));
        if (v > best) {
          best = v;
          best_room = r;
        }
      }
      if (pl.pgt_room != best_room) rooms_exact = false;
      Vec3 want = room_center(s.grid, best_room);
      if (pl.pgt_point.x != want.x || pl.pgt_point.y != want.y ||
          pl.pgt_point.z != want.z)
        rooms_exact = false;
    }
    c.check(rooms_exact,
            "pseudo_label equals the room-center brute-force argmax on 10 "
            "structures");
  }

  // Learnability: analytic labels planted at the origin-corner room.
  const int kTotal = 80;
  const int kTrain = 64;
  std::vector<Structure> structs = desk_corpus(kTotal, 602, desk_config(2, 4));

  std::vector<const Structure*> train_ptrs, test_ptrs;
  std::vector<PseudoLabel> train_labels, test_labels;
  for (const Structure& s : structs) {
    if (s.id < kTrain) {
      train_ptrs.push_back(&s);
      train_labels.push_back(planted_room_label(s));
    } else {
      test_ptrs.push_back(&s);
      test_labels.push_back(planted_room_label(s));
    }
  }

  GnnConfig narrow = GnnConfig::small_size(true);
  MidrModel agent(narrow, MidrMethod::TwoStep, 63);
  std::uint64_t hash_before = agent.params().value_hash();

  MfspModel model(GnnConfig::small_size(true), MfspInit::DeNovo, 64);
  MfspConfig mc;
  mc.loss = MfspLoss::Mse;
  mc.epochs = 80;
  mc.batch_size = 16;
  mc.patience = 15;
  mc.lr = 3e-3;
  mc.train_fraction = 0.8;
  mc.seed = 65;
  train_mfsp(model, train_ptrs, train_labels, agent, mc);

  c.check(agent.params().value_hash() == hash_before,
          "agent parameters hash-identical before and after training");

  std::vector<MfspPrediction> preds;
  for (const Structure* s : test_ptrs)
    preds.push_back({s->id, model.predict(*s)});
  MfspEvalReport rep = mfsp_eval(preds, test_labels, test_ptrs);
  c.check(rep.avg_rank <= 2.0,
          "held-out average room rank " + str(rep.avg_rank) +
              " <= 2 with mse training toward the planted room");
}

// ---------------------------------------------------------------------------
// 7. Metrics.

void criterion7(Crit& c) {
  // Closed form 1 - 6 sum(d^2) / (n (n^2 - 1)) on tie-free fixtures.
  c.check(spearman({10, 20, 30, 40}, {1, 2, 3, 4}) == 1.0,
          "identity ranks give rho exactly 1");
  c.check(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == -1.0,
          "reversed ranks give rho exactly -1");
  c.check(spearman({1, 2, 3, 4}, {1, 3, 2, 4}) == 0.8,
          "one swapped pair gives rho exactly 1 - 12/60 = 0.8");

  // Diagonal-adjacent room: normalized room error exactly sqrt(2).
  Structure s;
  s.id = 1;
  s.grid.room_len_x = 4.0;
  s.grid.room_len_y = 5.0;
  s.grid.room_len_z = 3.0;
  s.grid.count_x = 3;
  s.grid.count_y = 2;
  s.grid.count_z = 2;

  PseudoLabel pl;
  pl.structure_id = 1;
  pl.pgt_room = 0;
  pl.pgt_point = room_center(s.grid, 0);
  pl.pgt_midr = 1.0;
  for (int r = 0; r < s.grid.room_count(); ++r)
    pl.rooms.push_back({r, 1.0 - 0.01 * r});
  std::sort(pl.rooms.begin(), pl.rooms.end(),
            [](const RankedRoom& a, const RankedRoom& b) {
              return a.midr > b.midr;
            });

  int diag = room_index_of(s.grid, 1, 1, 0);
  Vec3 diag_center = room_center(s.grid, diag);
  MfspEvalReport rep =
      mfsp_eval({{1, diag_center}}, {pl}, {&s});
  c.check(rep.cases.size() == 1 && rep.cases.front().e_room == std::sqrt(2.0),
          "diagonal-adjacent room scores e_room exactly sqrt(2)");

  bool monotone = true;
  auto nondecreasing = [&](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i] < v[i - 1]) return false;
    return true;
  };
  monotone = monotone && nondecreasing(rep.e_cdf) &&
             nondecreasing(rep.eroom_cdf) && nondecreasing(rep.rank_cdf);
  c.check(monotone && rep.e_cdf.back() == 1.0 &&
              rep.rank_cdf.back() == 1.0,
          "CDF tables are monotone non-decreasing and end at 1");
}

// ---------------------------------------------------------------------------
// 8. End-to-end determinism through the CLI.

int run_cmd(const std::string& args) {
  std::string cmd =
      std::string(FIREDRIFT_TOOL_PATH) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void criterion8(Crit& c) {
  fs::path base = fs::temp_directory_path() / "firedrift_acceptance8";
  fs::remove_all(base);
  fs::create_directories(base);

  auto pipeline = [&](const std::string& dir, int jobs) {
    std::string j = std::to_string(jobs);
    if (run_cmd("gen --out " + dir +
                " --count 12 --seed 21 --labeled-fraction 1.0 --jobs " + j))
      return false;
    if (run_cmd("simulate --dataset " + dir + " --fires 3 --seed 4 --jobs " +
                j))
      return false;
    if (run_cmd("train-midr --dataset " + dir +
                " --epochs 3 --batch-size 16 --seed 9 --name agent"))
      return false;
    if (run_cmd("pseudo-label --dataset " + dir + " --model agent"))
      return false;
    if (run_cmd("train-mfsp --dataset " + dir +
                " --model agent --name mfsp --init transfer --loss mse "
                "--epochs 3 --seed 9"))
      return false;
    if (run_cmd("eval --dataset " + dir +
                " --midr-model agent --mfsp-model mfsp"))
      return false;
    return true;
  };

  std::string da = (base / "a").string();
  std::string db = (base / "b").string();
  bool ran = pipeline(da, 1) && pipeline(db, 2);
  c.check(ran, "two full pipeline runs from one seed completed");
  if (!ran) return;

  auto rel_files = [&](const fs::path& root, const std::string& sub) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(root / sub))
      if (e.is_regular_file())
        names.push_back(sub + "/" + e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
  };

  std::vector<std::string> reports = rel_files(da, "reports");
  bool reports_equal = !reports.empty() &&
                       reports == rel_files(db, "reports");
  for (const std::string& name : reports)
    reports_equal = reports_equal &&
                    slurp(fs::path(da) / name) == slurp(fs::path(db) / name);
  c.check(reports_equal, "all " + std::to_string(reports.size()) +
                             " report files are byte-identical");

  bool artifacts_equal =
      slurp(fs::path(da) / "pseudo_labels.json") ==
          slurp(fs::path(db) / "pseudo_labels.json") &&
      slurp(fs::path(da) / "models" / "agent.json") ==
          slurp(fs::path(db) / "models" / "agent.json") &&
      slurp(fs::path(da) / "models" / "mfsp.json") ==
          slurp(fs::path(db) / "models" / "mfsp.json");
  c.check(artifacts_equal,
          "pseudo labels and model bundles are byte-identical");

  bool runs_equal = true;
  for (const std::string& name : rel_files(da, "runs")) {
    Json ja = read_json_file((fs::path(da) / name).string());
    Json jb = read_json_file((fs::path(db) / name).string());
    for (Json* j : {&ja, &jb}) {
      (*j)["started_at"] = "";
      (*j)["wall_seconds"] = 0.0;
      (*j)["config"]["jobs"] = 0;
    }
    runs_equal = runs_equal && ja.dump() == jb.dump();
  }
  c.check(runs_equal,
          "run manifests match after stripping timestamps and job counts");

  fs::remove_all(base);
}

}  // namespace
}  // namespace firedrift

int main(int argc, char** argv) {
  using namespace firedrift;

  struct Entry {
    int num;
    const char* label;
    double budget_s;
    void (*fn)(Crit&);
  };
  const Entry entries[] = {
      {1, "thermal formulas", 1.0, criterion1},
      {2, "frame FEA oracle", 30.0, criterion2},
      {3, "autodiff gradients", 60.0, criterion3},
      {4, "gnn contracts", 60.0, criterion4},
      {5, "training efficacy at desk scale", 1800.0, criterion5},
      {6, "mfsp pipeline", 600.0, criterion6},
      {7, "metrics", 10.0, criterion7},
      {8, "pipeline determinism", 600.0, criterion8},
  };

  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Entry& e : entries) {
    if (!wanted.empty() && !wanted.count(e.num)) continue;
    std::printf("criterion %d (%s):\n", e.num, e.label);
    std::fflush(stdout);
    Crit c;
    auto t0 = std::chrono::steady_clock::now();
    try {
      e.fn(c);
    } catch (const std::exception& ex) {
      c.check(false, std::string("unhandled exception: ") + ex.what());
    }
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    if (secs > e.budget_s)
      c.check(false, "runtime " + str(secs) + " s exceeds the " +
                         str(e.budget_s) + " s budget");
    std::printf("criterion %d (%s): %s  [%.1f s]\n", e.num, e.label,
                c.pass ? "PASS" : "FAIL", secs);
    std::fflush(stdout);
    if (!c.pass) ++failed;
  }

  if (failed) {
    std::printf("%d criterion(s) failed\n", failed);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
