#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace firedrift {

using Mat = Eigen::MatrixXd;

struct NonFiniteValue : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Handle into a Tape node. Valid only for the tape that produced it.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over dense 2-D double matrices. Every op records its
// inputs and enough forward state to run the exact adjoint; backward() walks
// the tape once in reverse creation order. Scalars are 1x1 matrices. A tape
// is built per forward pass and thrown away after the gradients are read.
//
// Every op output is checked for NaN/Inf at creation and raises
// NonFiniteValue immediately, so a bad value points at the op that made it
// rather than at the end of the pipeline.
class Tape {
 public:
  Tape() { nodes_.reserve(256); }

  // Leaves. `requires_grad` marks a tensor whose gradient will be read back;
  // constants never accumulate gradients but still pass values through.
  Var leaf(Mat value, bool requires_grad);
  Var constant(Mat value) { return leaf(std::move(value), false); }
  Var scalar(double v, bool requires_grad = false);

  const Mat& value(Var v) const { return node(v.id).value; }
  // Gradient of the last backward() target w.r.t. this node; zero matrix if
  // the node did not participate.
  Mat grad(Var v) const;

  Var matmul(Var a, Var b);
  // x (R x K) * w (K x C) + bias (1 x C) broadcast over rows; one fused node
  // instead of matmul + add_row, halving the large intermediates in MLPs.
  Var affine(Var x, Var w, Var bias);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double k);
  // x (R x C) + row (1 x C) broadcast over rows
  Var add_row(Var x, Var row);
  // x (R x C) * row (1 x C) broadcast over rows
  Var mul_row(Var x, Var row);
  // x (R x C) * col (R x 1) broadcast over columns
  Var mul_col(Var x, Var col);
  Var relu(Var x);
  Var sigmoid(Var x);
  Var sqrt(Var x);  // elementwise; x must be >= 0
  Var concat_cols(Var a, Var b);
  // out(i, :) = x(rows[i], :)
  Var gather_rows(Var x, std::vector<int> rows);
  // out(r, c) = max over i with dst[i] == r of x(i, c); empty groups give 0
  Var scatter_max(Var x, std::vector<int> dst, int out_rows);
  // out has out_rows rows, out(rows[i], :) = x(i, :), other rows zero;
  // `rows` must be distinct
  Var scatter_rows(Var x, std::vector<int> rows, int out_rows);
  // R x C -> R x 1 sum across columns
  Var row_sum(Var x);
  // Per-segment column-wise mean/max: segments are [bounds[g], bounds[g+1])
  // row ranges, output is G x C.
  Var segment_mean(Var x, std::vector<int> bounds);
  Var segment_max(Var x, std::vector<int> bounds);
  // G x C -> N x C, repeating row g over segment g's row range
  Var segment_repeat(Var x, std::vector<int> bounds);
  Var mean_all(Var x);  // 1 x 1
  Var sum_all(Var x);   // 1 x 1
  Var neg(Var a) { return scale(a, -1.0); }

  // Mean squared difference as a 1x1 node.
  Var mse(Var pred, Var target);

  // Accumulate gradients of `loss` (must be 1x1) into every participating
  // node. May be called once per tape.
  void backward(Var loss);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  enum class Op {
    Leaf, MatMul, Affine, Add, Sub, Hadamard, Scale, AddRow, MulRow, MulCol,
    Relu, Sigmoid, Sqrt, ConcatCols, GatherRows, ScatterMax, ScatterRows,
    RowSum, SegmentMean, SegmentMax, SegmentRepeat, MeanAll, SumAll,
  };

  struct Node {
    Op op = Op::Leaf;
    int a = -1, b = -1, c = -1;
    Mat value;
    Mat grad;  // empty until backward touches it
    double k = 0.0;
    std::vector<int> idx;      // gather rows / scatter dst / argmax winners
    std::vector<int> bounds;   // segment boundaries
    bool needs_grad = false;
  };

  Node& node(int id) {
    if (id < 0 || id >= size()) throw std::out_of_range("bad Var");
    return nodes_[static_cast<std::size_t>(id)];
  }
  const Node& node(int id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("bad Var");
    return nodes_[static_cast<std::size_t>(id)];
  }

  Var push(Node n);
  Mat& grad_ref(int id);
  void add_grad(int id, const Mat& g);

  static void check_finite(const Mat& m, const char* what);
  static void check_segments(const std::vector<int>& bounds, int rows);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace firedrift
