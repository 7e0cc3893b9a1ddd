#include "firedrift/autodiff.hpp"

#include <cmath>
#include <string>

namespace firedrift {

void Tape::check_finite(const Mat& m, const char* what) {
  if (!m.allFinite())
    throw NonFiniteValue(std::string("non-finite value produced by ") + what);
}

void Tape::check_segments(const std::vector<int>& bounds, int rows) {
  if (bounds.size() < 2 || bounds.front() != 0 || bounds.back() != rows)
    throw ShapeMismatch("segment bounds must cover all rows");
  for (std::size_t i = 1; i < bounds.size(); ++i)
    if (bounds[i] < bounds[i - 1])
      throw ShapeMismatch("segment bounds must be non-decreasing");
}

Var Tape::push(Node n) {
  check_finite(n.value, "op");
  nodes_.push_back(std::move(n));
  return Var{size() - 1};
}

Var Tape::leaf(Mat value, bool requires_grad) {
  Node n;
  n.op = Op::Leaf;
  n.value = std::move(value);
  n.needs_grad = requires_grad;
  check_finite(n.value, "leaf");
  nodes_.push_back(std::move(n));
  return Var{size() - 1};
}

Var Tape::scalar(double v, bool requires_grad) {
  Mat m(1, 1);
  m(0, 0) = v;
  return leaf(std::move(m), requires_grad);
}

Mat Tape::grad(Var v) const {
  const Node& n = node(v.id);
  if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Mat& Tape::grad_ref(int id) {
  Node& n = node(id);
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::add_grad(int id, const Mat& g) {
  Node& n = node(id);
  if (!n.needs_grad) return;
  grad_ref(id) += g;
}

Var Tape::matmul(Var a, Var b) {
  const Node& na = node(a.id);
  const Node& nb = node(b.id);
  if (na.value.cols() != nb.value.rows())
    throw ShapeMismatch("matmul: inner dimensions differ");
  Node n;
  n.op = Op::MatMul;
  n.a = a.id;
  n.b = b.id;
  n.value.noalias() = na.value * nb.value;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  return push(std::move(n));
}

Var Tape::affine(Var x, Var w, Var bias) {
  const Node& nx = node(x.id);
  const Node& nw = node(w.id);
  const Node& nb = node(bias.id);
  if (nx.value.cols() != nw.value.rows())
    throw ShapeMismatch("affine: inner dimensions differ");
  if (nb.value.rows() != 1 || nb.value.cols() != nw.value.cols())
    throw ShapeMismatch("affine: bias must be 1 x cols(w)");
  Node n;
  n.op = Op::Affine;
  n.a = x.id;
  n.b = w.id;
  n.c = bias.id;
  n.value.noalias() = nx.value * nw.value;
  n.value.rowwise() += nb.value.row(0);
  n.needs_grad = nx.needs_grad || nw.needs_grad || nb.needs_grad;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Node& na = node(a.id);
  const Node& nb = node(b.id);
  if (na.value.rows() != nb.value.rows() || na.value.cols() != nb.value.cols())
    throw ShapeMismatch("add: shapes differ");
  Node n;
  n.op = Op::Add;
  n.a = a.id;
  n.b = b.id;
  n.value = na.value + nb.value;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  const Node& na = node(a.id);
  const Node& nb = node(b.id);
  if (na.value.rows() != nb.value.rows() || na.value.cols() != nb.value.cols())
    throw ShapeMismatch("sub: shapes differ");
  Node n;
  n.op = Op::Sub;
  n.a = a.id;
  n.b = b.id;
  n.value = na.value - nb.value;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  return push(std::move(n));
}

Var Tape::hadamard(Var a, Var b) {
  const Node& na = node(a.id);
  const Node& nb = node(b.id);
  if (na.value.rows() != nb.value.rows() || na.value.cols() != nb.value.cols())
    throw ShapeMismatch("hadamard: shapes differ");
  Node n;
  n.op = Op::Hadamard;
  n.a = a.id;
  n.b = b.id;
  n.value = na.value.cwiseProduct(nb.value);
  n.needs_grad = na.needs_grad || nb.needs_grad;
  return push(std::move(n));
}

Var Tape::scale(Var a, double k) {
  const Node& na = node(a.id);
  Node n;
  n.op = Op::Scale;
  n.a = a.id;
  n.k = k;
  n.value = na.value * k;
  n.needs_grad = na.needs_grad;
  return push(std::move(n));
}

Var Tape::add_row(Var x, Var row) {
  const Node& nx = node(x.id);
  const Node& nr = node(row.id);
  if (nr.value.rows() != 1 || nr.value.cols() != nx.value.cols())
    throw ShapeMismatch("add_row: row must be 1 x cols(x)");
  Node n;
  n.op = Op::AddRow;
  n.a = x.id;
  n.b = row.id;
  n.value = nx.value.rowwise() + nr.value.row(0);
  n.needs_grad = nx.needs_grad || nr.needs_grad;
  return push(std::move(n));
}

Var Tape::mul_row(Var x, Var row) {
  const Node& nx = node(x.id);
  const Node& nr = node(row.id);
  if (nr.value.rows() != 1 || nr.value.cols() != nx.value.cols())
    throw ShapeMismatch("mul_row: row must be 1 x cols(x)");
  Node n;
  n.op = Op::MulRow;
  n.a = x.id;
  n.b = row.id;
  n.value = nx.value.array().rowwise() * nr.value.row(0).array();
  n.needs_grad = nx.needs_grad || nr.needs_grad;
  return push(std::move(n));
}

Var Tape::mul_col(Var x, Var col) {
  const Node& nx = node(x.id);
  const Node& nc = node(col.id);
  if (nc.value.cols() != 1 || nc.value.rows() != nx.value.rows())
    throw ShapeMismatch("mul_col: col must be rows(x) x 1");
  Node n;
  n.op = Op::MulCol;
  n.a = x.id;
  n.b = col.id;
  n.value = nx.value.array().colwise() * nc.value.col(0).array();
  n.needs_grad = nx.needs_grad || nc.needs_grad;
  return push(std::move(n));
}

Var Tape::relu(Var x) {
  const Node& nx = node(x.id);
  Node n;
  n.op = Op::Relu;
  n.a = x.id;
  n.value = nx.value.cwiseMax(0.0);
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::sigmoid(Var x) {
  const Node& nx = node(x.id);
  Node n;
  n.op = Op::Sigmoid;
  n.a = x.id;
  n.value = (1.0 + (-nx.value.array()).exp()).inverse().matrix();
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::sqrt(Var x) {
  const Node& nx = node(x.id);
  if ((nx.value.array() < 0.0).any())
    throw NonFiniteValue("sqrt of a negative value");
  Node n;
  n.op = Op::Sqrt;
  n.a = x.id;
  n.value = nx.value.array().sqrt().matrix();
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
  const Node& na = node(a.id);
  const Node& nb = node(b.id);
  if (na.value.rows() != nb.value.rows())
    throw ShapeMismatch("concat_cols: row counts differ");
  Node n;
  n.op = Op::ConcatCols;
  n.a = a.id;
  n.b = b.id;
  n.value.resize(na.value.rows(), na.value.cols() + nb.value.cols());
  n.value << na.value, nb.value;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  return push(std::move(n));
}

Var Tape::gather_rows(Var x, std::vector<int> rows) {
  const Node& nx = node(x.id);
  Node n;
  n.op = Op::GatherRows;
  n.a = x.id;
  n.value.resize(static_cast<Eigen::Index>(rows.size()), nx.value.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= nx.value.rows())
      throw ShapeMismatch("gather_rows: index out of range");
    n.value.row(static_cast<Eigen::Index>(i)) = nx.value.row(rows[i]);
  }
  n.idx = std::move(rows);
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::scatter_max(Var x, std::vector<int> dst, int out_rows) {
  const Node& nx = node(x.id);
  if (static_cast<Eigen::Index>(dst.size()) != nx.value.rows())
    throw ShapeMismatch("scatter_max: dst must have one entry per row");
  Eigen::Index cols = nx.value.cols();
  Node n;
  n.op = Op::ScatterMax;
  n.a = x.id;
  n.value = Mat::Zero(out_rows, cols);
  // winner row in x per output cell; -1 marks an empty group (stays 0)
  n.idx.assign(static_cast<std::size_t>(out_rows) *
                   static_cast<std::size_t>(cols),
               -1);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    int r = dst[i];
    if (r < 0 || r >= out_rows)
      throw ShapeMismatch("scatter_max: dst index out of range");
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::size_t cell = static_cast<std::size_t>(r) *
                             static_cast<std::size_t>(cols) +
                         static_cast<std::size_t>(c);
      double v = nx.value(static_cast<Eigen::Index>(i), c);
      if (n.idx[cell] < 0 || v > n.value(r, c)) {
        n.value(r, c) = v;
        n.idx[cell] = static_cast<int>(i);
      }
    }
  }
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::scatter_rows(Var x, std::vector<int> rows, int out_rows) {
  const Node& nx = node(x.id);
  if (static_cast<Eigen::Index>(rows.size()) != nx.value.rows())
    throw ShapeMismatch("scatter_rows: rows must have one entry per row");
  Node n;
  n.op = Op::ScatterRows;
  n.a = x.id;
  n.value = Mat::Zero(out_rows, nx.value.cols());
  std::vector<bool> seen(static_cast<std::size_t>(out_rows), false);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    int r = rows[i];
    if (r < 0 || r >= out_rows)
      throw ShapeMismatch("scatter_rows: index out of range");
    if (seen[static_cast<std::size_t>(r)])
      throw ShapeMismatch("scatter_rows: duplicate destination row");
    seen[static_cast<std::size_t>(r)] = true;
    n.value.row(r) = nx.value.row(static_cast<Eigen::Index>(i));
  }
  n.idx = std::move(rows);
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::row_sum(Var x) {
  const Node& nx = node(x.id);
  Node n;
  n.op = Op::RowSum;
  n.a = x.id;
  n.value = nx.value.rowwise().sum();
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::segment_mean(Var x, std::vector<int> bounds) {
  const Node& nx = node(x.id);
  check_segments(bounds, static_cast<int>(nx.value.rows()));
  Eigen::Index g_count = static_cast<Eigen::Index>(bounds.size()) - 1;
  Node n;
  n.op = Op::SegmentMean;
  n.a = x.id;
  n.value = Mat::Zero(g_count, nx.value.cols());
  for (Eigen::Index g = 0; g < g_count; ++g) {
    int lo = bounds[static_cast<std::size_t>(g)];
    int hi = bounds[static_cast<std::size_t>(g) + 1];
    if (hi > lo)
      n.value.row(g) =
          nx.value.middleRows(lo, hi - lo).colwise().mean();
  }
  n.bounds = std::move(bounds);
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::segment_max(Var x, std::vector<int> bounds) {
  const Node& nx = node(x.id);
  check_segments(bounds, static_cast<int>(nx.value.rows()));
  Eigen::Index g_count = static_cast<Eigen::Index>(bounds.size()) - 1;
  Eigen::Index cols = nx.value.cols();
  Node n;
  n.op = Op::SegmentMax;
  n.a = x.id;
  n.value = Mat::Zero(g_count, cols);
  n.idx.assign(static_cast<std::size_t>(g_count * cols), -1);
  for (Eigen::Index g = 0; g < g_count; ++g) {
    int lo = bounds[static_cast<std::size_t>(g)];
    int hi = bounds[static_cast<std::size_t>(g) + 1];
    for (int r = lo; r < hi; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        std::size_t cell =
            static_cast<std::size_t>(g * cols + c);
        double v = nx.value(r, c);
        if (n.idx[cell] < 0 || v > n.value(g, c)) {
          n.value(g, c) = v;
          n.idx[cell] = r;
        }
      }
    }
  }
  n.bounds = std::move(bounds);
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::segment_repeat(Var x, std::vector<int> bounds) {
  const Node& nx = node(x.id);
  if (static_cast<Eigen::Index>(bounds.size()) != nx.value.rows() + 1)
    throw ShapeMismatch("segment_repeat: need one segment per row");
  check_segments(bounds, bounds.back());
  Node n;
  n.op = Op::SegmentRepeat;
  n.a = x.id;
  n.value.resize(bounds.back(), nx.value.cols());
  for (Eigen::Index g = 0; g + 1 < static_cast<Eigen::Index>(bounds.size());
       ++g) {
    int lo = bounds[static_cast<std::size_t>(g)];
    int hi = bounds[static_cast<std::size_t>(g) + 1];
    for (int r = lo; r < hi; ++r) n.value.row(r) = nx.value.row(g);
  }
  n.bounds = std::move(bounds);
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::mean_all(Var x) {
  const Node& nx = node(x.id);
  Node n;
  n.op = Op::MeanAll;
  n.a = x.id;
  n.value = Mat::Constant(1, 1, nx.value.mean());
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::sum_all(Var x) {
  const Node& nx = node(x.id);
  Node n;
  n.op = Op::SumAll;
  n.a = x.id;
  n.value = Mat::Constant(1, 1, nx.value.sum());
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::mse(Var pred, Var target) {
  Var d = sub(pred, target);
  return mean_all(hadamard(d, d));
}

void Tape::backward(Var loss) {
  if (backward_done_)
    throw std::logic_error("backward may be called once per tape");
  Node& top = node(loss.id);
  if (top.value.rows() != 1 || top.value.cols() != 1)
    throw ShapeMismatch("backward: loss must be 1x1");
  backward_done_ = true;
  if (!top.needs_grad) return;
  top.grad = Mat::Constant(1, 1, 1.0);

  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.needs_grad || n.grad.size() == 0 || n.op == Op::Leaf) continue;
    const Mat& g = n.grad;
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul: {
        const Node& na = node(n.a);
        const Node& nb = node(n.b);
        if (na.needs_grad) grad_ref(n.a).noalias() += g * nb.value.transpose();
        if (nb.needs_grad) grad_ref(n.b).noalias() += na.value.transpose() * g;
        break;
      }
      case Op::Affine: {
        const Node& nx = node(n.a);
        const Node& nw = node(n.b);
        if (nx.needs_grad) grad_ref(n.a).noalias() += g * nw.value.transpose();
        if (nw.needs_grad) grad_ref(n.b).noalias() += nx.value.transpose() * g;
        if (node(n.c).needs_grad) grad_ref(n.c) += g.colwise().sum();
        break;
      }
      case Op::Add:
        add_grad(n.a, g);
        add_grad(n.b, g);
        break;
      case Op::Sub:
        add_grad(n.a, g);
        if (node(n.b).needs_grad) grad_ref(n.b) -= g;
        break;
      case Op::Hadamard:
        if (node(n.a).needs_grad)
          grad_ref(n.a) += g.cwiseProduct(node(n.b).value);
        if (node(n.b).needs_grad)
          grad_ref(n.b) += g.cwiseProduct(node(n.a).value);
        break;
      case Op::Scale:
        if (node(n.a).needs_grad) grad_ref(n.a) += g * n.k;
        break;
      case Op::AddRow:
        add_grad(n.a, g);
        if (node(n.b).needs_grad) grad_ref(n.b) += g.colwise().sum();
        break;
      case Op::MulRow:
        if (node(n.a).needs_grad)
          grad_ref(n.a) +=
              (g.array().rowwise() * node(n.b).value.row(0).array()).matrix();
        if (node(n.b).needs_grad)
          grad_ref(n.b) +=
              g.cwiseProduct(node(n.a).value).colwise().sum();
        break;
      case Op::MulCol:
        if (node(n.a).needs_grad)
          grad_ref(n.a) +=
              (g.array().colwise() * node(n.b).value.col(0).array()).matrix();
        if (node(n.b).needs_grad)
          grad_ref(n.b) += g.cwiseProduct(node(n.a).value).rowwise().sum();
        break;
      case Op::Relu:
        if (node(n.a).needs_grad)
          grad_ref(n.a) +=
              (node(n.a).value.array() > 0.0).cast<double>().matrix()
                  .cwiseProduct(g);
        break;
      case Op::Sigmoid:
        if (node(n.a).needs_grad)
          grad_ref(n.a) += n.value.cwiseProduct(
              (Mat::Ones(n.value.rows(), n.value.cols()) - n.value))
                               .cwiseProduct(g);
        break;
      case Op::Sqrt:
        if (node(n.a).needs_grad)
          grad_ref(n.a) += (0.5 * g.array() / n.value.array()).matrix();
        break;
      case Op::ConcatCols: {
        Eigen::Index ca = node(n.a).value.cols();
        Eigen::Index cb = node(n.b).value.cols();
        if (node(n.a).needs_grad) grad_ref(n.a) += g.leftCols(ca);
        if (node(n.b).needs_grad) grad_ref(n.b) += g.rightCols(cb);
        break;
      }
      case Op::GatherRows:
        if (node(n.a).needs_grad) {
          Mat& ga = grad_ref(n.a);
          for (std::size_t r = 0; r < n.idx.size(); ++r)
            ga.row(n.idx[r]) += g.row(static_cast<Eigen::Index>(r));
        }
        break;
      case Op::ScatterMax:
        if (node(n.a).needs_grad) {
          Mat& ga = grad_ref(n.a);
          Eigen::Index cols = n.value.cols();
          for (Eigen::Index r = 0; r < n.value.rows(); ++r)
            for (Eigen::Index c = 0; c < cols; ++c) {
              int win = n.idx[static_cast<std::size_t>(r * cols + c)];
              if (win >= 0) ga(win, c) += g(r, c);
            }
        }
        break;
      case Op::ScatterRows:
        if (node(n.a).needs_grad) {
          Mat& ga = grad_ref(n.a);
          for (std::size_t r = 0; r < n.idx.size(); ++r)
            ga.row(static_cast<Eigen::Index>(r)) += g.row(n.idx[r]);
        }
        break;
      case Op::RowSum:
        if (node(n.a).needs_grad)
          grad_ref(n.a) +=
              g * Eigen::RowVectorXd::Ones(node(n.a).value.cols());
        break;
      case Op::SegmentMean:
        if (node(n.a).needs_grad) {
          Mat& ga = grad_ref(n.a);
          for (std::size_t s = 0; s + 1 < n.bounds.size(); ++s) {
            int lo = n.bounds[s], hi = n.bounds[s + 1];
            if (hi <= lo) continue;
            double inv = 1.0 / (hi - lo);
            for (int r = lo; r < hi; ++r)
              ga.row(r) += inv * g.row(static_cast<Eigen::Index>(s));
          }
        }
        break;
      case Op::SegmentMax:
        if (node(n.a).needs_grad) {
          Mat& ga = grad_ref(n.a);
          Eigen::Index cols = n.value.cols();
          for (Eigen::Index s = 0; s < n.value.rows(); ++s)
            for (Eigen::Index c = 0; c < cols; ++c) {
              int win = n.idx[static_cast<std::size_t>(s * cols + c)];
              if (win >= 0) ga(win, c) += g(s, c);
            }
        }
        break;
      case Op::SegmentRepeat:
        if (node(n.a).needs_grad) {
          Mat& ga = grad_ref(n.a);
          for (std::size_t s = 0; s + 1 < n.bounds.size(); ++s) {
            int lo = n.bounds[s], hi = n.bounds[s + 1];
            for (int r = lo; r < hi; ++r)
              ga.row(static_cast<Eigen::Index>(s)) += g.row(r);
          }
        }
        break;
      case Op::MeanAll:
        if (node(n.a).needs_grad) {
          const Node& na = node(n.a);
          double inv = 1.0 / static_cast<double>(na.value.size());
          grad_ref(n.a).array() += g(0, 0) * inv;
        }
        break;
      case Op::SumAll:
        if (node(n.a).needs_grad) grad_ref(n.a).array() += g(0, 0);
        break;
    }
  }
}

}  // namespace firedrift
