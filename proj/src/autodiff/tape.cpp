#include "cufun/autodiff/tape.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "cufun/errors.hpp"
#include "cufun/simd/kernels.hpp"

namespace cufun::ad {
namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// exprel(x) = (e^x - 1)/x and its first two derivatives. A truncated Taylor
// series is used near zero where the closed forms cancel.
struct Exprel {
  static constexpr double kSeriesRadius = 0.5;

  static double value(double x) {
    if (std::abs(x) < kSeriesRadius) return series(x, 0);
    return std::expm1(x) / x;
  }
  static double d1(double x) {
    if (std::abs(x) < kSeriesRadius) return series(x, 1);
    return (std::exp(x) * (x - 1.0) + 1.0) / (x * x);
  }
  static double d2(double x) {
    if (std::abs(x) < kSeriesRadius) return series(x, 2);
    return (std::exp(x) * (x * x - 2.0 * x + 2.0) - 2.0) / (x * x * x);
  }
  // order-th derivative of sum_n x^n / (n+1)!
  static double series(double x, int order) {
    double total = 0.0;
    double fact = 1.0;  // (n+1)!
    for (int n = 0; n <= 24; ++n) {
      fact *= static_cast<double>(n + 1);
      if (n < order) continue;
      double coeff = 1.0;
      for (int k = 0; k < order; ++k) coeff *= static_cast<double>(n - k);
      total += coeff * std::pow(x, n - order) / fact;
    }
    return total;
  }
};

struct Derivs {
  double d1;
  double d2;
};

// First and second derivative of an elementwise op at input x with output y.
Derivs elementwise_derivs(Tape::Op op, double x, double y, double scalar) {
  switch (op) {
    case Tape::Op::Tanh: {
      const double d = 1.0 - y * y;
      return {d, -2.0 * y * d};
    }
    case Tape::Op::Sigmoid: {
      const double sm = stable_sigmoid(-x);
      const double d = y * sm;
      return {d, d * (sm - y)};
    }
    case Tape::Op::Softplus: {
      const double s = stable_sigmoid(x);
      return {s, s * stable_sigmoid(-x)};
    }
    case Tape::Op::Exp:
      return {y, y};
    case Tape::Op::Log:
      return {1.0 / x, -1.0 / (x * x)};
    case Tape::Op::LogFloor:
      if (x > scalar) return {1.0 / x, -1.0 / (x * x)};
      return {0.0, 0.0};
    case Tape::Op::Relu:
      return {x > 0.0 ? 1.0 : 0.0, 0.0};
    case Tape::Op::Exprel:
      return {Exprel::d1(x), Exprel::d2(x)};
    case Tape::Op::Scale:
      return {scalar, 0.0};
    default:
      throw std::logic_error("not an elementwise op");
  }
}

double elementwise_value(Tape::Op op, double x, double scalar) {
  switch (op) {
    case Tape::Op::Tanh:
      return std::tanh(x);
    case Tape::Op::Sigmoid:
      return stable_sigmoid(x);
    case Tape::Op::Softplus:
      return stable_softplus(x);
    case Tape::Op::Exp: {
      const double y = std::exp(x);
      if (!std::isfinite(y)) throw NumericError("exp overflow at x = " + std::to_string(x));
      return y;
    }
    case Tape::Op::Log:
      if (!(x > 0.0)) throw NumericError("log of nonpositive value " + std::to_string(x));
      return std::log(x);
    case Tape::Op::LogFloor:
      if (std::isnan(x)) throw NumericError("log_floor of NaN");
      return std::log(x > scalar ? x : scalar);
    case Tape::Op::Relu:
      return x > 0.0 ? x : 0.0;
    case Tape::Op::Exprel: {
      const double y = Exprel::value(x);
      if (!std::isfinite(y)) throw NumericError("exprel overflow at x = " + std::to_string(x));
      return y;
    }
    case Tape::Op::Scale:
      return scalar * x;
    default:
      throw std::logic_error("not an elementwise op");
  }
}

bool is_elementwise(Tape::Op op) {
  switch (op) {
    case Tape::Op::Tanh:
    case Tape::Op::Sigmoid:
    case Tape::Op::Softplus:
    case Tape::Op::Exp:
    case Tape::Op::Log:
    case Tape::Op::LogFloor:
    case Tape::Op::Relu:
    case Tape::Op::Exprel:
    case Tape::Op::Scale:
      return true;
    default:
      return false;
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(*this); }

Matrix Var::tau_derivative() const { return tape_->tau_derivative_of(*this); }

namespace {

// Tapes allocate and free multi-megabyte matrices on every batch. With glibc's
// defaults those go straight back to the kernel and each batch pays the page
// faults again, so keep them in the heap instead.
void keep_large_blocks_in_heap() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);
  });
#endif
}

}  // namespace

Tape::Tape(const ParamVector& params)
    : params_(&params), param_nodes_(params.segments().size(), -1) {
  keep_large_blocks_in_heap();
}

std::size_t Tape::check(Var v) const {
  if (v.tape_ != this || v.id_ < 0 || static_cast<std::size_t>(v.id_) >= nodes_.size())
    throw std::invalid_argument("Var does not belong to this tape");
  return static_cast<std::size_t>(v.id_);
}

Var Tape::push(Node node) {
  node.needs_grad = node.op == Op::Param;
  for (int in : {node.a, node.b, node.c})
    if (in >= 0) node.needs_grad = node.needs_grad || nodes_[static_cast<std::size_t>(in)].needs_grad;
  for (const auto& [src, r] : node.rows)
    node.needs_grad = node.needs_grad || nodes_[static_cast<std::size_t>(src)].needs_grad;
  evaluate(node);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::param(std::string_view name) {
  const std::size_t seg = params_->index_of(name);
  if (param_nodes_[seg] >= 0) return Var(this, param_nodes_[seg]);
  Node n = make(Op::Param);
  n.segment = seg;
  Var v = push(std::move(n));
  param_nodes_[seg] = v.id_;
  return v;
}

Var Tape::constant(Matrix value) {
  Node n = make(Op::Constant);
  n.val = std::move(value);
  return push(std::move(n));
}

Var Tape::tau(Matrix value) {
  Node n = make(Op::Tau);
  n.val = std::move(value);
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  return push(make(Op::Add, a.id_, b.id_));
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  return push(make(Op::Sub, a.id_, b.id_));
}

Var Tape::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  return push(make(Op::Mul, a.id_, b.id_));
}

Var Tape::add_row(Var x, Var row) {
  const Matrix& r = value(row);
  if (r.rows() != 1 || r.cols() != value(x).cols())
    throw std::invalid_argument("add_row: row must be 1 x cols(x)");
  return push(make(Op::AddRow, x.id_, row.id_));
}

Var Tape::matmul_nt(Var x, Var w) {
  if (value(x).cols() != value(w).cols())
    throw std::invalid_argument("matmul_nt: inner dimensions differ");
  return push(make(Op::MatMulNT, x.id_, w.id_));
}

Var Tape::affine(Var x, Var w, Var b) {
  const Matrix& wv = value(w);
  if (value(x).cols() != wv.cols())
    throw std::invalid_argument("affine: inner dimensions differ");
  const Matrix& bv = value(b);
  if (bv.rows() != 1 || bv.cols() != wv.rows())
    throw std::invalid_argument("affine: bias must be 1 x rows(w)");
  return push(make(Op::Affine, x.id_, w.id_, b.id_));
}

Var Tape::unary(Op op, Var x, double scalar) {
  check(x);
  return push(make(op, x.id_, -1, -1, scalar));
}

Var Tape::scale(Var x, double factor) { return unary(Op::Scale, x, factor); }
Var Tape::tanh(Var x) { return unary(Op::Tanh, x); }
Var Tape::sigmoid(Var x) { return unary(Op::Sigmoid, x); }
Var Tape::softplus(Var x) { return unary(Op::Softplus, x); }
Var Tape::exp(Var x) { return unary(Op::Exp, x); }
Var Tape::log(Var x) { return unary(Op::Log, x); }
Var Tape::log_floor(Var x, double floor) { return unary(Op::LogFloor, x, floor); }
Var Tape::relu(Var x) { return unary(Op::Relu, x); }
Var Tape::exprel(Var x) { return unary(Op::Exprel, x); }
Var Tape::sum(Var x) { return unary(Op::Sum, x); }
Var Tape::tau_derivative(Var x) { return unary(Op::TauDerivative, x); }

Var Tape::gather_rows(std::span<const RowRef> rows) {
  if (rows.empty()) throw std::invalid_argument("gather_rows: no rows");
  Node n = make(Op::GatherRows);
  n.rows.reserve(rows.size());
  const std::size_t cols = value(rows.front().source).cols();
  for (const RowRef& r : rows) {
    const Matrix& src = value(r.source);
    if (src.cols() != cols || r.row >= src.rows())
      throw std::invalid_argument("gather_rows: bad row reference");
    n.rows.emplace_back(r.source.id_, r.row);
  }
  return push(std::move(n));
}

Matrix Tape::tau_derivative_of(Var v) const {
  const Node& n = nodes_[check(v)];
  if (n.has_dot) return n.dot;
  return Matrix(n.val.rows(), n.val.cols());
}

void Tape::evaluate(Node& n) {
  const simd::KernelTable& k = simd::active();
  switch (n.op) {
    case Op::Param: {
      const Segment& s = params_->segments()[n.segment];
      auto v = params_->view(s);
      n.val = Matrix(s.rows, s.cols, std::vector<double>(v.begin(), v.end()));
      n.has_dot = false;
      return;
    }
    case Op::Constant:
      n.has_dot = false;
      return;
    case Op::Tau:
      n.has_dot = true;
      n.dot = Matrix(n.val.rows(), n.val.cols(), 1.0);
      return;
    default:
      break;
  }

  const Node& a = nodes_[static_cast<std::size_t>(n.a)];

  if (n.op == Op::Tanh) {
    n.val = Matrix(a.val.rows(), a.val.cols());
    n.deriv = Matrix(a.val.rows(), a.val.cols());
    k.tanh(a.val.size(), a.val.data(), n.val.data(), n.deriv.data());
    n.has_dot = a.has_dot;
    if (n.has_dot) {
      n.dot = Matrix(a.val.rows(), a.val.cols());
      k.hadamard(a.val.size(), n.deriv.data(), a.dot.data(), n.dot.data());
    }
    return;
  }

  if (is_elementwise(n.op)) {
    n.val = Matrix(a.val.rows(), a.val.cols());
    for (std::size_t i = 0; i < a.val.size(); ++i)
      n.val[i] = elementwise_value(n.op, a.val[i], n.scalar);
    n.has_dot = a.has_dot;
    if (n.has_dot) {
      n.dot = Matrix(a.val.rows(), a.val.cols());
      for (std::size_t i = 0; i < a.val.size(); ++i)
        n.dot[i] = elementwise_derivs(n.op, a.val[i], n.val[i], n.scalar).d1 * a.dot[i];
    }
    return;
  }

  switch (n.op) {
    case Op::Add:
    case Op::Sub: {
      const Node& b = nodes_[static_cast<std::size_t>(n.b)];
      const double sign = n.op == Op::Add ? 1.0 : -1.0;
      n.val = a.val;
      k.axpy(n.val.size(), sign, b.val.data(), n.val.data());
      n.has_dot = a.has_dot || b.has_dot;
      if (n.has_dot) {
        n.dot = a.has_dot ? a.dot : Matrix(a.val.rows(), a.val.cols());
        if (b.has_dot) k.axpy(n.dot.size(), sign, b.dot.data(), n.dot.data());
      }
      return;
    }
    case Op::Mul: {
      const Node& b = nodes_[static_cast<std::size_t>(n.b)];
      n.val = Matrix(a.val.rows(), a.val.cols());
      k.hadamard(n.val.size(), a.val.data(), b.val.data(), n.val.data());
      n.has_dot = a.has_dot || b.has_dot;
      if (n.has_dot) {
        n.dot = Matrix(a.val.rows(), a.val.cols());
        if (a.has_dot) k.hadamard_acc(n.dot.size(), a.dot.data(), b.val.data(), n.dot.data());
        if (b.has_dot) k.hadamard_acc(n.dot.size(), a.val.data(), b.dot.data(), n.dot.data());
      }
      return;
    }
    case Op::AddRow: {
      const Node& b = nodes_[static_cast<std::size_t>(n.b)];
      n.val = a.val;
      k.add_row_broadcast(n.val.rows(), n.val.cols(), b.val.data(), n.val.data());
      n.has_dot = a.has_dot || b.has_dot;
      if (n.has_dot) {
        n.dot = a.has_dot ? a.dot : Matrix(a.val.rows(), a.val.cols());
        if (b.has_dot)
          k.add_row_broadcast(n.dot.rows(), n.dot.cols(), b.dot.data(), n.dot.data());
      }
      return;
    }
    case Op::MatMulNT:
    case Op::Affine: {
      const Node& w = nodes_[static_cast<std::size_t>(n.b)];
      const std::size_t rows = a.val.rows(), in = a.val.cols(), out = w.val.rows();
      const Matrix wt = w.val.transposed();
      n.val = Matrix(rows, out);
      k.gemm_nn_acc(rows, out, in, a.val.data(), wt.data(), n.val.data());
      const Node* bias = n.op == Op::Affine ? &nodes_[static_cast<std::size_t>(n.c)] : nullptr;
      if (bias) k.add_row_broadcast(rows, out, bias->val.data(), n.val.data());
      n.has_dot = a.has_dot || w.has_dot || (bias && bias->has_dot);
      if (n.has_dot) {
        n.dot = Matrix(rows, out);
        if (a.has_dot) k.gemm_nn_acc(rows, out, in, a.dot.data(), wt.data(), n.dot.data());
        if (w.has_dot) {
          const Matrix wdt = w.dot.transposed();
          k.gemm_nn_acc(rows, out, in, a.val.data(), wdt.data(), n.dot.data());
        }
        if (bias && bias->has_dot) k.add_row_broadcast(rows, out, bias->dot.data(), n.dot.data());
      }
      return;
    }
    case Op::Sum: {
      n.val = Matrix::scalar(k.sum(a.val.size(), a.val.data()));
      n.has_dot = a.has_dot;
      if (n.has_dot) n.dot = Matrix::scalar(k.sum(a.dot.size(), a.dot.data()));
      return;
    }
    case Op::TauDerivative: {
      n.val = a.has_dot ? a.dot : Matrix(a.val.rows(), a.val.cols());
      n.has_dot = false;
      return;
    }
    case Op::GatherRows: {
      const std::size_t cols = nodes_[static_cast<std::size_t>(n.rows.front().first)].val.cols();
      n.val = Matrix(n.rows.size(), cols);
      n.has_dot = false;
      for (const auto& [src, r] : n.rows)
        n.has_dot = n.has_dot || nodes_[static_cast<std::size_t>(src)].has_dot;
      if (n.has_dot) n.dot = Matrix(n.rows.size(), cols);
      for (std::size_t i = 0; i < n.rows.size(); ++i) {
        const Node& s = nodes_[static_cast<std::size_t>(n.rows[i].first)];
        const std::size_t r = n.rows[i].second;
        std::copy_n(s.val.data() + r * cols, cols, n.val.data() + i * cols);
        if (n.has_dot && s.has_dot) std::copy_n(s.dot.data() + r * cols, cols, n.dot.data() + i * cols);
      }
      return;
    }
    default:
      throw std::logic_error("unhandled op in evaluate");
  }
}

void Tape::ensure_adjoint(Node& n) {
  if (n.touched) return;
  n.touched = true;
  n.adj = Matrix(n.val.rows(), n.val.cols());
  if (n.has_dot) n.adj_dot = Matrix(n.val.rows(), n.val.cols());
}

// Adjoint rules. For y = f(x) with tau-channel ydot = f'(x) xdot the reverse
// sweep accumulates  xbar += ybar f'(x) + ydotbar f''(x) xdot  and
// xdotbar += ydotbar f'(x). Inputs that no parameter flows into are skipped.
void Tape::propagate(Node& n) {
  if (n.op == Op::Param || n.op == Op::Constant || n.op == Op::Tau) return;
  const simd::KernelTable& k = simd::active();
  Node& a = nodes_[static_cast<std::size_t>(n.a)];
  const bool dot = n.has_dot;

  if (n.op == Op::Tanh) {
    if (!a.needs_grad) return;
    ensure_adjoint(a);
    for (std::size_t i = 0; i < n.val.size(); ++i) {
      const double y = n.val[i];
      const double d1 = n.deriv[i];
      double g = n.adj[i] * d1;
      if (dot) {
        g -= 2.0 * y * d1 * n.adj_dot[i] * a.dot[i];
        a.adj_dot[i] += n.adj_dot[i] * d1;
      }
      a.adj[i] += g;
    }
    return;
  }

  if (is_elementwise(n.op)) {
    if (!a.needs_grad) return;
    ensure_adjoint(a);
    for (std::size_t i = 0; i < n.val.size(); ++i) {
      const Derivs d = elementwise_derivs(n.op, a.val[i], n.val[i], n.scalar);
      double g = n.adj[i] * d.d1;
      if (dot) {
        g += n.adj_dot[i] * d.d2 * a.dot[i];
        a.adj_dot[i] += n.adj_dot[i] * d.d1;
      }
      a.adj[i] += g;
    }
    return;
  }

  switch (n.op) {
    case Op::Add:
    case Op::Sub: {
      Node& b = nodes_[static_cast<std::size_t>(n.b)];
      const double sign = n.op == Op::Add ? 1.0 : -1.0;
      const std::size_t sz = n.adj.size();
      if (a.needs_grad) {
        ensure_adjoint(a);
        k.axpy(sz, 1.0, n.adj.data(), a.adj.data());
        if (dot && a.has_dot) k.axpy(sz, 1.0, n.adj_dot.data(), a.adj_dot.data());
      }
      if (b.needs_grad) {
        ensure_adjoint(b);
        k.axpy(sz, sign, n.adj.data(), b.adj.data());
        if (dot && b.has_dot) k.axpy(sz, sign, n.adj_dot.data(), b.adj_dot.data());
      }
      return;
    }
    case Op::Mul: {
      Node& b = nodes_[static_cast<std::size_t>(n.b)];
      const std::size_t sz = n.adj.size();
      if (a.needs_grad) {
        ensure_adjoint(a);
        k.hadamard_acc(sz, n.adj.data(), b.val.data(), a.adj.data());
        if (dot && b.has_dot) k.hadamard_acc(sz, n.adj_dot.data(), b.dot.data(), a.adj.data());
        if (dot && a.has_dot) k.hadamard_acc(sz, n.adj_dot.data(), b.val.data(), a.adj_dot.data());
      }
      if (b.needs_grad) {
        ensure_adjoint(b);
        k.hadamard_acc(sz, n.adj.data(), a.val.data(), b.adj.data());
        if (dot && a.has_dot) k.hadamard_acc(sz, n.adj_dot.data(), a.dot.data(), b.adj.data());
        if (dot && b.has_dot) k.hadamard_acc(sz, n.adj_dot.data(), a.val.data(), b.adj_dot.data());
      }
      return;
    }
    case Op::AddRow: {
      Node& b = nodes_[static_cast<std::size_t>(n.b)];
      if (a.needs_grad) {
        ensure_adjoint(a);
        k.axpy(n.adj.size(), 1.0, n.adj.data(), a.adj.data());
        if (dot && a.has_dot) k.axpy(n.adj.size(), 1.0, n.adj_dot.data(), a.adj_dot.data());
      }
      if (b.needs_grad) {
        ensure_adjoint(b);
        k.column_sum_acc(n.adj.rows(), n.adj.cols(), n.adj.data(), b.adj.data());
        if (dot && b.has_dot)
          k.column_sum_acc(n.adj.rows(), n.adj.cols(), n.adj_dot.data(), b.adj_dot.data());
      }
      return;
    }
    case Op::MatMulNT:
    case Op::Affine: {
      Node& w = nodes_[static_cast<std::size_t>(n.b)];
      const std::size_t rows = a.val.rows(), in = a.val.cols(), out = w.val.rows();
      // y = x w^T:  xbar += ybar w,  wbar += ybar^T x, plus the tau-channel terms.
      if (a.needs_grad) {
        ensure_adjoint(a);
        k.gemm_nn_acc(rows, in, out, n.adj.data(), w.val.data(), a.adj.data());
        if (dot && w.has_dot)
          k.gemm_nn_acc(rows, in, out, n.adj_dot.data(), w.dot.data(), a.adj.data());
        if (dot && a.has_dot)
          k.gemm_nn_acc(rows, in, out, n.adj_dot.data(), w.val.data(), a.adj_dot.data());
      }
      if (w.needs_grad) {
        ensure_adjoint(w);
        k.gemm_tn_acc(out, in, rows, n.adj.data(), a.val.data(), w.adj.data());
        if (dot && a.has_dot)
          k.gemm_tn_acc(out, in, rows, n.adj_dot.data(), a.dot.data(), w.adj.data());
        if (dot && w.has_dot)
          k.gemm_tn_acc(out, in, rows, n.adj_dot.data(), a.val.data(), w.adj_dot.data());
      }
      if (n.op == Op::Affine) {
        Node& b = nodes_[static_cast<std::size_t>(n.c)];
        if (b.needs_grad) {
          ensure_adjoint(b);
          k.column_sum_acc(rows, out, n.adj.data(), b.adj.data());
          if (dot && b.has_dot) k.column_sum_acc(rows, out, n.adj_dot.data(), b.adj_dot.data());
        }
      }
      return;
    }
    case Op::Sum: {
      if (!a.needs_grad) return;
      ensure_adjoint(a);
      const double g = n.adj[0];
      for (std::size_t i = 0; i < a.adj.size(); ++i) a.adj[i] += g;
      if (dot) {
        const double gd = n.adj_dot[0];
        for (std::size_t i = 0; i < a.adj_dot.size(); ++i) a.adj_dot[i] += gd;
      }
      return;
    }
    case Op::TauDerivative: {
      if (!a.has_dot || !a.needs_grad) return;
      ensure_adjoint(a);
      k.axpy(n.adj.size(), 1.0, n.adj.data(), a.adj_dot.data());
      return;
    }
    case Op::GatherRows: {
      const std::size_t cols = n.val.cols();
      for (std::size_t i = 0; i < n.rows.size(); ++i) {
        Node& s = nodes_[static_cast<std::size_t>(n.rows[i].first)];
        if (!s.needs_grad) continue;
        ensure_adjoint(s);
        const std::size_t r = n.rows[i].second;
        k.axpy(cols, 1.0, n.adj.data() + i * cols, s.adj.data() + r * cols);
        if (dot && s.has_dot)
          k.axpy(cols, 1.0, n.adj_dot.data() + i * cols, s.adj_dot.data() + r * cols);
      }
      return;
    }
    default:
      throw std::logic_error("unhandled op in propagate");
  }
}

void Tape::backward(Var out) {
  const std::size_t root = check(out);
  const Node& r = nodes_[root];
  if (r.val.rows() != 1 || r.val.cols() != 1)
    throw std::invalid_argument("backward: output must be 1 x 1");
  if (!std::isfinite(r.val[0]))
    throw NumericError("backward: expression was not finite at the forward pass");

  for (Node& n : nodes_) {
    n.touched = false;
    n.adj = Matrix();
    n.adj_dot = Matrix();
  }
  if (!r.needs_grad) return;
  ensure_adjoint(nodes_[root]);
  nodes_[root].adj[0] = 1.0;
  for (std::size_t i = root + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.touched) propagate(n);
  }
}

void Tape::accumulate_gradient(ParamVector& into) const {
  if (!into.same_layout(*params_)) throw std::invalid_argument("gradient: layout mismatch");
  const simd::KernelTable& k = simd::active();
  for (std::size_t seg = 0; seg < param_nodes_.size(); ++seg) {
    const int id = param_nodes_[seg];
    if (id < 0) continue;
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.touched) continue;
    auto dst = into.view(into.segments()[seg]);
    k.axpy(dst.size(), 1.0, n.adj.data(), dst.data());
  }
}

ParamVector Tape::gradient() const {
  ParamVector g = params_->zeros_like();
  accumulate_gradient(g);
  return g;
}

void Tape::replay(const ParamVector& params) {
  if (!params.same_layout(*params_)) throw std::invalid_argument("replay: layout mismatch");
  params_ = &params;
  for (Node& n : nodes_) {
    n.touched = false;
    n.adj = Matrix();
    n.adj_dot = Matrix();
    evaluate(n);
  }
}

Var operator+(Var a, Var b) { return a.tape()->add(a, b); }
Var operator-(Var a, Var b) { return a.tape()->sub(a, b); }
Var operator*(Var a, Var b) { return a.tape()->mul(a, b); }
Var operator*(double s, Var x) { return x.tape()->scale(x, s); }
Var tanh(Var x) { return x.tape()->tanh(x); }
Var sigmoid(Var x) { return x.tape()->sigmoid(x); }
Var softplus(Var x) { return x.tape()->softplus(x); }
Var exp(Var x) { return x.tape()->exp(x); }
Var log(Var x) { return x.tape()->log(x); }
Var relu(Var x) { return x.tape()->relu(x); }
Var sum(Var x) { return x.tape()->sum(x); }

}  // namespace cufun::ad
