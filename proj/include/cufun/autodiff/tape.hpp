#pragma once

// Recording autodiff engine for the models in this library.
//
// Each node holds a matrix value and, when it depends on the seed variable tau,
// the matrix of directional derivatives d(value)/d(tau) computed in forward mode
// alongside the value. The reverse sweep propagates adjoints for both channels,
// so any scalar built from values *or* tau-derivatives (for example the sum of
// log densities, where density = dF/dtau) can be differentiated with respect to
// every parameter. Second derivatives in tau are not tracked: tau_derivative()
// produces a node whose own tau channel is identically zero.
//
// Nodes are appended in evaluation order and the reverse sweep walks them
// backwards, visiting every node once. A tape is single-writer; build one per
// worker.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "cufun/autodiff/matrix.hpp"
#include "cufun/autodiff/param_vector.hpp"

namespace cufun::ad {

class Tape;

class Var {
 public:
  Var() = default;
  Tape* tape() const noexcept { return tape_; }
  int id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr && id_ >= 0; }

  const Matrix& value() const;
  // Matrix of zeros of the same shape when the node does not depend on tau.
  Matrix tau_derivative() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

struct RowRef {
  Var source;
  std::size_t row;
};

class Tape {
 public:
  enum class Op : std::uint8_t {
    Param,
    Constant,
    Tau,
    Add,
    Sub,
    Mul,
    AddRow,
    MatMulNT,
    Affine,
    Scale,
    Tanh,
    Sigmoid,
    Softplus,
    Exp,
    Log,
    LogFloor,
    Relu,
    Exprel,
    Sum,
    TauDerivative,
    GatherRows,
  };

  // `params` must outlive the tape (or until the next replay()).
  explicit Tape(const ParamVector& params);

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  // Leaf bound to a named parameter segment (rows x cols of the segment).
  // Repeated calls return the same node.
  Var param(std::string_view name);
  Var constant(Matrix value);
  // The seed variable: every entry has d/dtau = 1.
  Var tau(Matrix value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);            // elementwise, same shape
  Var add_row(Var x, Var row);      // x[r, :] + row for every r; row is 1 x cols
  Var matmul_nt(Var x, Var w);      // x (n x in) * w^T, w is (out x in)
  Var affine(Var x, Var w, Var b);  // matmul_nt(x, w) with row b (1 x out) added
  Var scale(Var x, double factor);
  Var tanh(Var x);
  Var sigmoid(Var x);
  Var softplus(Var x);
  Var exp(Var x);                   // non-finite results raise NumericError
  Var log(Var x);                   // nonpositive inputs raise NumericError
  Var log_floor(Var x, double floor);  // log(max(x, floor))
  Var relu(Var x);                  // max(x, 0), subgradient 0 at 0
  Var exprel(Var x);                // (e^x - 1) / x, continuous at 0
  Var sum(Var x);                   // 1 x 1
  Var tau_derivative(Var x);        // value channel := d(x)/d(tau)
  Var gather_rows(std::span<const RowRef> rows);

  // Reverse sweep from a 1x1 node, seeding d(out)/d(out) = 1. Clears any
  // previous adjoints first. Raises NumericError if `out` is not finite.
  void backward(Var out);
  // Parameter gradient of the last backward() output, in the layout of the
  // bound ParamVector. Segments never touched by the tape are exactly zero.
  ParamVector gradient() const;
  void accumulate_gradient(ParamVector& into) const;

  // Re-evaluates every recorded node against `params` (same layout).
  void replay(const ParamVector& params);

  std::size_t size() const noexcept { return nodes_.size(); }
  const Matrix& value(Var v) const { return nodes_[check(v)].val; }
  bool has_tau_derivative(Var v) const { return nodes_[check(v)].has_dot; }
  Matrix tau_derivative_of(Var v) const;

 private:
  struct Node {
    Op op = Op::Constant;
    int a = -1;
    int b = -1;
    int c = -1;
    double scalar = 0.0;
    std::size_t segment = 0;
    std::vector<std::pair<int, std::size_t>> rows{};
    bool has_dot = false;
    bool needs_grad = false;  // some parameter flows into this node
    bool touched = false;
    Matrix val{};
    Matrix dot{};
    Matrix deriv{};  // f'(x) for Tanh
    Matrix adj{};
    Matrix adj_dot{};
  };

  static Node make(Op op, int a = -1, int b = -1, int c = -1, double scalar = 0.0) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.c = c;
    n.scalar = scalar;
    return n;
  }

  std::size_t check(Var v) const;
  Var push(Node node);
  Var unary(Op op, Var x, double scalar = 0.0);
  void evaluate(Node& node);
  void propagate(Node& node);
  void ensure_adjoint(Node& node);

  const ParamVector* params_;
  std::vector<Node> nodes_;
  std::vector<int> param_nodes_;  // segment index -> node id, -1 when unused
};

// Expression-building sugar; all operands must share a tape.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator*(double s, Var x);
Var tanh(Var x);
Var sigmoid(Var x);
Var softplus(Var x);
Var exp(Var x);
Var log(Var x);
Var relu(Var x);
Var sum(Var x);

}  // namespace cufun::ad
