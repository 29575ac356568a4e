#include "cufun/autodiff/expression.hpp"

#include <cmath>
#include <stdexcept>

#include "cufun/errors.hpp"

namespace cufun::ad {
namespace {

Var record(Tape& tape, const Expression& expr, double tau) {
  Var t = tape.tau(Matrix::scalar(tau));
  Var out = expr(tape, t);
  if (out.rows() != 1 || out.cols() != 1)
    throw std::invalid_argument("expression must evaluate to a 1 x 1 node");
  return out;
}

}  // namespace

DualScalar forward_dual(const Expression& expr, double tau, const ParamVector& params) {
  Tape tape(params);
  Var out = record(tape, expr, tau);
  DualScalar d{out.value()[0], out.tau_derivative()[0]};
  if (!std::isfinite(d.value) || !std::isfinite(d.tau_derivative))
    throw NumericError("forward_dual: non-finite result");
  return d;
}

ParamVector grad(const Expression& expr, double tau, const ParamVector& params) {
  Tape tape(params);
  Var out = record(tape, expr, tau);
  tape.backward(out);
  return tape.gradient();
}

ParamVector grad_of_tau_derivative(const Expression& expr, double tau,
                                   const ParamVector& params) {
  Tape tape(params);
  Var out = record(tape, expr, tau);
  tape.backward(tape.tau_derivative(out));
  return tape.gradient();
}

}  // namespace cufun::ad
