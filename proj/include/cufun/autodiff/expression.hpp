#pragma once

// Scalar-expression front end over the tape: evaluate f(tau; theta) with its
// tau-derivative, and differentiate either with respect to the parameters.

#include <functional>

#include "cufun/autodiff/param_vector.hpp"
#include "cufun/autodiff/tape.hpp"

namespace cufun::ad {

struct DualScalar {
  double value = 0.0;
  double tau_derivative = 0.0;
};

// Records f on `tape` given the seed node tau (1 x 1); must return a 1 x 1 node.
using Expression = std::function<Var(Tape& tape, Var tau)>;

DualScalar forward_dual(const Expression& expr, double tau, const ParamVector& params);

// d f / d theta at tau.
ParamVector grad(const Expression& expr, double tau, const ParamVector& params);

// d (df/dtau) / d theta at tau.
ParamVector grad_of_tau_derivative(const Expression& expr, double tau, const ParamVector& params);

}  // namespace cufun::ad
