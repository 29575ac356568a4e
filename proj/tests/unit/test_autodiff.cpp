#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cufun/autodiff/expression.hpp"
#include "cufun/autodiff/tape.hpp"
#include "cufun/errors.hpp"

namespace {

using namespace cufun::ad;

ParamVector scalar_params(std::initializer_list<std::pair<const char*, double>> values) {
  ParamVector p;
  for (const auto& [name, v] : values) {
    const std::size_t i = p.add(name, 1, 1);
    p.view(p.segments()[i])[0] = v;
  }
  return p;
}

double relative_error(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

TEST(ForwardDual, SigmoidAtZero) {
  const ParamVector none;
  const DualScalar d = forward_dual([](Tape& t, Var tau) { return t.sigmoid(tau); }, 0.0, none);
  EXPECT_DOUBLE_EQ(d.value, 0.5);
  EXPECT_DOUBLE_EQ(d.tau_derivative, 0.25);
}

TEST(ForwardDual, ConstantHasZeroTauDerivative) {
  const ParamVector none;
  for (double tau : {-3.0, 0.0, 2.5}) {
    const DualScalar d =
        forward_dual([](Tape& t, Var) { return t.constant(Matrix::scalar(4.2)); }, tau, none);
    EXPECT_EQ(d.value, 4.2);
    EXPECT_EQ(d.tau_derivative, 0.0);
  }
}

TEST(ForwardDual, SigmoidOfTanh) {
  const ParamVector none;
  const DualScalar d =
      forward_dual([](Tape& t, Var tau) { return t.sigmoid(t.tanh(tau)); }, 0.0, none);
  EXPECT_DOUBLE_EQ(d.value, 0.5);
  EXPECT_DOUBLE_EQ(d.tau_derivative, 0.25);
}

TEST(ForwardDual, MatchesCentralDifferences) {
  ParamVector p = scalar_params({{"a", 0.7}, {"b", -0.3}, {"c", 1.3}});
  const Expression f = [](Tape& t, Var tau) {
    Var a = t.param("a"), b = t.param("b"), c = t.param("c");
    Var x = t.add(t.mul(a, tau), b);
    Var y = t.mul(t.tanh(x), t.softplus(t.mul(c, tau)));
    return t.add(t.log(t.add(t.sigmoid(y), t.constant(Matrix::scalar(0.1)))),
                 t.mul(t.exp(t.scale(tau, -0.5)), t.exprel(x)));
  };
  const double eps = 1e-6;
  for (double tau : {0.05, 0.4, 1.0, 2.7}) {
    const DualScalar d = forward_dual(f, tau, p);
    const double fd = (forward_dual(f, tau + eps, p).value - forward_dual(f, tau - eps, p).value) /
                      (2 * eps);
    EXPECT_LT(relative_error(d.tau_derivative, fd), 1e-5) << "tau " << tau;
  }
}

TEST(ReverseGrad, Product) {
  ParamVector p = scalar_params({{"x", 2.0}, {"y", 5.0}});
  const ParamVector g =
      grad([](Tape& t, Var) { return t.mul(t.param("x"), t.param("y")); }, 0.0, p);
  EXPECT_DOUBLE_EQ(g.view("x")[0], 5.0);
  EXPECT_DOUBLE_EQ(g.view("y")[0], 2.0);
}

TEST(ReverseGrad, Square) {
  ParamVector p = scalar_params({{"x", 3.0}});
  const ParamVector g = grad(
      [](Tape& t, Var) {
        Var x = t.param("x");
        return t.mul(x, x);
      },
      0.0, p);
  EXPECT_DOUBLE_EQ(g.view("x")[0], 6.0);
}

TEST(ReverseGrad, TwoLayerNetworkMatchesFiniteDifferences) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> normal;
  ParamVector p;
  p.add("W1", 5, 3);
  p.add("b1", 1, 5);
  p.add("W2", 2, 5);
  p.add("b2", 1, 2);
  for (double& v : p.values()) v = normal(gen);
  Matrix x(4, 3);
  for (double& v : x.values()) v = normal(gen);

  auto build = [&x](Tape& t) {
    Var h = t.tanh(t.affine(t.constant(x), t.param("W1"), t.param("b1")));
    Var o = t.sigmoid(t.affine(h, t.param("W2"), t.param("b2")));
    return t.sum(t.log(o));
  };
  Tape tape(p);
  Var out = build(tape);
  tape.backward(out);
  const ParamVector g = tape.gradient();

  auto value = [&](const ParamVector& q) {
    Tape t(q);
    return t.value(build(t))[0];
  };
  const double h = 1e-5;
  for (std::size_t i = 0; i < p.size(); ++i) {
    ParamVector up = p, down = p;
    up[i] += h;
    down[i] -= h;
    const double fd = (value(up) - value(down)) / (2 * h);
    EXPECT_LT(relative_error(g[i], fd), 1e-6) << "parameter " << i;
  }
}

TEST(ReverseGrad, UnusedSegmentIsExactlyZero) {
  ParamVector p = scalar_params({{"used", 1.5}, {"unused", 2.0}});
  const ParamVector g = grad([](Tape& t, Var) { return t.exp(t.param("used")); }, 0.0, p);
  EXPECT_DOUBLE_EQ(g.view("used")[0], std::exp(1.5));
  EXPECT_EQ(g.view("unused")[0], 0.0);
}

TEST(MixedPartial, BilinearIsOne) {
  for (double w : {-2.0, 0.0, 0.5}) {
    ParamVector p = scalar_params({{"w", w}});
    for (double tau : {0.0, 1.0, 7.5}) {
      const ParamVector g = grad_of_tau_derivative(
          [](Tape& t, Var tau) { return t.mul(t.param("w"), tau); }, tau, p);
      EXPECT_DOUBLE_EQ(g.view("w")[0], 1.0);
    }
  }
}

TEST(MixedPartial, SigmoidMatchesFiniteDifferences) {
  const Expression f = [](Tape& t, Var tau) { return t.sigmoid(t.mul(t.param("w"), tau)); };
  ParamVector p = scalar_params({{"w", 0.0}});
  // df/dtau = w s'(w tau) vanishes at w = 0; its w-derivative there is s'(0)
  EXPECT_EQ(forward_dual(f, 1.0, p).tau_derivative, 0.0);
  EXPECT_DOUBLE_EQ(grad_of_tau_derivative(f, 1.0, p).view("w")[0], 0.25);
  for (double w : {0.0, 0.8, -1.3}) {
    p.view("w")[0] = w;
    const double g = grad_of_tau_derivative(f, 1.0, p).view("w")[0];
    const double h = 1e-5;
    ParamVector up = p, down = p;
    up.view("w")[0] += h;
    down.view("w")[0] -= h;
    const double fd =
        (forward_dual(f, 1.0, up).tau_derivative - forward_dual(f, 1.0, down).tau_derivative) /
        (2 * h);
    EXPECT_LT(relative_error(g, fd), 1e-5) << "w " << w;
  }
}

TEST(MixedPartial, ConstantHasZeroGradient) {
  ParamVector p = scalar_params({{"w", 3.0}});
  const Expression f = [](Tape& t, Var) { return t.constant(Matrix::scalar(1.0)); };
  EXPECT_EQ(grad(f, 0.5, p).view("w")[0], 0.0);
  EXPECT_EQ(grad_of_tau_derivative(f, 0.5, p).view("w")[0], 0.0);
}

TEST(Tape, ExprelIsContinuousAtZero) {
  const ParamVector none;
  const Expression f = [](Tape& t, Var tau) { return t.exprel(tau); };
  EXPECT_DOUBLE_EQ(forward_dual(f, 0.0, none).value, 1.0);
  EXPECT_NEAR(forward_dual(f, 0.0, none).tau_derivative, 0.5, 1e-12);
  EXPECT_NEAR(forward_dual(f, 1e-9, none).value, 1.0 + 5e-10, 1e-15);
  EXPECT_NEAR(forward_dual(f, 2.0, none).value, (std::exp(2.0) - 1) / 2, 1e-14);
}

TEST(Tape, LogOfNonPositiveThrows) {
  const ParamVector none;
  EXPECT_THROW(forward_dual([](Tape& t, Var tau) { return t.log(tau); }, -1.0, none),
               cufun::NumericError);
}

TEST(Tape, ExpOverflowThrows) {
  const ParamVector none;
  EXPECT_THROW(forward_dual([](Tape& t, Var tau) { return t.exp(tau); }, 1000.0, none),
               cufun::NumericError);
}

TEST(Tape, LogFloorClampsAndStopsGradient) {
  ParamVector p = scalar_params({{"x", 1e-20}});
  const Expression f = [](Tape& t, Var) { return t.log_floor(t.param("x"), 1e-12); };
  EXPECT_NEAR(forward_dual(f, 0.0, p).value, std::log(1e-12), 1e-12);
  EXPECT_EQ(grad(f, 0.0, p).view("x")[0], 0.0);
}

TEST(Tape, ReplayReevaluatesWithNewParameters) {
  ParamVector p = scalar_params({{"x", 1.0}});
  Tape tape(p);
  Var out = tape.mul(tape.param("x"), tape.param("x"));
  EXPECT_EQ(tape.value(out)[0], 1.0);
  ParamVector q = p;
  q.view("x")[0] = 3.0;
  tape.replay(q);
  EXPECT_EQ(tape.value(out)[0], 9.0);
}

}  // namespace
