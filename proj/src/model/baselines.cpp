#include "cufun/model/baselines.hpp"

#include <cmath>
#include <string>

#include "cufun/errors.hpp"
#include "cufun/synthgen/rng.hpp"

namespace cufun {
namespace {

ad::Var one_minus(ad::Tape& tape, ad::Var x) {
  return tape.sub(tape.constant(ad::Matrix(x.rows(), x.cols(), 1.0)), x);
}

// 1 - exp(-Lambda)
ad::Var cdf_from_compensator(ad::Tape& tape, ad::Var lambda_int) {
  return one_minus(tape, tape.exp(tape.scale(lambda_int, -1.0)));
}

ad::Var linear_head(ad::Tape& tape, ad::Var h, const std::string& prefix) {
  return tape.affine(h, tape.param(prefix + ".v"), tape.param(prefix + ".b"));
}

void init_linear_head(ad::ParamVector& params, const std::string& prefix, std::size_t hidden,
                      Rng& rng) {
  const double sd = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (double& x : params.view(prefix + ".v")) x = sd * rng.normal();
  for (double& x : params.view(prefix + ".b")) x = 0.01 * rng.normal();
}

double exprel(double x) {
  if (std::abs(x) < 1e-6) return 1.0 + x / 2.0 + x * x / 6.0;
  return std::expm1(x) / x;
}

}  // namespace

double const_logdensity(double tau, double rate) { return std::log(rate) - rate * tau; }

double rmtpp_logdensity(double tau, double a, double w) {
  const double growth = exprel(w * tau);
  const double compensator = std::exp(a) * tau * growth;
  if (!std::isfinite(compensator)) throw NumericError("rmtpp: compensator overflow");
  return a + w * tau - compensator;
}

double exp_logdensity(double tau, double a, double w, std::size_t points) {
  const double step = tau / static_cast<double>(points - 1);
  double total = 0.0;
  for (std::size_t k = 0; k < points; ++k) {
    const double weight = (k == 0 || k + 1 == points) ? 0.5 : 1.0;
    total += weight * std::exp(a + w * step * static_cast<double>(k));
  }
  return a + w * tau - step * total;
}

ConstModel::ConstModel(ModelConfig config) : Model(std::move(config)) {
  params_.add("const.v", 1, config_.encoder.hidden);
  params_.add("const.b", 1, 1);
}

void ConstModel::init_head(Rng& rng) {
  init_linear_head(params_, "const", config_.encoder.hidden, rng);
}

HeadOutput ConstModel::head(ad::Tape& tape, ad::Var h, const ad::Matrix& tau, bool want_cdf) const {
  ad::Var rate = tape.softplus(linear_head(tape, h, "const"));
  ad::Var compensator = tape.mul(rate, tape.constant(tau));
  HeadOutput out;
  out.log_density = tape.sub(tape.log_floor(rate, kDensityFloor), compensator);
  if (want_cdf) out.cdf = cdf_from_compensator(tape, compensator);
  return out;
}

RmtppModel::RmtppModel(ModelConfig config) : RmtppModel(std::move(config), "rmtpp") {}

RmtppModel::RmtppModel(ModelConfig config, const char* prefix)
    : Model(std::move(config)), prefix_(prefix) {
  params_.add(prefix_ + ".v", 1, config_.encoder.hidden);
  params_.add(prefix_ + ".b", 1, 1);
  params_.add(prefix_ + ".w", 1, 1);
}

void RmtppModel::init_head(Rng& rng) {
  init_linear_head(params_, prefix_, config_.encoder.hidden, rng);
  for (double& x : params_.view(prefix_ + ".w")) x = 0.01 * rng.normal();
}

HeadOutput RmtppModel::head(ad::Tape& tape, ad::Var h, const ad::Matrix& tau, bool want_cdf) const {
  ad::Var a = linear_head(tape, h, prefix_);
  ad::Var t = tape.constant(tau);
  ad::Var wt = tape.matmul_nt(t, tape.param(prefix_ + ".w"));
  ad::Var compensator = tape.mul(tape.mul(tape.exp(a), t), tape.exprel(wt));
  HeadOutput out;
  out.log_density = tape.sub(tape.add(a, wt), compensator);
  if (want_cdf) out.cdf = cdf_from_compensator(tape, compensator);
  return out;
}

ExpModel::ExpModel(ModelConfig config) : RmtppModel(std::move(config), "exp") {}

HeadOutput ExpModel::head(ad::Tape& tape, ad::Var h, const ad::Matrix& tau, bool want_cdf) const {
  const std::size_t k_pts = config_.trapezoid_points;
  const double last = static_cast<double>(k_pts - 1);
  ad::Var a = linear_head(tape, h, prefix_);
  ad::Var t = tape.constant(tau);
  ad::Var wt = tape.matmul_nt(t, tape.param(prefix_ + ".w"));

  // sum_k c_k exp(w tau k / (K-1)), c_0 = c_{K-1} = 1/2
  ad::Var nodes = tape.constant(ad::Matrix(tau.rows(), 1, 0.5));
  for (std::size_t k = 1; k < k_pts; ++k) {
    const double weight = k + 1 == k_pts ? 0.5 : 1.0;
    nodes = tape.add(nodes, tape.scale(tape.exp(tape.scale(wt, static_cast<double>(k) / last)), weight));
  }
  ad::Var compensator =
      tape.mul(tape.mul(tape.exp(a), tape.scale(t, 1.0 / last)), nodes);
  HeadOutput out;
  out.log_density = tape.sub(tape.add(a, wt), compensator);
  if (want_cdf) out.cdf = cdf_from_compensator(tape, compensator);
  return out;
}

const MnnNames& FullyNNModel::names() {
  static const MnnNames n("fullynn");
  return n;
}

FullyNNModel::FullyNNModel(ModelConfig config) : Model(std::move(config)) {
  add_mnn_params(params_, names(), config_.encoder.hidden, config_.width, config_.layers,
                 ad::Constraint::Free);
}

void FullyNNModel::init_head(Rng& rng) {
  const MnnNames& n = names();
  const double width = static_cast<double>(config_.width);
  auto abs_normal = [&](std::span<double> w, double sd) {
    for (double& x : w) x = std::abs(sd * rng.normal());
  };
  auto small = [&](std::span<double> w) {
    for (double& x : w) x = 0.01 * rng.normal();
  };
  abs_normal(params_.view(n.tau_w), 1.0);
  small(params_.view(n.tau_b));
  abs_normal(params_.view(n.hist_w), 1.0 / std::sqrt(static_cast<double>(config_.encoder.hidden)));
  small(params_.view(n.hist_b));
  for (std::size_t l = 0; l < config_.layers; ++l) {
    abs_normal(params_.view(n.hidden_w(l)), 1.0 / std::sqrt(width));
    small(params_.view(n.hidden_b(l)));
  }
  abs_normal(params_.view(n.out_w), 1.0 / std::sqrt(width));
  small(params_.view(n.out_b));
}

HeadOutput FullyNNModel::head(ad::Tape& tape, ad::Var h, const ad::Matrix& tau,
                              bool want_cdf) const {
  MnnForward f = mnn_forward(tape, names(), config_.layers, h, tape.tau(tau), Fusion::Add);
  ad::Var phi_int = tape.softplus(f.out);
  ad::Var phi = tape.tau_derivative(phi_int);
  HeadOutput out;
  out.log_density = tape.sub(tape.log_floor(phi, kDensityFloor), phi_int);
  if (want_cdf) out.cdf = cdf_from_compensator(tape, phi_int);
  out.mean_abs_u = f.mean_abs_u;
  out.mean_abs_v = f.mean_abs_v;
  return out;
}

}  // namespace cufun
