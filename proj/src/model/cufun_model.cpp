#include "cufun/model/cufun_model.hpp"

#include <cassert>
#include <cmath>

#include "cufun/errors.hpp"
#include "cufun/synthgen/rng.hpp"

namespace cufun {
namespace {

double mean_abs(const ad::Matrix& m) {
  double s = 0.0;
  for (double x : m.values()) s += std::abs(x);
  return m.empty() ? 0.0 : s / static_cast<double>(m.size());
}

void fill_abs_normal(std::span<double> w, double sd, Rng& rng) {
  for (double& x : w) x = std::abs(sd * rng.normal());
}

void fill_normal(std::span<double> w, double sd, Rng& rng) {
  for (double& x : w) x = sd * rng.normal();
}

}  // namespace

MnnNames::MnnNames(std::string p)
    : tau_w(p + ".tau.W"),
      tau_b(p + ".tau.b"),
      hist_w(p + ".hist.W"),
      hist_b(p + ".hist.b"),
      out_w(p + ".out.W"),
      out_b(p + ".out.b"),
      prefix(std::move(p)) {}

std::string MnnNames::hidden_w(std::size_t layer) const {
  return prefix + ".hidden" + std::to_string(layer) + ".W";
}
std::string MnnNames::hidden_b(std::size_t layer) const {
  return prefix + ".hidden" + std::to_string(layer) + ".b";
}

void add_mnn_params(ad::ParamVector& params, const MnnNames& n, std::size_t hidden,
                    std::size_t width, std::size_t layers, ad::Constraint hist_bias) {
  using ad::Constraint;
  params.add(n.tau_w, width, 1, Constraint::ReflectNonNegative);
  params.add(n.tau_b, 1, width);
  params.add(n.hist_w, width, hidden, Constraint::ReflectNonNegative);
  params.add(n.hist_b, 1, width, hist_bias);
  for (std::size_t l = 0; l < layers; ++l) {
    params.add(n.hidden_w(l), width, width, Constraint::ReflectNonNegative);
    params.add(n.hidden_b(l), 1, width);
  }
  params.add(n.out_w, 1, width, Constraint::ReflectNonNegative);
  params.add(n.out_b, 1, 1);
}

MnnForward mnn_forward(ad::Tape& tape, const MnnNames& n, std::size_t layers, ad::Var h,
                       ad::Var tau, Fusion fusion) {
  ad::Var u = tape.affine(tau, tape.param(n.tau_w), tape.param(n.tau_b));
  ad::Var v = tape.affine(h, tape.param(n.hist_w), tape.param(n.hist_b));
  ad::Var z = fusion == Fusion::Product ? tape.mul(u, v) : tape.add(u, v);
  for (std::size_t l = 0; l < layers; ++l)
    z = tape.tanh(tape.affine(z, tape.param(n.hidden_w(l)), tape.param(n.hidden_b(l))));
  MnnForward f;
  f.out = tape.affine(z, tape.param(n.out_w), tape.param(n.out_b));
  f.mean_abs_u = mean_abs(u.value());
  f.mean_abs_v = mean_abs(v.value());
  return f;
}

const MnnNames& CufunModel::names() {
  static const MnnNames n("mnn");
  return n;
}

CufunModel::CufunModel(ModelConfig config) : Model(std::move(config)) {
  add_mnn_params(params_, names(), config_.encoder.hidden, config_.width, config_.layers,
                 ad::Constraint::ClampNonNegative);
}

void CufunModel::init_head(Rng& rng) {
  const MnnNames& n = names();
  const double width = static_cast<double>(config_.width);
  fill_abs_normal(params_.view(n.tau_w), 1.0, rng);
  fill_normal(params_.view(n.tau_b), 0.01, rng);
  fill_abs_normal(params_.view(n.hist_w), 1.0 / std::sqrt(static_cast<double>(config_.encoder.hidden)),
                  rng);
  for (double& b : params_.view(n.hist_b)) b = std::abs(0.1 * rng.normal()) + 0.1;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    fill_abs_normal(params_.view(n.hidden_w(l)), 1.0 / std::sqrt(width), rng);
    fill_normal(params_.view(n.hidden_b(l)), 0.01, rng);
  }
  fill_abs_normal(params_.view(n.out_w), 1.0 / std::sqrt(width), rng);
  fill_normal(params_.view(n.out_b), 0.01, rng);
}

HeadOutput CufunModel::head(ad::Tape& tape, ad::Var h, const ad::Matrix& tau, bool want_cdf) const {
  assert(constraints_hold());
  MnnForward f = mnn_forward(tape, names(), config_.layers, h, tape.tau(tau), config_.fusion);
  ad::Var cdf = tape.sigmoid(f.out);
  ad::Var p = tape.tau_derivative(cdf);
  HeadOutput out;
  out.log_density = tape.log_floor(p, kDensityFloor);
  out.density = p;
  if (want_cdf) out.cdf = cdf;
  out.mean_abs_u = f.mean_abs_u;
  out.mean_abs_v = f.mean_abs_v;
  return out;
}

CufunOutput CufunModel::evaluate(double tau, std::span<const double> h) const {
  const double taus[] = {tau};
  Curves c = curves(taus, h);
  return {c.cdf[0], c.density[0], c.survivor[0], c.intensity[0]};
}

double CufunModel::cdf(double tau, std::span<const double> h) const { return evaluate(tau, h).F; }
double CufunModel::density(double tau, std::span<const double> h) const {
  return evaluate(tau, h).p;
}
double CufunModel::survivor(double tau, std::span<const double> h) const {
  return evaluate(tau, h).S;
}

double CufunModel::intensity(double tau, std::span<const double> h) const {
  CufunOutput o = evaluate(tau, h);
  if (o.S < kSurvivorFloor)
    throw NumericError("intensity: survivor " + std::to_string(o.S) + " below floor at tau=" +
                       std::to_string(tau));
  return o.lambda;
}

CufunModel::DefectMass CufunModel::defect_mass(std::span<const double> h) const {
  const double taus[] = {1e-12, 1e12};
  Curves c = curves(taus, h);
  return {c.cdf[0], 1.0 - c.cdf[1]};
}

NllResult sequence_nll(const Model& model, const EventSequence& seq) {
  NllResult r;
  if (seq.empty()) return r;
  ad::Tape tape(model.params());
  const EventSequence* batch[] = {&seq};
  BatchOutput out = model.log_density(tape, batch);
  double s = 0.0;
  for (double lp : out.log_density.value().values()) s += lp;
  r.total = -s;
  r.n_events = out.n_events;
  r.per_event = r.total / static_cast<double>(r.n_events);
  return r;
}

}  // namespace cufun
