#include "cufun/synthgen/renewal.hpp"

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <cmath>
#include <numbers>

#include "cufun/errors.hpp"
#include "cufun/synthgen/rng.hpp"

namespace cufun {

Trend Trend::sinusoidal(double amplitude, double period) {
  const double w = 2.0 * std::numbers::pi / period;
  return Trend{
      [=](double t) { return amplitude * std::sin(w * t) + 1.0; },
      [=](double t) { return t + amplitude * (1.0 - std::cos(w * t)) / w; },
  };
}

RenewalSpec RenewalSpec::stationary_lognormal(double mean, double sd) {
  RenewalSpec s;
  s.kind = RenewalKind::StationaryLognormal;
  s.mean = mean;
  s.sd = sd;
  return s;
}

RenewalSpec RenewalSpec::nonstationary_gamma(double mean, double sd, double amplitude,
                                             double period) {
  RenewalSpec s;
  s.kind = RenewalKind::NonstationaryGamma;
  s.mean = mean;
  s.sd = sd;
  s.trend = Trend::sinusoidal(amplitude, period);
  return s;
}

void RenewalSpec::validate() const {
  if (!(sd > 0.0)) throw ValidationError("renewal: sd must be positive");
  if (moments_of_interval && !(mean > 0.0)) throw ValidationError("renewal: mean must be positive");
  if (kind == RenewalKind::NonstationaryGamma && !moments_of_interval)
    throw ValidationError("renewal: gamma gaps are parameterised by interval moments");
}

double RenewalSpec::lognormal_sigma() const {
  if (!moments_of_interval) return sd;
  return std::sqrt(std::log1p((sd * sd) / (mean * mean)));
}

double RenewalSpec::lognormal_mu() const {
  if (!moments_of_interval) return mean;
  const double s = lognormal_sigma();
  return std::log(mean) - 0.5 * s * s;
}

double RenewalSpec::gamma_shape() const { return (mean * mean) / (sd * sd); }

double RenewalSpec::gamma_scale() const { return (sd * sd) / mean; }

double RenewalSpec::interval_logpdf(double tau) const {
  if (!(tau > 0.0)) return -INFINITY;
  if (kind == RenewalKind::StationaryLognormal) {
    const double mu = lognormal_mu(), s = lognormal_sigma();
    const double z = (std::log(tau) - mu) / s;
    return -std::log(tau) - std::log(s) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * z * z;
  }
  const double k = gamma_shape(), th = gamma_scale();
  return (k - 1.0) * std::log(tau) - tau / th - std::lgamma(k) - k * std::log(th);
}

double RenewalSpec::interval_cdf(double tau) const {
  if (!(tau > 0.0)) return 0.0;
  if (kind == RenewalKind::StationaryLognormal)
    return boost::math::cdf(boost::math::lognormal(lognormal_mu(), lognormal_sigma()), tau);
  return boost::math::cdf(boost::math::gamma_distribution<>(gamma_shape(), gamma_scale()), tau);
}

namespace {

double draw_interval(const RenewalSpec& spec, Rng& rng) {
  if (spec.kind == RenewalKind::StationaryLognormal)
    return rng.lognormal(spec.lognormal_mu(), spec.lognormal_sigma());
  return rng.gamma(spec.gamma_shape(), spec.gamma_scale());
}

EventSequence stationary_clock(const RenewalSpec& spec, std::size_t n_events, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  EventSequence seq;
  seq.arrival_times.reserve(n_events);
  double t = 0.0;
  while (seq.arrival_times.size() < n_events) {
    const double next = t + draw_interval(spec, rng);
    if (!(next > t)) continue;  // gap below the resolution of t
    t = next;
    seq.arrival_times.push_back(t);
  }
  seq.window_end = t;
  return seq;
}

}  // namespace

EventSequence sample_stationary_renewal(const RenewalSpec& spec, std::size_t n_events,
                                        std::uint64_t seed) {
  if (spec.kind != RenewalKind::StationaryLognormal)
    throw ValidationError("sample_stationary_renewal needs a stationary-lognormal spec");
  return stationary_clock(spec, n_events, seed);
}

double invert_trend(const Trend& trend, double target, double lower, double tol) {
  double lo = lower;
  if (trend.integral(lo) > target) throw NumericError("invert_trend: lower bound overshoots");
  double width = std::max(1.0, target - trend.integral(lo));
  double hi = lo + width;
  int grow = 0;
  while (trend.integral(hi) < target) {
    lo = hi;
    width *= 2.0;
    hi = lo + width;
    if (++grow > 200 || !std::isfinite(hi)) throw NumericError("invert_trend: failed to bracket");
  }
  for (int it = 0; it < 400 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket at double resolution
    if (trend.integral(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

EventSequence sample_nonstationary_renewal(const RenewalSpec& spec, std::size_t n_events,
                                           std::uint64_t seed) {
  if (spec.kind != RenewalKind::NonstationaryGamma)
    throw ValidationError("sample_nonstationary_renewal needs a nonstationary-gamma spec");
  EventSequence stationary = stationary_clock(spec, n_events, seed);
  if (!spec.trend) return stationary;

  EventSequence seq;
  seq.arrival_times.reserve(n_events);
  double prev = 0.0;
  for (double tp : stationary.arrival_times) {
    double t = invert_trend(*spec.trend, tp, prev);
    if (!(t > prev)) t = std::nextafter(prev, INFINITY);
    seq.arrival_times.push_back(t);
    prev = t;
  }
  seq.window_end = prev;
  return seq;
}

double nonstationary_interval_logpdf(const RenewalSpec& spec, double start, double end) {
  if (!spec.trend) return spec.interval_logpdf(end - start);
  const double gap = spec.trend->integral(end) - spec.trend->integral(start);
  return spec.interval_logpdf(gap) + std::log(spec.trend->rate(end));
}

}  // namespace cufun
