#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "cufun/synthgen/event_sequence.hpp"

namespace cufun {

// Time-varying rate r(t) > 0 together with its integral R(t) = int_0^t r.
struct Trend {
  std::function<double(double)> rate;
  std::function<double(double)> integral;

  // r(t) = amplitude * sin(2 pi t / period) + 1
  static Trend sinusoidal(double amplitude, double period);
};

enum class RenewalKind { StationaryLognormal, NonstationaryGamma };

struct RenewalSpec {
  RenewalKind kind = RenewalKind::StationaryLognormal;
  double mean = 1.0;
  double sd = 1.0;
  // When true, mean/sd are moments of the interval distribution itself; when
  // false (lognormal only) they are the mean/sd of the underlying normal.
  bool moments_of_interval = true;
  std::optional<Trend> trend;

  static RenewalSpec stationary_lognormal(double mean = 1.0, double sd = 6.0);
  static RenewalSpec nonstationary_gamma(double mean = 1.0, double sd = 0.5,
                                         double amplitude = 0.99, double period = 20000.0);

  void validate() const;

  double lognormal_mu() const;
  double lognormal_sigma() const;
  double gamma_shape() const;
  double gamma_scale() const;

  // log density of one (stationary-clock) interval.
  double interval_logpdf(double tau) const;
  double interval_cdf(double tau) const;
};

// i.i.d. lognormal gaps starting from an event at 0.
EventSequence sample_stationary_renewal(const RenewalSpec& spec, std::size_t n_events,
                                        std::uint64_t seed);

// Gamma gaps on the stationary clock t', mapped to real time through
// t = R^{-1}(t'). Without a trend the stationary sequence is returned as is.
EventSequence sample_nonstationary_renewal(const RenewalSpec& spec, std::size_t n_events,
                                           std::uint64_t seed);

// Solves R(t) = target for t >= lower by bisection with a geometrically grown
// bracket. Throws NumericError when no bracket is found.
double invert_trend(const Trend& trend, double target, double lower, double tol = 1e-10);

// Log density of an interval [start, start + tau] (absolute times) under the
// non-stationary renewal model: log p'(R(end) - R(start)) + log r(end).
double nonstationary_interval_logpdf(const RenewalSpec& spec, double start, double end);

}  // namespace cufun
