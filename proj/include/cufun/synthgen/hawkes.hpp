#pragma once

#include <cstdint>
#include <vector>

#include "cufun/synthgen/event_sequence.hpp"

namespace cufun {

// Exponential-kernel Hawkes process:
//   lambda(t) = mu + sum_{t_i < t} sum_j alpha_j beta_j exp(-beta_j (t - t_i)).
// Each kernel integrates to alpha_j, so the branching ratio is sum(alpha).
struct HawkesParams {
  double mu = 0.0;
  std::vector<double> alphas;
  std::vector<double> betas;

  static HawkesParams hawkes1();  // mu 0.2, alpha 0.8, beta 0.8
  static HawkesParams hawkes2();  // mu 0.2, alpha (0.4, 0.4), beta (1, 20)

  double branching_ratio() const;
  double stationary_rate() const;  // mu / (1 - branching ratio)
  // Throws ValidationError unless mu > 0, alphas >= 0, betas > 0, ratio < 1.
  void validate() const;
};

// Running excitation state, advanced in time order. advance_to() is O(M).
class HawkesState {
 public:
  explicit HawkesState(const HawkesParams& params, double start_time = 0.0);

  double time() const noexcept { return time_; }
  // Moves the clock forward to t >= time(), decaying the excitation.
  void advance_to(double t);
  // Registers an event at the current time.
  void add_event();
  // lambda just after the current time (left limit if an event sits exactly here
  // and has not been added yet).
  double intensity() const;
  // Integral of lambda over [time(), t] without moving the clock.
  double compensator_increment(double t) const;

 private:
  const HawkesParams* params_;
  double time_;
  std::vector<double> excitation_;
};

// Ogata thinning on [0, window_end] from an empty history.
EventSequence sample_hawkes(const HawkesParams& params, double window_end, std::uint64_t seed);

// lambda(t | events strictly before t), including `history` of the sequence.
double hawkes_intensity(double t, const EventSequence& seq, const HawkesParams& params);

// Intensity at each (nondecreasing) grid time, in one pass.
std::vector<double> hawkes_intensity_curve(const std::vector<double>& grid,
                                           const EventSequence& seq, const HawkesParams& params);

// sum_i log lambda(t_i) - int_0^window_end lambda(s) ds, conditioned on `history`.
double hawkes_exact_loglik(const EventSequence& seq, const HawkesParams& params);

// Integrated intensity Lambda(t) = int_0^t lambda. Efficient for nondecreasing
// query times; earlier queries restart from the origin.
class HawkesCompensator {
 public:
  HawkesCompensator(const EventSequence& seq, const HawkesParams& params);
  double operator()(double t);

 private:
  void reset();
  const EventSequence* seq_;
  const HawkesParams* params_;
  HawkesState state_;
  std::size_t next_event_ = 0;
  double accumulated_ = 0.0;
};

}  // namespace cufun
