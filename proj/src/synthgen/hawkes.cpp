#include "cufun/synthgen/hawkes.hpp"

#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cufun/errors.hpp"
#include "cufun/synthgen/rng.hpp"

namespace cufun {

HawkesParams HawkesParams::hawkes1() { return {0.2, {0.8}, {0.8}}; }

HawkesParams HawkesParams::hawkes2() { return {0.2, {0.4, 0.4}, {1.0, 20.0}}; }

double HawkesParams::branching_ratio() const {
  return std::accumulate(alphas.begin(), alphas.end(), 0.0);
}

double HawkesParams::stationary_rate() const { return mu / (1.0 - branching_ratio()); }

void HawkesParams::validate() const {
  if (!(mu > 0.0)) throw ValidationError("hawkes: mu must be positive");
  if (alphas.size() != betas.size() || alphas.empty())
    throw ValidationError("hawkes: alphas and betas must be non-empty and equally long");
  for (double a : alphas)
    if (!(a >= 0.0)) throw ValidationError("hawkes: alphas must be nonnegative");
  for (double b : betas)
    if (!(b > 0.0)) throw ValidationError("hawkes: betas must be positive");
  if (!(branching_ratio() < 1.0))
    throw ValidationError("hawkes: branching ratio sum(alpha) must be < 1 for stationarity");
}

HawkesState::HawkesState(const HawkesParams& params, double start_time)
    : params_(&params), time_(start_time), excitation_(params.alphas.size(), 0.0) {}

void HawkesState::advance_to(double t) {
  if (t < time_) throw std::invalid_argument("HawkesState: time must not decrease");
  const double dt = t - time_;
  for (std::size_t j = 0; j < excitation_.size(); ++j)
    excitation_[j] *= std::exp(-params_->betas[j] * dt);
  time_ = t;
}

void HawkesState::add_event() {
  for (std::size_t j = 0; j < excitation_.size(); ++j)
    excitation_[j] += params_->alphas[j] * params_->betas[j];
}

double HawkesState::intensity() const {
  double lam = params_->mu;
  for (double e : excitation_) lam += e;
  return lam;
}

double HawkesState::compensator_increment(double t) const {
  const double dt = t - time_;
  double c = params_->mu * dt;
  for (std::size_t j = 0; j < excitation_.size(); ++j)
    c += excitation_[j] * -std::expm1(-params_->betas[j] * dt) / params_->betas[j];
  return c;
}

namespace {

// State at time 0 after replaying the conditioning history.
HawkesState state_at_origin(const EventSequence& seq, const HawkesParams& params) {
  if (seq.history.empty()) return HawkesState(params);
  HawkesState st(params, seq.history.front());
  for (double h : seq.history) {
    st.advance_to(h);
    st.add_event();
  }
  st.advance_to(0.0);
  return st;
}

}  // namespace

EventSequence sample_hawkes(const HawkesParams& params, double window_end, std::uint64_t seed) {
  params.validate();
  if (!(window_end > 0.0)) throw ValidationError("hawkes: window_end must be positive");
  Rng rng(seed);
  HawkesState st(params);
  EventSequence seq;
  seq.window_end = window_end;
  double t = 0.0;
  for (;;) {
    // Between events the intensity only decays, so its current value dominates.
    const double bound = st.intensity();
    t += rng.exponential(bound);
    if (t > window_end) break;
    st.advance_to(t);
    const double lam = st.intensity();
    assert(lam <= bound * (1.0 + 1e-12));
    if (lam > bound * (1.0 + 1e-12)) throw std::logic_error("hawkes thinning bound exceeded");
    if (rng.uniform() * bound <= lam) {
      if (!seq.arrival_times.empty() && !(t > seq.arrival_times.back())) continue;
      seq.arrival_times.push_back(t);
      st.add_event();
    }
  }
  return seq;
}

double hawkes_intensity(double t, const EventSequence& seq, const HawkesParams& params) {
  HawkesState st = state_at_origin(seq, params);
  if (t < 0.0) throw std::invalid_argument("hawkes_intensity: t must be >= 0");
  for (double ti : seq.arrival_times) {
    if (!(ti < t)) break;
    st.advance_to(ti);
    st.add_event();
  }
  st.advance_to(t);
  return st.intensity();
}

std::vector<double> hawkes_intensity_curve(const std::vector<double>& grid,
                                           const EventSequence& seq,
                                           const HawkesParams& params) {
  HawkesState st = state_at_origin(seq, params);
  std::vector<double> out;
  out.reserve(grid.size());
  std::size_t next = 0;
  for (double t : grid) {
    while (next < seq.arrival_times.size() && seq.arrival_times[next] < t) {
      st.advance_to(seq.arrival_times[next]);
      st.add_event();
      ++next;
    }
    st.advance_to(t);
    out.push_back(st.intensity());
  }
  return out;
}

double hawkes_exact_loglik(const EventSequence& seq, const HawkesParams& params) {
  HawkesState st = state_at_origin(seq, params);
  double ll = 0.0;
  for (double t : seq.arrival_times) {
    ll -= st.compensator_increment(t);
    st.advance_to(t);
    ll += std::log(st.intensity());
    st.add_event();
  }
  ll -= st.compensator_increment(seq.window_end);
  return ll;
}

HawkesCompensator::HawkesCompensator(const EventSequence& seq, const HawkesParams& params)
    : seq_(&seq), params_(&params), state_(state_at_origin(seq, params)) {}

void HawkesCompensator::reset() {
  state_ = state_at_origin(*seq_, *params_);
  next_event_ = 0;
  accumulated_ = 0.0;
}

double HawkesCompensator::operator()(double t) {
  if (t < state_.time()) reset();
  while (next_event_ < seq_->arrival_times.size() && seq_->arrival_times[next_event_] <= t) {
    const double ti = seq_->arrival_times[next_event_];
    accumulated_ += state_.compensator_increment(ti);
    state_.advance_to(ti);
    state_.add_event();
    ++next_event_;
  }
  const double partial = state_.compensator_increment(t);
  accumulated_ += partial;
  state_.advance_to(t);
  return accumulated_;
}

}  // namespace cufun
