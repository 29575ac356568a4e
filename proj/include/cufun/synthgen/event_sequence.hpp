#pragma once

#include <cstddef>
#include <vector>

namespace cufun {

// One observed realisation of a temporal point process.
//
// Arrival times are measured from the sequence origin (time 0) and must be
// strictly increasing and positive. The origin is either the start of the
// observation or, for sequences cut out of a longer realisation, the time of
// the event immediately preceding the first arrival. `origin` records where
// time 0 sits in that longer realisation; `history` optionally carries earlier
// events (relative times <= 0, oldest first) so that a ground-truth model can
// condition on them. Learned models never see `history`.
struct EventSequence {
  std::vector<double> arrival_times;
  double window_end = 0.0;
  double origin = 0.0;
  std::vector<double> history;

  std::size_t size() const noexcept { return arrival_times.size(); }
  bool empty() const noexcept { return arrival_times.empty(); }

  // tau_i = t_i - t_{i-1} with t_0 = 0.
  std::vector<double> intervals() const;

  // Throws ValidationError naming `label` if an invariant is broken.
  void validate(const char* label = "sequence") const;

  // Keeps the first `max_len` events; window_end moves to the last kept event
  // when events were dropped.
  EventSequence truncated(std::size_t max_len) const;

  friend bool operator==(const EventSequence&, const EventSequence&) = default;
};

}  // namespace cufun
