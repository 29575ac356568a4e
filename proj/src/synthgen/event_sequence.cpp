#include "cufun/synthgen/event_sequence.hpp"

#include <cmath>
#include <string>

#include "cufun/errors.hpp"

namespace cufun {

std::vector<double> EventSequence::intervals() const {
  std::vector<double> out(arrival_times.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < arrival_times.size(); ++i) {
    out[i] = arrival_times[i] - prev;
    prev = arrival_times[i];
  }
  return out;
}

void EventSequence::validate(const char* label) const {
  auto fail = [&](const std::string& why) {
    throw ValidationError(std::string(label) + ": " + why);
  };
  double prev = 0.0;
  for (std::size_t i = 0; i < arrival_times.size(); ++i) {
    const double t = arrival_times[i];
    if (!std::isfinite(t)) fail("arrival time " + std::to_string(i) + " is not finite");
    if (!(t > prev)) {
      if (i == 0) fail("arrival times must be positive");
      fail("arrival times must be strictly increasing (regular point process); event " +
           std::to_string(i) + " at " + std::to_string(t) + " does not follow " +
           std::to_string(prev));
    }
    prev = t;
  }
  if (!std::isfinite(window_end) || window_end < prev)
    fail("window_end precedes the last arrival");
  double hprev = -INFINITY;
  for (double h : history) {
    if (!std::isfinite(h) || h > 0.0 || !(h > hprev))
      fail("history times must be increasing and <= 0");
    hprev = h;
  }
}

EventSequence EventSequence::truncated(std::size_t max_len) const {
  if (arrival_times.size() <= max_len) return *this;
  EventSequence out = *this;
  out.arrival_times.resize(max_len);
  out.window_end = max_len == 0 ? 0.0 : out.arrival_times.back();
  return out;
}

}  // namespace cufun
