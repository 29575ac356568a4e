#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cufun/synthgen/event_sequence.hpp"

namespace cufun {

// Lambda(t_i) - Lambda(t_{i-1}) with t_0 = 0. Under the true compensator these
// are i.i.d. unit exponential (time-rescaling theorem).
std::vector<double> time_rescaling_transform(const EventSequence& seq,
                                             const std::function<double(double)>& compensator);

struct KsResult {
  double statistic = 0.0;  // sup |F_n - F|
  double p_value = 1.0;
  bool passes(double alpha) const { return p_value >= alpha; }
};

// One-sample Kolmogorov-Smirnov test against a continuous CDF. The p-value
// uses the limiting Kolmogorov distribution with Stephens' small-sample
// correction.
KsResult ks_test(std::span<const double> sample, const std::function<double(double)>& cdf);

// P(K > x) for the Kolmogorov distribution.
double kolmogorov_survival(double x);

}  // namespace cufun
