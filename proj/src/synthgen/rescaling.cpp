#include "cufun/synthgen/rescaling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cufun {

std::vector<double> time_rescaling_transform(const EventSequence& seq,
                                             const std::function<double(double)>& compensator) {
  std::vector<double> out;
  out.reserve(seq.size());
  double prev = compensator(0.0);
  for (double t : seq.arrival_times) {
    const double cur = compensator(t);
    out.push_back(cur - prev);
    prev = cur;
  }
  return out;
}

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.3) {
    // Series in exp(-pi^2/(8x^2)) converges fast for small x.
    const double pi = 3.14159265358979323846;
    double s = 0.0;
    for (int k = 1; k <= 50; k += 2)
      s += std::exp(-(k * k) * pi * pi / (8.0 * x * x));
    return 1.0 - std::sqrt(2.0 * pi) / x * s;
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult ks_test(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_test: empty sample");
  std::vector<double> xs(sample.begin(), sample.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)};
}

}  // namespace cufun
