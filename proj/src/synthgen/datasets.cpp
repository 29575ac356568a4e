#include "cufun/synthgen/datasets.hpp"

#include <algorithm>
#include <cmath>

#include "cufun/errors.hpp"
#include "cufun/synthgen/hawkes.hpp"
#include "cufun/synthgen/renewal.hpp"
#include "cufun/synthgen/rng.hpp"

namespace cufun {
namespace {

constexpr double kTrendAmplitude = 0.99;
constexpr double kTrendPeriod = 20000.0;

EventSequence long_hawkes(const HawkesParams& p, std::size_t total, std::uint64_t seed) {
  double window = static_cast<double>(total) / p.stationary_rate() * 1.25 + 100.0;
  for (;;) {
    EventSequence s = sample_hawkes(p, window, seed);
    if (s.size() >= total) return s;
    window *= 2.0;
  }
}

EventSequence long_poisson(double rate, std::size_t total, std::uint64_t seed) {
  Rng rng(seed);
  EventSequence s;
  double t = 0.0;
  while (s.size() < total) {
    const double next = t + rng.exponential(rate);
    if (!(next > t)) continue;
    t = next;
    s.arrival_times.push_back(t);
  }
  s.window_end = t;
  return s;
}

nlohmann::json hawkes_json(const HawkesParams& p) {
  return {{"process", "hawkes"}, {"mu", p.mu}, {"alphas", p.alphas}, {"betas", p.betas}};
}

std::vector<EventSequence> chunk(const EventSequence& full, std::size_t n_seq, std::size_t len,
                                 std::size_t stride, std::size_t burn_in,
                                 std::size_t history_len) {
  std::vector<EventSequence> out;
  out.reserve(n_seq);
  const auto& t = full.arrival_times;
  for (std::size_t k = 0; k < n_seq; ++k) {
    const std::size_t start = burn_in + k * stride;
    const double origin = start == 0 ? 0.0 : t[start - 1];
    EventSequence s;
    s.origin = origin;
    s.arrival_times.reserve(len);
    for (std::size_t i = start; i < start + len; ++i) s.arrival_times.push_back(t[i] - origin);
    s.window_end = s.arrival_times.back();
    if (history_len > 0 && start > 0) {
      const std::size_t from = start > history_len ? start - history_len : 0;
      for (std::size_t i = from; i < start; ++i) s.history.push_back(t[i] - origin);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

const std::vector<std::string>& synthetic_dataset_names() {
  static const std::vector<std::string> names{"hawkes1", "hawkes2", "s-renewal", "ns-renewal",
                                              "poisson"};
  return names;
}

Dataset generate_synthetic(std::string_view name, const SyntheticOptions& opt) {
  if (opt.n_sequences == 0 || opt.seq_len == 0)
    throw ValidationError("generate: n_sequences and seq_len must be positive");

  const bool is_hawkes = name == "hawkes1" || name == "hawkes2";
  std::size_t stride = opt.stride.value_or(opt.seq_len);
  if (name == "ns-renewal" && !opt.stride) {
    const auto spread = static_cast<std::size_t>(
        std::ceil(5.0 * kTrendPeriod / static_cast<double>(opt.n_sequences)));
    stride = std::max(opt.seq_len, spread);
  }
  if (stride < opt.seq_len) throw ValidationError("generate: stride must be >= seq_len");
  const std::size_t burn_in = opt.burn_in.value_or(is_hawkes ? 1000 : 0);
  const std::size_t total = burn_in + (opt.n_sequences - 1) * stride + opt.seq_len;

  DatasetHeader header;
  header.generator = std::string(name);
  header.seed = opt.seed;
  EventSequence full;
  std::size_t history_len = 0;

  if (is_hawkes) {
    const HawkesParams p = name == "hawkes1" ? HawkesParams::hawkes1() : HawkesParams::hawkes2();
    full = long_hawkes(p, total, opt.seed);
    header.params = hawkes_json(p);
    history_len = opt.history_len;
  } else if (name == "s-renewal") {
    RenewalSpec spec = RenewalSpec::stationary_lognormal(1.0, 6.0);
    spec.moments_of_interval = opt.lognormal_interval_moments;
    full = sample_stationary_renewal(spec, total, opt.seed);
    header.params = {{"process", "renewal"},
                     {"distribution", "lognormal"},
                     {"mean", spec.mean},
                     {"sd", spec.sd},
                     {"moments_of", spec.moments_of_interval ? "interval" : "normal"},
                     {"lognormal_mu", spec.lognormal_mu()},
                     {"lognormal_sigma", spec.lognormal_sigma()}};
  } else if (name == "ns-renewal") {
    const RenewalSpec spec =
        RenewalSpec::nonstationary_gamma(1.0, 0.5, kTrendAmplitude, kTrendPeriod);
    full = sample_nonstationary_renewal(spec, total, opt.seed);
    header.params = {{"process", "renewal"},
                     {"distribution", "gamma"},
                     {"mean", spec.mean},
                     {"sd", spec.sd},
                     {"gamma_shape", spec.gamma_shape()},
                     {"gamma_scale", spec.gamma_scale()},
                     {"trend", {{"kind", "sinusoidal"},
                                {"amplitude", kTrendAmplitude},
                                {"period", kTrendPeriod}}}};
  } else if (name == "poisson") {
    if (!(opt.poisson_rate > 0.0)) throw ValidationError("generate: poisson rate must be positive");
    full = long_poisson(opt.poisson_rate, total, opt.seed);
    header.params = {{"process", "poisson"}, {"rate", opt.poisson_rate}};
  } else {
    throw ValidationError("generate: unknown dataset '" + std::string(name) + "'");
  }

  header.params["n_sequences"] = opt.n_sequences;
  header.params["seq_len"] = opt.seq_len;
  header.params["stride"] = stride;
  header.params["burn_in"] = burn_in;

  Dataset ds;
  ds.header = std::move(header);
  ds.sequences = chunk(full, opt.n_sequences, opt.seq_len, stride, burn_in, history_len);
  ds.validate();
  return ds;
}

}  // namespace cufun
