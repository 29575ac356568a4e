#pragma once

// Ground-truth likelihood of the synthetic processes, rebuilt from a dataset
// header. Log-likelihoods sum event log densities only (no survival term after
// the last event), the same convention the neural models are scored with.

#include <optional>
#include <span>

#include "cufun/data_io/dataset.hpp"
#include "cufun/model/cufun_model.hpp"
#include "cufun/synthgen/hawkes.hpp"
#include "cufun/synthgen/renewal.hpp"

namespace cufun {

class TrueModel {
 public:
  // nullopt when the header does not describe a known process.
  static std::optional<TrueModel> from_header(const DatasetHeader& header);
  static TrueModel hawkes(HawkesParams params);
  static TrueModel renewal(RenewalSpec spec);
  static TrueModel poisson(double rate);

  double loglik(const EventSequence& seq) const;
  // Events pooled across sequences.
  NllResult nll(std::span<const EventSequence> sequences) const;

  // Density of the next interval after the first `elapsed` events of `seq`,
  // at each tau in `taus`.
  std::vector<double> conditional_density(const EventSequence& seq, std::size_t elapsed,
                                          std::span<const double> taus) const;

  const std::optional<HawkesParams>& hawkes_params() const noexcept { return hawkes_; }

 private:
  TrueModel() = default;
  std::optional<HawkesParams> hawkes_;
  std::optional<RenewalSpec> renewal_;
  double poisson_rate_ = 0.0;
};

}  // namespace cufun
