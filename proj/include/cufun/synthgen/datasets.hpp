#pragma once

// Named synthetic datasets.
//
// Every dataset is cut from one long realisation of its process: sequence k
// holds `seq_len` consecutive events starting at event burn_in + k * stride.
// Times are rebased so that 0 is the event just before the chunk (or the start
// of the realisation), and `origin` keeps the absolute offset. Hawkes chunks
// also carry up to `history_len` preceding events so the ground-truth model
// can condition on them.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cufun/data_io/dataset.hpp"

namespace cufun {

struct SyntheticOptions {
  std::size_t n_sequences = 100;
  std::size_t seq_len = 128;
  std::uint64_t seed = 0;
  std::optional<std::size_t> stride;    // default: seq_len (ns-renewal: 5 trend periods overall)
  std::optional<std::size_t> burn_in;   // default: 1000 events for Hawkes, 0 otherwise
  std::size_t history_len = 64;
  bool lognormal_interval_moments = true;
  double poisson_rate = 1.0;
};

const std::vector<std::string>& synthetic_dataset_names();

// Throws ValidationError for unknown names.
Dataset generate_synthetic(std::string_view name, const SyntheticOptions& options);

}  // namespace cufun
