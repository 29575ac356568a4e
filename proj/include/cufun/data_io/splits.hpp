#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "json.hpp"

namespace cufun {

// One train/validation/test partition of sequence indices.
struct SplitManifest {
  std::size_t repeat_index = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;

  // Disjoint and covering [0, n).
  bool is_partition_of(std::size_t n) const;

  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

struct SplitConfig {
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  double train_fraction = 0.6;
  double validation_fraction = 0.2;
};

// `repeats` shuffled partitions; repeat r shuffles with seed + r. Requires n >= 5.
std::vector<SplitManifest> make_splits(std::size_t n_sequences, const SplitConfig& config);

void to_json(nlohmann::json& j, const SplitManifest& m);
void from_json(const nlohmann::json& j, SplitManifest& m);

}  // namespace cufun
