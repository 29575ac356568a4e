#include "cufun/data_io/splits.hpp"

#include <algorithm>
#include <numeric>
#include <span>

#include "cufun/errors.hpp"
#include "cufun/synthgen/rng.hpp"

namespace cufun {

bool SplitManifest::is_partition_of(std::size_t n) const {
  std::vector<int> seen(n, 0);
  for (const auto* part : {&train, &validation, &test})
    for (std::size_t i : *part) {
      if (i >= n || seen[i]++) return false;
    }
  return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

std::vector<SplitManifest> make_splits(std::size_t n, const SplitConfig& config) {
  if (n < 5) throw ValidationError("make_splits: need at least 5 sequences");
  if (config.repeats == 0) throw ValidationError("make_splits: repeats must be positive");
  const double f_train = config.train_fraction, f_val = config.validation_fraction;
  if (!(f_train > 0.0) || !(f_val > 0.0) || !(f_train + f_val < 1.0))
    throw ValidationError("make_splits: bad split fractions");

  const auto n_train = std::max<std::size_t>(1, static_cast<std::size_t>(f_train * n));
  const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(f_val * n));
  if (n_train + n_val >= n) throw ValidationError("make_splits: no sequences left for test");

  std::vector<SplitManifest> out;
  out.reserve(config.repeats);
  for (std::size_t r = 0; r < config.repeats; ++r) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(config.seed + r, /*stream=*/0x5EED5);
    rng.shuffle(std::span<std::size_t>(idx));
    SplitManifest m;
    m.repeat_index = r;
    m.seed = config.seed + r;
    m.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    m.validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                        idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    m.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
    out.push_back(std::move(m));
  }
  return out;
}

void to_json(nlohmann::json& j, const SplitManifest& m) {
  j = {{"repeat_index", m.repeat_index},
       {"seed", m.seed},
       {"train", m.train},
       {"validation", m.validation},
       {"test", m.test}};
}

void from_json(const nlohmann::json& j, SplitManifest& m) {
  j.at("repeat_index").get_to(m.repeat_index);
  j.at("seed").get_to(m.seed);
  j.at("train").get_to(m.train);
  j.at("validation").get_to(m.validation);
  j.at("test").get_to(m.test);
}

}  // namespace cufun
