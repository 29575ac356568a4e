#pragma once

// Maximum-likelihood training with Adam, projection onto the sign constraints
// after every step, and early stopping on validation NLL.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "json.hpp"
#include "cufun/data_io/dataset.hpp"
#include "cufun/data_io/splits.hpp"
#include "cufun/model/cufun_model.hpp"
#include "cufun/model/model.hpp"

namespace cufun {

struct RunConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 3000;
  std::size_t patience = 100;
  std::size_t max_seq_len = 128;
  double l2 = 1e-5;
  std::uint64_t seed = 0;
  std::size_t repeats = 10;

  void validate() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
// Unknown keys are rejected with ValidationError.
void from_json(const nlohmann::json& j, RunConfig& c);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_nll = 0.0;
  double validation_nll = 0.0;
  double mean_abs_u = std::numeric_limits<double>::quiet_NaN();
  double mean_abs_v = std::numeric_limits<double>::quiet_NaN();
};

struct RunResult {
  std::size_t repeat_index = 0;
  double initial_validation_nll = 0.0;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0 when no epoch beat the initial parameters
  double best_validation_nll = 0.0;
  double test_nll = 0.0;
  std::size_t test_events = 0;
  bool stopped_early = false;
  ad::ParamVector best_params;
};

struct TrainHooks {
  // Test hook: gradients are replaced by zeros before every optimizer step.
  bool freeze_gradients = false;
  std::function<void(const EpochRecord&)> on_epoch;
  std::function<void(const Model&)> after_step;
};

// Pooled per-event NLL of `sequences` (each truncated to max_seq_len).
NllResult evaluate_nll(const Model& model, std::span<const EventSequence> sequences,
                       std::size_t max_seq_len = 128, std::size_t batch_size = 64);

// Trains `model` in place and leaves it holding the best-validation parameters.
// NaN or overflow during a step raises TrainingAbort.
RunResult train(Model& model, const Dataset& data, const SplitManifest& split,
                const RunConfig& config, const TrainHooks& hooks = {});

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
};
MeanStd mean_std(std::span<const double> values);

// Seed of the model initialisation for one repeat.
std::uint64_t init_seed(std::uint64_t run_seed, std::size_t repeat_index);

// Per-epoch metrics as CSV: epoch,split,nll,mean_abs_u,mean_abs_v
void write_metrics_csv(const RunResult& run, std::ostream& out);

}  // namespace cufun
