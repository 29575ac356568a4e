#pragma once

// Experiment commands behind the CLI. Each writes its artifacts under an
// output directory and returns what it wrote, so tests can drive the same code
// paths as the command line.
//
// Layout of a training run:
//   <out>/<dataset>/<model>[-add]/summary.json
//   <out>/<dataset>/<model>[-add]/splits.json
//   <out>/<dataset>/<model>[-add]/metrics_r<k>.csv
//   <out>/<dataset>/<model>[-add]/checkpoint_r<k>.json

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "cufun/data_io/dataset.hpp"
#include "cufun/model/model.hpp"
#include "cufun/synthgen/datasets.hpp"
#include "cufun/training/trainer.hpp"

namespace cufun {

namespace fs = std::filesystem;

// Runs task(0..n-1) on at most `workers` threads; rethrows the first failure.
void run_parallel(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& task);

fs::path cmd_generate(const std::string& name, const SyntheticOptions& options, const fs::path& out);

// Name used for a dataset in output paths: the generator for synthetic data,
// else the file stem.
std::string dataset_id(const Dataset& data, const fs::path& path);
// Run directory name: model id, with "-add" for additive CuFun fusion.
std::string run_id(const ModelConfig& config);

struct TrainRequest {
  ModelConfig model;
  fs::path dataset;
  RunConfig run;
  fs::path out;
  std::size_t workers = 1;
  bool write_checkpoints = true;
  std::function<void(const std::string&)> log;  // progress lines, may be empty
};

struct TrainSummary {
  fs::path directory;
  nlohmann::json summary;  // contents of summary.json
  std::vector<RunResult> runs;
};

// Trains every repeat, writes the run directory and returns the summary. A
// TrainingAbort from any repeat is written to abort_dump.json and rethrown.
TrainSummary cmd_train(const TrainRequest& request);
TrainSummary train_on(const Dataset& data, const std::string& dataset_name, const TrainRequest& request);

struct EvaluateResult {
  NllResult model;
  std::optional<NllResult> truth;
};
// Scores every sequence of the dataset (or only `indices` when given).
EvaluateResult cmd_evaluate(const fs::path& checkpoint, const fs::path& dataset,
                            const std::optional<std::vector<std::size_t>>& indices,
                            std::size_t max_seq_len = 128);

struct IntensityRequest {
  fs::path checkpoint;
  fs::path dataset;
  std::size_t sequence = 0;
  double step = 0.1;
  fs::path out_csv;
};
// Returns the number of grid points written.
std::size_t cmd_intensity_curve(const IntensityRequest& request);

struct DensityRequest {
  fs::path checkpoint;
  fs::path dataset;
  std::size_t sequence = 0;
  std::size_t elapsed = 0;
  double tau_max = 5.0;
  std::size_t points = 200;
  fs::path out_csv;
};
void cmd_density_curve(const DensityRequest& request);

struct AblationResult {
  RunResult add;
  RunResult product;
  nlohmann::json summary;
};
// Trains CuFun with additive and with product fusion on split 0 and writes
// ablation_add.csv / ablation_product.csv (epoch,mean_abs_u,mean_abs_v,train_nll,
// validation_nll) plus ablation_summary.json with final-quartile averages.
AblationResult cmd_ablation(const fs::path& dataset, const ModelConfig& model, const RunConfig& run,
                            const fs::path& out);

struct FinalQuartile {
  double mean_abs_u;
  double mean_abs_v;
};
FinalQuartile final_quartile(const std::vector<EpochRecord>& epochs);

// Plan: {"datasets":[paths...], "models":["cufun","fullynn",...], "runs_dir":"..."}
// A model id may carry "-add" for additive fusion.
struct CompareRow {
  std::string dataset;
  std::string model;
  double mean = 0.0;
  double std = 0.0;
  std::size_t repeats = 0;
};
struct CompareResult {
  std::vector<CompareRow> rows;
  std::vector<std::string> missing;  // "<dataset>/<model>" without a summary
};
CompareResult cmd_compare(const nlohmann::json& plan, const fs::path& plan_dir);
void write_compare_csv(const CompareResult& result, std::ostream& out);
void print_compare_table(const CompareResult& result, std::ostream& out);

}  // namespace cufun
