#include "cufun/harness/commands.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "cufun/data_io/dataset_io.hpp"
#include "cufun/data_io/splits.hpp"
#include "cufun/errors.hpp"
#include "cufun/harness/curves.hpp"
#include "cufun/model/checkpoint.hpp"
#include "cufun/model/true_model.hpp"

namespace cufun {
namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) { open_out(path) << j.dump(2) << '\n'; }

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

const EventSequence& sequence_at(const Dataset& data, std::size_t index) {
  if (index >= data.sequences.size())
    throw ValidationError("sequence index " + std::to_string(index) + " out of range (" +
                          std::to_string(data.sequences.size()) + " sequences)");
  return data.sequences[index];
}

std::vector<EventSequence> select(const Dataset& data, const std::vector<std::size_t>& idx,
                                  std::size_t max_len) {
  std::vector<EventSequence> out;
  for (std::size_t i : idx) out.push_back(sequence_at(data, i).truncated(max_len));
  return out;
}

}  // namespace

void run_parallel(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& task) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

fs::path cmd_generate(const std::string& name, const SyntheticOptions& options, const fs::path& out) {
  const Dataset data = generate_synthetic(name, options);
  const fs::path path = out / (name + ".jsonl");
  fs::create_directories(out);
  write_dataset(data, path);
  return path;
}

std::string dataset_id(const Dataset& data, const fs::path& path) {
  if (data.header && !data.header->generator.empty() && data.header->generator != "external")
    return data.header->generator;
  return path.stem().string();
}

std::string run_id(const ModelConfig& config) {
  std::string id(to_string(config.kind));
  if (config.kind == ModelKind::Cufun && config.fusion == Fusion::Add) id += "-add";
  return id;
}

TrainSummary cmd_train(const TrainRequest& request) {
  const Dataset data = load_dataset(request.dataset);
  return train_on(data, dataset_id(data, request.dataset), request);
}

TrainSummary train_on(const Dataset& data, const std::string& dataset_name,
                      const TrainRequest& request) {
  request.run.validate();
  request.model.validate();
  TrainSummary result;
  result.directory = request.out / dataset_name / run_id(request.model);
  fs::create_directories(result.directory);

  const std::vector<SplitManifest> splits =
      make_splits(data.sequences.size(), SplitConfig{request.run.repeats, request.run.seed});
  write_json(result.directory / "splits.json", splits);

  std::optional<TrueModel> truth;
  if (data.header) truth = TrueModel::from_header(*data.header);

  result.runs.resize(splits.size());
  std::mutex log_mutex;
  try {
    run_parallel(splits.size(), request.workers, [&](std::size_t r) {
      std::unique_ptr<Model> model = make_model(request.model);
      model->initialize(init_seed(request.run.seed, r));
      RunResult run = train(*model, data, splits[r], request.run);
      std::ofstream metrics = open_out(result.directory / ("metrics_r" + std::to_string(r) + ".csv"));
      write_metrics_csv(run, metrics);
      if (request.write_checkpoints)
        save_checkpoint(*model, result.directory / ("checkpoint_r" + std::to_string(r) + ".json"));
      if (request.log) {
        std::lock_guard lock(log_mutex);
        std::ostringstream line;
        line << dataset_name << '/' << run_id(request.model) << " repeat " << r << ": test NLL "
             << run.test_nll << " after " << run.epochs.size() << " epochs";
        request.log(line.str());
      }
      result.runs[r] = std::move(run);
    });
  } catch (const TrainingAbort& e) {
    write_json(result.directory / "abort_dump.json", nlohmann::json::parse(e.dump()));
    throw;
  }

  std::vector<double> test, true_test;
  nlohmann::json repeats = nlohmann::json::array();
  for (std::size_t r = 0; r < splits.size(); ++r) {
    const RunResult& run = result.runs[r];
    test.push_back(run.test_nll);
    nlohmann::json rep = {{"repeat", r},
                          {"test_nll", run.test_nll},
                          {"test_events", run.test_events},
                          {"best_epoch", run.best_epoch},
                          {"epochs_run", run.epochs.size()},
                          {"stopped_early", run.stopped_early},
                          {"initial_validation_nll", run.initial_validation_nll},
                          {"best_validation_nll", run.best_validation_nll}};
    if (truth) {
      const NllResult t = truth->nll(select(data, splits[r].test, request.run.max_seq_len));
      rep["true_test_nll"] = t.per_event;
      true_test.push_back(t.per_event);
    }
    repeats.push_back(std::move(rep));
  }
  const MeanStd m = mean_std(test);
  nlohmann::json& s = result.summary;
  s["dataset"] = dataset_name;
  s["model"] = run_id(request.model);
  s["model_config"] = request.model;
  s["run_config"] = request.run;
  s["repeats"] = std::move(repeats);
  s["test_nll_mean"] = m.mean;
  s["test_nll_std"] = m.std;
  if (truth) {
    const MeanStd t = mean_std(true_test);
    s["true_test_nll_mean"] = t.mean;
    s["true_test_nll_std"] = t.std;
  }
  write_json(result.directory / "summary.json", s);
  return result;
}

EvaluateResult cmd_evaluate(const fs::path& checkpoint, const fs::path& dataset,
                            const std::optional<std::vector<std::size_t>>& indices,
                            std::size_t max_seq_len) {
  LoadedCheckpoint ck = load_checkpoint(checkpoint);
  if (!ck.model) throw ValidationError("evaluate: checkpoint holds no trained model");
  const Dataset data = load_dataset(dataset);
  std::vector<std::size_t> idx;
  if (indices) {
    idx = *indices;
  } else {
    for (std::size_t i = 0; i < data.sequences.size(); ++i) idx.push_back(i);
  }
  const std::vector<EventSequence> seqs = select(data, idx, max_seq_len);
  EvaluateResult r;
  r.model = evaluate_nll(*ck.model, seqs, max_seq_len);
  if (data.header)
    if (auto truth = TrueModel::from_header(*data.header)) r.truth = truth->nll(seqs);
  return r;
}

std::size_t cmd_intensity_curve(const IntensityRequest& req) {
  CheckpointIntensity source = intensity_from_checkpoint(load_checkpoint(req.checkpoint));
  const Dataset data = load_dataset(req.dataset);
  const EventSequence& seq = sequence_at(data, req.sequence);
  std::optional<HawkesParams> truth;
  if (data.header)
    if (auto tm = TrueModel::from_header(*data.header)) truth = tm->hawkes_params();
  const IntensityCurve curve = intensity_curve(*source.source, seq, req.step, truth);
  std::ofstream out = open_out(req.out_csv);
  write_intensity_csv(curve, out);
  return curve.t.size();
}

void cmd_density_curve(const DensityRequest& req) {
  LoadedCheckpoint ck = load_checkpoint(req.checkpoint);
  if (!ck.model) throw ValidationError("density-curve: checkpoint holds no trained model");
  const Dataset data = load_dataset(req.dataset);
  std::optional<TrueModel> truth;
  if (data.header) truth = TrueModel::from_header(*data.header);
  const DensityCurve curve = density_curve(*ck.model, sequence_at(data, req.sequence), req.elapsed,
                                           req.tau_max, req.points, truth);
  std::ofstream out = open_out(req.out_csv);
  write_density_csv(curve, out);
}

FinalQuartile final_quartile(const std::vector<EpochRecord>& epochs) {
  if (epochs.empty()) throw ValidationError("final_quartile: no epochs");
  const std::size_t start = epochs.size() - std::max<std::size_t>(1, epochs.size() / 4);
  FinalQuartile q{0.0, 0.0};
  for (std::size_t i = start; i < epochs.size(); ++i) {
    q.mean_abs_u += epochs[i].mean_abs_u;
    q.mean_abs_v += epochs[i].mean_abs_v;
  }
  const double n = static_cast<double>(epochs.size() - start);
  q.mean_abs_u /= n;
  q.mean_abs_v /= n;
  return q;
}

AblationResult cmd_ablation(const fs::path& dataset, const ModelConfig& model, const RunConfig& run,
                            const fs::path& out) {
  const Dataset data = load_dataset(dataset);
  const std::vector<SplitManifest> splits =
      make_splits(data.sequences.size(), SplitConfig{1, run.seed});
  AblationResult result;
  fs::create_directories(out);
  for (Fusion fusion : {Fusion::Add, Fusion::Product}) {
    ModelConfig cfg = model;
    cfg.kind = ModelKind::Cufun;
    cfg.fusion = fusion;
    std::unique_ptr<Model> m = make_model(cfg);
    m->initialize(init_seed(run.seed, 0));
    RunResult r = train(*m, data, splits[0], run);
    std::ofstream csv = open_out(out / ("ablation_" + std::string(to_string(fusion)) + ".csv"));
    csv.precision(17);
    csv << "epoch,mean_abs_u,mean_abs_v,train_nll,validation_nll\n";
    for (const EpochRecord& e : r.epochs)
      csv << e.epoch << ',' << e.mean_abs_u << ',' << e.mean_abs_v << ',' << e.train_nll << ','
          << e.validation_nll << '\n';
    const FinalQuartile q = final_quartile(r.epochs);
    result.summary[std::string(to_string(fusion))] = {{"epochs", r.epochs.size()},
                                                      {"final_quartile_mean_abs_u", q.mean_abs_u},
                                                      {"final_quartile_mean_abs_v", q.mean_abs_v},
                                                      {"test_nll", r.test_nll}};
    (fusion == Fusion::Add ? result.add : result.product) = std::move(r);
  }
  result.summary["dataset"] = dataset_id(data, dataset);
  result.summary["run_config"] = run;
  result.summary["model_config"] = model;
  write_json(out / "ablation_summary.json", result.summary);
  return result;
}

CompareResult cmd_compare(const nlohmann::json& plan, const fs::path& plan_dir) {
  CompareResult result;
  if (!plan.is_object()) throw ValidationError("compare: plan must be a JSON object");
  const auto datasets = plan.value("datasets", std::vector<std::string>{});
  const auto models = plan.value("models", std::vector<std::string>{});
  fs::path runs_dir = plan.value("runs_dir", std::string("runs"));
  if (runs_dir.is_relative()) runs_dir = plan_dir / runs_dir;

  for (const std::string& ds_entry : datasets) {
    fs::path ds_path = ds_entry;
    if (ds_path.is_relative()) ds_path = plan_dir / ds_path;
    std::string ds_name = ds_path.stem().string();
    if (fs::exists(ds_path)) {
      const Dataset data = load_dataset(ds_path);
      ds_name = dataset_id(data, ds_path);
    }
    std::optional<CompareRow> truth;
    for (const std::string& model : models) {
      const fs::path summary_path = runs_dir / ds_name / model / "summary.json";
      if (!fs::exists(summary_path)) {
        result.missing.push_back(ds_name + "/" + model);
        continue;
      }
      const nlohmann::json s = read_json(summary_path);
      result.rows.push_back({ds_name, model, s.at("test_nll_mean").get<double>(),
                             s.at("test_nll_std").get<double>(), s.at("repeats").size()});
      if (!truth && s.contains("true_test_nll_mean"))
        truth = CompareRow{ds_name, "true", s.at("true_test_nll_mean").get<double>(),
                           s.at("true_test_nll_std").get<double>(), s.at("repeats").size()};
    }
    if (truth) result.rows.push_back(*truth);
  }
  return result;
}

void write_compare_csv(const CompareResult& result, std::ostream& out) {
  out.precision(17);
  out << "dataset,model,nll_mean,nll_std,repeats\n";
  for (const CompareRow& r : result.rows)
    out << r.dataset << ',' << r.model << ',' << r.mean << ',' << r.std << ',' << r.repeats << '\n';
}

void print_compare_table(const CompareResult& result, std::ostream& out) {
  out << std::left << std::setw(14) << "dataset" << std::setw(12) << "model" << "test NLL\n";
  for (const CompareRow& r : result.rows) {
    std::ostringstream v;
    v << std::fixed << std::setprecision(3) << r.mean << " +/- " << r.std;
    out << std::left << std::setw(14) << r.dataset << std::setw(12) << r.model << v.str() << '\n';
  }
  for (const std::string& m : result.missing) out << "missing run: " << m << '\n';
}

}  // namespace cufun
