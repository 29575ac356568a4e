// cufun: command-line front end for dataset generation, training and export.
//
// Exit codes: 0 success, 2 validation error, 3 training abort, 1 anything else.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "cufun/errors.hpp"
#include "cufun/harness/commands.hpp"
#include "cufun/simd/kernels.hpp"

namespace {

using namespace cufun;

constexpr int kExitValidation = 2;
constexpr int kExitAbort = 3;

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  std::string fusion = "product";
  std::optional<std::size_t> repeats;
  std::optional<std::size_t> max_epochs;
  std::size_t hidden = 64;
  std::size_t width = 64;
  std::size_t layers = 1;
};

void add_run_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--config", c.config, "JSON file with run settings")->check(CLI::ExistingFile);
  cmd->add_option("--repeats", c.repeats, "Number of split repeats");
  cmd->add_option("--max-epochs", c.max_epochs, "Epoch cap");
  cmd->add_option("--hidden", c.hidden, "Encoder width");
  cmd->add_option("--width", c.width, "MNN layer width");
  cmd->add_option("--layers", c.layers, "Hidden tanh layers");
}

RunConfig resolve_run(const Common& c) {
  RunConfig run;
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(c.config + ": " + e.what());
    }
    run = j.get<RunConfig>();
  }
  if (c.seed) run.seed = *c.seed;
  if (c.repeats) run.repeats = *c.repeats;
  if (c.max_epochs) run.max_epochs = *c.max_epochs;
  run.validate();
  return run;
}

ModelConfig resolve_model(const std::string& kind, const Common& c) {
  ModelConfig m;
  m.kind = parse_model_kind(kind);
  m.encoder.hidden = c.hidden;
  m.width = c.width;
  m.layers = c.layers;
  m.fusion = parse_fusion(c.fusion);
  m.validate();
  return m;
}

fs::path out_dir(const Common& c, const char* fallback) { return c.out.empty() ? fallback : c.out; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal point process toolkit: monotone CDF networks and baselines"};
  app.require_subcommand(1);
  Common c;

  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset as JSONL");
  std::string gen_name;
  SyntheticOptions gen_opt;
  gen->add_option("name", gen_name, "hawkes1 | hawkes2 | s-renewal | ns-renewal | poisson")->required();
  gen->add_option("--seed", c.seed, "Random seed");
  gen->add_option("--out", c.out, "Output directory (default: data)");
  gen->add_option("--n-sequences", gen_opt.n_sequences, "Number of sequences");
  gen->add_option("--seq-len", gen_opt.seq_len, "Events per sequence");
  gen->add_option("--poisson-rate", gen_opt.poisson_rate, "Rate of the poisson dataset");

  auto* tr = app.add_subcommand("train", "Train a model on every split repeat");
  std::string tr_model, tr_data;
  std::size_t workers = 1;
  bool no_checkpoints = false;
  tr->add_option("model", tr_model, "cufun | fullynn | rmtpp | exp | const")->required();
  tr->add_option("dataset", tr_data, "Dataset file (.jsonl, or .csv/.txt)")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", c.out, "Runs directory (default: runs)");
  tr->add_option("--fusion,--ablation-fusion", c.fusion, "product | add");
  tr->add_option("--workers", workers, "Repeats trained concurrently");
  tr->add_flag("--no-checkpoints", no_checkpoints, "Skip writing checkpoints");
  add_run_flags(tr, c);

  auto* ev = app.add_subcommand("evaluate", "Per-event NLL of a checkpoint on a dataset");
  std::string ev_ck, ev_data, ev_splits;
  std::size_t ev_repeat = 0, ev_max_len = 128;
  ev->add_option("checkpoint", ev_ck)->required()->check(CLI::ExistingFile);
  ev->add_option("dataset", ev_data)->required()->check(CLI::ExistingFile);
  ev->add_option("--splits", ev_splits, "splits.json; scores that repeat's test set")->check(CLI::ExistingFile);
  ev->add_option("--repeat", ev_repeat, "Repeat index within --splits");
  ev->add_option("--max-seq-len", ev_max_len, "Truncation length");

  auto* ic = app.add_subcommand("intensity-curve", "Export lambda(t) along one sequence as CSV");
  IntensityRequest ic_req;
  std::string ic_ck, ic_data;
  ic->add_option("checkpoint", ic_ck)->required()->check(CLI::ExistingFile);
  ic->add_option("dataset", ic_data)->required()->check(CLI::ExistingFile);
  ic->add_option("--sequence", ic_req.sequence, "Sequence index");
  ic->add_option("--step", ic_req.step, "Grid step");
  ic->add_option("--out", c.out, "Output directory (default: curves)");

  auto* dc = app.add_subcommand("density-curve", "Export next-interval CDF/density/intensity as CSV");
  DensityRequest dc_req;
  std::string dc_ck, dc_data;
  dc->add_option("checkpoint", dc_ck)->required()->check(CLI::ExistingFile);
  dc->add_option("dataset", dc_data)->required()->check(CLI::ExistingFile);
  dc->add_option("--sequence", dc_req.sequence, "Sequence index");
  dc->add_option("--event", dc_req.elapsed, "Number of elapsed events conditioning the curve");
  dc->add_option("--tau-max", dc_req.tau_max, "Largest interval on the grid");
  dc->add_option("--points", dc_req.points, "Grid points");
  dc->add_option("--out", c.out, "Output directory (default: curves)");

  auto* ab = app.add_subcommand("ablation", "Train additive and product fusion, export branch magnitudes");
  std::string ab_data;
  ab->add_option("dataset", ab_data)->required()->check(CLI::ExistingFile);
  ab->add_option("--out", c.out, "Output directory (default: ablation)");
  add_run_flags(ab, c);

  auto* cmp = app.add_subcommand("compare", "NLL table for a plan of finished runs");
  std::string plan_path;
  cmp->add_option("plan", plan_path, "Plan JSON")->required()->check(CLI::ExistingFile);
  cmp->add_option("--out", c.out, "Directory for compare.csv (default: next to the plan)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*gen) {
      gen_opt.seed = c.seed.value_or(0);
      std::cout << cmd_generate(gen_name, gen_opt, out_dir(c, "data")).string() << '\n';
    } else if (*tr) {
      TrainRequest req;
      req.model = resolve_model(tr_model, c);
      req.dataset = tr_data;
      req.run = resolve_run(c);
      req.out = out_dir(c, "runs");
      req.workers = workers;
      req.write_checkpoints = !no_checkpoints;
      req.log = [](const std::string& line) { std::cerr << line << '\n'; };
      const TrainSummary s = cmd_train(req);
      std::cout << s.summary["dataset"].get<std::string>() << ' ' << s.summary["model"].get<std::string>()
                << " test NLL " << s.summary["test_nll_mean"].get<double>() << " +/- "
                << s.summary["test_nll_std"].get<double>() << '\n'
                << (s.directory / "summary.json").string() << '\n';
    } else if (*ev) {
      std::optional<std::vector<std::size_t>> idx;
      if (!ev_splits.empty()) {
        std::ifstream in(ev_splits);
        const auto splits = nlohmann::json::parse(in).get<std::vector<SplitManifest>>();
        if (ev_repeat >= splits.size()) throw ValidationError("--repeat out of range");
        idx = splits[ev_repeat].test;
      }
      const EvaluateResult r = cmd_evaluate(ev_ck, ev_data, idx, ev_max_len);
      nlohmann::json j = {{"nll_per_event", r.model.per_event},
                          {"nll_total", r.model.total},
                          {"events", r.model.n_events}};
      if (r.truth) j["true_nll_per_event"] = r.truth->per_event;
      std::cout << j.dump(2) << '\n';
    } else if (*ic) {
      ic_req.checkpoint = ic_ck;
      ic_req.dataset = ic_data;
      ic_req.out_csv = out_dir(c, "curves") / ("intensity_" + std::to_string(ic_req.sequence) + ".csv");
      const std::size_t n = cmd_intensity_curve(ic_req);
      std::cout << ic_req.out_csv.string() << " (" << n << " points)\n";
    } else if (*dc) {
      dc_req.checkpoint = dc_ck;
      dc_req.dataset = dc_data;
      dc_req.out_csv = out_dir(c, "curves") / ("density_" + std::to_string(dc_req.sequence) + "_" +
                                               std::to_string(dc_req.elapsed) + ".csv");
      cmd_density_curve(dc_req);
      std::cout << dc_req.out_csv.string() << '\n';
    } else if (*ab) {
      const ModelConfig model = resolve_model("cufun", c);
      const AblationResult r = cmd_ablation(ab_data, model, resolve_run(c), out_dir(c, "ablation"));
      std::cout << r.summary.dump(2) << '\n';
    } else if (*cmp) {
      std::ifstream in(plan_path);
      nlohmann::json plan;
      try {
        plan = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError(plan_path + ": " + e.what());
      }
      const fs::path plan_dir = fs::path(plan_path).parent_path();
      const CompareResult r = cmd_compare(plan, plan_dir);
      const fs::path dir = c.out.empty() ? plan_dir : fs::path(c.out);
      if (!dir.empty()) fs::create_directories(dir);
      std::ofstream csv(dir / "compare.csv");
      write_compare_csv(r, csv);
      print_compare_table(r, std::cout);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const TrainingAbort& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
