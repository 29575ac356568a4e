#include "cufun/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <sstream>

#include "cufun/errors.hpp"
#include "cufun/simd/kernels.hpp"
#include "cufun/synthgen/rng.hpp"
#include "cufun/training/adam.hpp"

namespace cufun {
namespace {

std::vector<EventSequence> truncated(const Dataset& data, std::span<const std::size_t> idx,
                                     std::size_t max_len) {
  std::vector<EventSequence> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) {
    if (i >= data.sequences.size()) throw ValidationError("split index out of range");
    if (!data.sequences[i].empty()) out.push_back(data.sequences[i].truncated(max_len));
  }
  return out;
}

std::string abort_dump(const std::string& reason, std::size_t epoch, std::size_t batch,
                       std::span<const EventSequence* const> seqs, const Model& model) {
  nlohmann::json d;
  d["reason"] = reason;
  d["epoch"] = epoch;
  d["batch"] = batch;
  d["model"] = model.config();
  d["param_squared_norm"] = model.params().squared_norm();
  nlohmann::json s = nlohmann::json::array();
  for (const EventSequence* seq : seqs)
    s.push_back({{"arrival_times", seq->arrival_times}, {"origin", seq->origin}});
  d["sequences"] = std::move(s);
  return d.dump();
}

}  // namespace

void RunConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (max_epochs == 0) throw ValidationError("max_epochs must be positive");
  if (patience == 0) throw ValidationError("patience must be positive");
  if (max_seq_len < 2) throw ValidationError("max_seq_len must be >= 2");
  if (!(l2 >= 0.0)) throw ValidationError("l2 must be nonnegative");
  if (repeats == 0) throw ValidationError("repeats must be positive");
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
       {"max_epochs", c.max_epochs},       {"patience", c.patience},
       {"max_seq_len", c.max_seq_len},     {"l2", c.l2},
       {"seed", c.seed},                   {"repeats", c.repeats}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  static const std::set<std::string> keys{"learning_rate", "batch_size", "max_epochs",
                                          "patience",      "max_seq_len", "l2",
                                          "seed",          "repeats"};
  if (!j.is_object()) throw ValidationError("run config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!keys.contains(k)) throw ValidationError("run config: unknown key '" + k + "'");
  try {
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
    c.l2 = j.value("l2", c.l2);
    c.seed = j.value("seed", c.seed);
    c.repeats = j.value("repeats", c.repeats);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("run config: ") + e.what());
  }
  c.validate();
}

NllResult evaluate_nll(const Model& model, std::span<const EventSequence> sequences,
                       std::size_t max_seq_len, std::size_t batch_size) {
  std::vector<EventSequence> seqs;
  seqs.reserve(sequences.size());
  for (const EventSequence& s : sequences)
    if (!s.empty()) seqs.push_back(s.truncated(max_seq_len));
  NllResult r;
  for (std::size_t start = 0; start < seqs.size(); start += batch_size) {
    const std::size_t end = std::min(seqs.size(), start + batch_size);
    std::vector<const EventSequence*> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(&seqs[i]);
    ad::Tape tape(model.params());
    BatchOutput out = model.log_density(tape, batch);
    for (double lp : out.log_density.value().values()) r.total -= lp;
    r.n_events += out.n_events;
  }
  r.per_event = r.n_events ? r.total / static_cast<double>(r.n_events) : 0.0;
  return r;
}

std::uint64_t init_seed(std::uint64_t run_seed, std::size_t repeat_index) {
  return splitmix64(run_seed ^ splitmix64(0xA5A5 + repeat_index));
}

RunResult train(Model& model, const Dataset& data, const SplitManifest& split,
                const RunConfig& config, const TrainHooks& hooks) {
  config.validate();
  const std::vector<EventSequence> train_set = truncated(data, split.train, config.max_seq_len);
  const std::vector<EventSequence> val_set = truncated(data, split.validation, config.max_seq_len);
  const std::vector<EventSequence> test_set = truncated(data, split.test, config.max_seq_len);
  if (train_set.empty() || val_set.empty() || test_set.empty())
    throw ValidationError("train: every split needs at least one nonempty sequence");

  const auto scored = [&](const std::vector<EventSequence>& set, std::size_t epoch) {
    try {
      return evaluate_nll(model, set, config.max_seq_len);
    } catch (const NumericError& e) {
      throw TrainingAbort(std::string("training aborted: ") + e.what(),
                          abort_dump(e.what(), epoch, 0, {}, model));
    }
  };

  RunResult result;
  result.repeat_index = split.repeat_index;
  result.initial_validation_nll = scored(val_set, 0).per_event;
  result.best_validation_nll = result.initial_validation_nll;
  result.best_params = model.params();

  Adam adam(model.params(), AdamConfig{config.learning_rate});
  Rng order_rng(config.seed, 0x0BDE5 + split.repeat_index);
  std::vector<std::size_t> order(train_set.size());
  std::size_t since_best = 0;
  const auto& kernels = simd::active();

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0, u_sum = 0.0, v_sum = 0.0;
    std::size_t events = 0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += config.batch_size, ++b) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<const EventSequence*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train_set[order[i]]);

      ad::ParamVector grad;
      BatchOutput out;
      try {
        ad::Tape tape(model.params());
        out = model.log_density(tape, batch);
        ad::Var loss =
            tape.scale(tape.sum(out.log_density), -1.0 / static_cast<double>(out.n_events));
        tape.backward(loss);
        grad = tape.gradient();
      } catch (const NumericError& e) {
        throw TrainingAbort(std::string("training aborted: ") + e.what(),
                            abort_dump(e.what(), epoch, b, batch, model));
      }
      const double batch_nll = -kernels.sum(out.n_events, out.log_density.value().data());
      for (double g : grad.values())
        if (!std::isfinite(g))
          throw TrainingAbort("training aborted: non-finite gradient",
                              abort_dump("non-finite gradient", epoch, b, batch, model));

      if (hooks.freeze_gradients) {
        grad = grad.zeros_like();
      } else if (config.l2 > 0.0) {
        kernels.axpy(grad.size(), 2.0 * config.l2, model.params().values().data(),
                     grad.values().data());
      }
      adam.step(model.params(), grad);
      model.project(model.params());
      if (hooks.after_step) hooks.after_step(model);

      loss_sum += batch_nll;
      events += out.n_events;
      const double w = static_cast<double>(out.n_events);
      u_sum += w * out.mean_abs_u;
      v_sum += w * out.mean_abs_v;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_nll = loss_sum / static_cast<double>(events);
    rec.validation_nll = scored(val_set, epoch).per_event;
    rec.mean_abs_u = u_sum / static_cast<double>(events);
    rec.mean_abs_v = v_sum / static_cast<double>(events);
    if (!std::isfinite(rec.validation_nll))
      throw TrainingAbort("training aborted: validation NLL is not finite",
                          abort_dump("validation NLL not finite", epoch, 0, {}, model));
    result.epochs.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);

    if (rec.validation_nll < result.best_validation_nll) {
      result.best_validation_nll = rec.validation_nll;
      result.best_epoch = epoch;
      result.best_params = model.params();
      since_best = 0;
    } else if (++since_best > config.patience) {
      result.stopped_early = true;
      break;
    }
  }

  model.set_params(result.best_params);
  const NllResult test = scored(test_set, result.epochs.size());
  result.test_nll = test.per_event;
  result.test_events = test.n_events;
  return result;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return r;
}

void write_metrics_csv(const RunResult& run, std::ostream& out) {
  out << "epoch,split,nll,mean_abs_u,mean_abs_v\n";
  out.precision(17);
  for (const EpochRecord& e : run.epochs) {
    out << e.epoch << ",train," << e.train_nll << ',' << e.mean_abs_u << ',' << e.mean_abs_v
        << '\n';
    out << e.epoch << ",validation," << e.validation_nll << ',' << e.mean_abs_u << ','
        << e.mean_abs_v << '\n';
  }
}

}  // namespace cufun
