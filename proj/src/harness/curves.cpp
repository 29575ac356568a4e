#include "cufun/harness/curves.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "cufun/errors.hpp"

namespace cufun {
namespace {

void write_value(std::ostream& out, double v) {
  if (std::isnan(v))
    out << "nan";
  else
    out << v;
}

}  // namespace

std::vector<HiddenState> encode_all_prefixes(const Model& model, const EventSequence& seq) {
  const EncoderParams p = EncoderParams::view(model.params());
  const Feature feature = model.config().encoder.feature;
  std::vector<HiddenState> states;
  states.reserve(seq.size() + 1);
  states.emplace_back(p.hidden, 0.0);
  for (double tau : seq.intervals()) states.push_back(rnn_step(states.back(), featurize(tau, feature), p));
  return states;
}

std::vector<double> ModelIntensity::intensity(const EventSequence& seq,
                                              std::span<const double> grid) const {
  const std::vector<HiddenState> states = encode_all_prefixes(*model_, seq);
  std::vector<double> out(grid.size());
  std::size_t g = 0;
  std::size_t elapsed = 0;
  while (g < grid.size()) {
    while (elapsed < seq.size() && seq.arrival_times[elapsed] < grid[g]) ++elapsed;
    const double last = elapsed == 0 ? 0.0 : seq.arrival_times[elapsed - 1];
    // every grid point before the next event shares the same state
    const double next =
        elapsed < seq.size() ? seq.arrival_times[elapsed] : std::numeric_limits<double>::infinity();
    std::size_t end = g;
    std::vector<double> taus;
    while (end < grid.size() && grid[end] <= next) {
      taus.push_back(grid[end] - last);
      ++end;
    }
    const Curves c = model_->curves(taus, states[elapsed]);
    for (std::size_t i = 0; i < taus.size(); ++i) out[g + i] = c.intensity[i];
    g = end;
  }
  return out;
}

std::vector<double> HawkesIntensity::intensity(const EventSequence& seq,
                                               std::span<const double> grid) const {
  return hawkes_intensity_curve(std::vector<double>(grid.begin(), grid.end()), seq, params_);
}

CheckpointIntensity intensity_from_checkpoint(LoadedCheckpoint checkpoint) {
  CheckpointIntensity out;
  out.checkpoint = std::move(checkpoint);
  if (out.checkpoint.model)
    out.source = std::make_unique<ModelIntensity>(*out.checkpoint.model);
  else
    out.source = std::make_unique<HawkesIntensity>(*out.checkpoint.hawkes);
  return out;
}

std::vector<double> uniform_grid(double end, double step) {
  if (!(step > 0.0) || !(end >= 0.0)) throw ValidationError("grid: need step > 0 and end >= 0");
  const auto n = static_cast<std::size_t>(std::floor(end / step + 1e-9));
  std::vector<double> grid;
  grid.reserve(n + 2);
  for (std::size_t i = 0; i <= n; ++i) grid.push_back(static_cast<double>(i) * step);
  if (grid.back() < end) grid.push_back(end);
  return grid;
}

IntensityCurve intensity_curve(const IntensitySource& model, const EventSequence& seq,
                               double step, const std::optional<HawkesParams>& truth) {
  IntensityCurve c;
  c.t = uniform_grid(seq.window_end, step);
  c.lambda_model = model.intensity(seq, c.t);
  for (double v : c.lambda_model)
    if (std::isnan(v)) ++c.saturated;
  if (truth) c.lambda_true = HawkesIntensity(*truth).intensity(seq, c.t);
  return c;
}

void write_intensity_csv(const IntensityCurve& curve, std::ostream& out) {
  out.precision(17);
  out << (curve.lambda_true ? "t,lambda_true,lambda_model\n" : "t,lambda_model\n");
  for (std::size_t i = 0; i < curve.t.size(); ++i) {
    out << curve.t[i] << ',';
    if (curve.lambda_true) {
      write_value(out, (*curve.lambda_true)[i]);
      out << ',';
    }
    write_value(out, curve.lambda_model[i]);
    out << '\n';
  }
}

double mean_absolute_deviation(const IntensityCurve& curve) {
  if (!curve.lambda_true) throw ValidationError("mean_absolute_deviation: no true intensity");
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < curve.t.size(); ++i) {
    const double a = curve.lambda_model[i], b = (*curve.lambda_true)[i];
    if (!std::isfinite(a) || !std::isfinite(b)) continue;
    s += std::abs(a - b);
    ++n;
  }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

DensityCurve density_curve(const Model& model, const EventSequence& seq, std::size_t elapsed,
                           double tau_max, std::size_t points,
                           const std::optional<TrueModel>& truth) {
  if (elapsed > seq.size()) throw ValidationError("density curve: event index out of range");
  if (!(tau_max > 0.0) || points < 2) throw ValidationError("density curve: need tau_max > 0, points >= 2");
  DensityCurve c;
  for (std::size_t i = 1; i <= points; ++i)
    c.tau.push_back(tau_max * static_cast<double>(i) / static_cast<double>(points));
  const std::vector<HiddenState> states = encode_all_prefixes(model, seq);
  c.model = model.curves(c.tau, states[elapsed]);
  if (truth) c.density_true = truth->conditional_density(seq, elapsed, c.tau);
  return c;
}

void write_density_csv(const DensityCurve& curve, std::ostream& out) {
  out.precision(17);
  out << "tau,cdf,density,survivor,intensity" << (curve.density_true ? ",density_true\n" : "\n");
  for (std::size_t i = 0; i < curve.tau.size(); ++i) {
    out << curve.tau[i] << ',' << curve.model.cdf[i] << ',' << curve.model.density[i] << ','
        << curve.model.survivor[i] << ',';
    write_value(out, curve.model.intensity[i]);
    if (curve.density_true) out << ',' << (*curve.density_true)[i];
    out << '\n';
  }
}

}  // namespace cufun
