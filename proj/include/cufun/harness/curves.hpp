#pragma once

// Plot-ready curve exports.
//
// Intensity curves follow one sequence on a uniform time grid. At grid time t
// the history is every event with t_i < t, h encodes those events and the
// model is queried at tau = t - t_last (t_last = 0 before the first event).

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "cufun/model/checkpoint.hpp"
#include "cufun/model/model.hpp"
#include "cufun/model/true_model.hpp"
#include "cufun/synthgen/hawkes.hpp"

namespace cufun {

// Conditional intensity of some model along a sequence.
class IntensitySource {
 public:
  virtual ~IntensitySource() = default;
  // `grid` must be nondecreasing. NaN marks points where the model saturates.
  virtual std::vector<double> intensity(const EventSequence& seq,
                                        std::span<const double> grid) const = 0;
};

class ModelIntensity : public IntensitySource {
 public:
  explicit ModelIntensity(const Model& model) : model_(&model) {}
  std::vector<double> intensity(const EventSequence& seq,
                                std::span<const double> grid) const override;

 private:
  const Model* model_;
};

class HawkesIntensity : public IntensitySource {
 public:
  explicit HawkesIntensity(HawkesParams params) : params_(std::move(params)) {}
  std::vector<double> intensity(const EventSequence& seq,
                                std::span<const double> grid) const override;

 private:
  HawkesParams params_;
};

// Owns whatever a checkpoint holds and exposes it as an intensity.
struct CheckpointIntensity {
  LoadedCheckpoint checkpoint;
  std::unique_ptr<IntensitySource> source;
};
CheckpointIntensity intensity_from_checkpoint(LoadedCheckpoint checkpoint);

// Conditioning states h_0 .. h_N, one more than encode() returns.
std::vector<HiddenState> encode_all_prefixes(const Model& model, const EventSequence& seq);

// Points 0, step, 2 step, ... up to and including `end`.
std::vector<double> uniform_grid(double end, double step);

struct IntensityCurve {
  std::vector<double> t;
  std::vector<double> lambda_model;
  std::optional<std::vector<double>> lambda_true;
  std::size_t saturated = 0;  // grid points where lambda_model is NaN
};

IntensityCurve intensity_curve(const IntensitySource& model, const EventSequence& seq,
                               double step, const std::optional<HawkesParams>& truth);

// CSV columns: t,lambda_true,lambda_model (lambda_true only when known).
void write_intensity_csv(const IntensityCurve& curve, std::ostream& out);

// Mean |lambda_model - lambda_true| over the points where both are finite.
double mean_absolute_deviation(const IntensityCurve& curve);

struct DensityCurve {
  std::vector<double> tau;
  Curves model;
  std::optional<std::vector<double>> density_true;
};

// Next-interval functions after the first `elapsed` events of `seq`.
DensityCurve density_curve(const Model& model, const EventSequence& seq, std::size_t elapsed,
                           double tau_max, std::size_t points,
                           const std::optional<TrueModel>& truth);

// CSV columns: tau,cdf,density,survivor,intensity[,density_true]
void write_density_csv(const DensityCurve& curve, std::ostream& out);

}  // namespace cufun
