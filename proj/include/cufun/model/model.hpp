#pragma once

// Common contract for every temporal point process model in the library: an
// RNN history encoder (shared code, per-model weights) followed by a head that
// maps (tau, h) to the log density of the next inter-event interval.

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "cufun/autodiff/param_vector.hpp"
#include "cufun/autodiff/tape.hpp"
#include "cufun/encoder/encoder.hpp"
#include "cufun/synthgen/event_sequence.hpp"

namespace cufun {

class Rng;

enum class ModelKind { Cufun, FullyNN, Rmtpp, Exp, Const };
enum class Fusion { Product, Add };

std::string_view to_string(ModelKind kind);
std::string_view to_string(Fusion fusion);
ModelKind parse_model_kind(std::string_view name);  // ValidationError on unknown names
Fusion parse_fusion(std::string_view name);

struct ModelConfig {
  ModelKind kind = ModelKind::Cufun;
  EncoderConfig encoder;
  std::size_t width = 64;   // units per MNN layer
  std::size_t layers = 1;   // tanh hidden layers after the fusion layer
  Fusion fusion = Fusion::Product;
  std::size_t trapezoid_points = 64;  // Exp baseline compensator grid

  void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// Floor applied to densities before taking logs.
inline constexpr double kDensityFloor = 1e-12;
// Survivor values below this make the intensity p / S unreportable.
inline constexpr double kSurvivorFloor = 1e-12;

struct HeadOutput {
  ad::Var log_density;  // n x 1
  ad::Var density;      // n x 1, when the head has it directly (else invalid)
  ad::Var cdf;          // n x 1, only when requested
  double mean_abs_u = std::numeric_limits<double>::quiet_NaN();
  double mean_abs_v = std::numeric_limits<double>::quiet_NaN();
};

struct BatchOutput {
  ad::Var log_density;  // n_events x 1
  std::size_t n_events = 0;
  std::vector<std::size_t> offsets;
  double mean_abs_u = std::numeric_limits<double>::quiet_NaN();
  double mean_abs_v = std::numeric_limits<double>::quiet_NaN();
};

// Per-tau evaluation of every derived function at one conditioning state.
struct Curves {
  std::vector<double> cdf;
  std::vector<double> density;
  std::vector<double> survivor;
  std::vector<double> intensity;  // NaN where survivor < kSurvivorFloor
};

class Model {
 public:
  virtual ~Model() = default;

  const ModelConfig& config() const noexcept { return config_; }
  ModelKind kind() const noexcept { return config_.kind; }
  const ad::ParamVector& params() const noexcept { return params_; }
  ad::ParamVector& params() noexcept { return params_; }
  void set_params(const ad::ParamVector& params);

  // Random initialisation of encoder and head, deterministic in `seed`.
  void initialize(std::uint64_t seed);

  // Records log p(tau_i | h_{i-1}) for every event of the batch.
  BatchOutput log_density(ad::Tape& tape, std::span<const EventSequence* const> batch) const;

  virtual HeadOutput head(ad::Tape& tape, ad::Var h, const ad::Matrix& tau,
                          bool want_cdf) const = 0;

  // Pulls sign-constrained segments back into their feasible set.
  void project(ad::ParamVector& params) const;
  bool constraints_hold() const;

  Curves curves(std::span<const double> taus, std::span<const double> h) const;

  // h_0 .. h_{N-1} for one sequence (plain evaluation, no tape).
  std::vector<HiddenState> encode(const EventSequence& seq) const;

 protected:
  explicit Model(ModelConfig config);
  virtual void init_head(Rng& rng) = 0;

  ModelConfig config_;
  ad::ParamVector params_;
};

// Parameters are zero until initialize() or set_params().
std::unique_ptr<Model> make_model(const ModelConfig& config);

// w <- |w| for reflect-constrained segments, w <- max(w, 0) for clamped ones.
void project_positive(ad::ParamVector& params);

}  // namespace cufun
