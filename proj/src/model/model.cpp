#include "cufun/model/model.hpp"

#include <cmath>
#include <stdexcept>

#include "cufun/errors.hpp"
#include "cufun/model/baselines.hpp"
#include "cufun/model/cufun_model.hpp"
#include "cufun/synthgen/rng.hpp"

namespace cufun {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Cufun: return "cufun";
    case ModelKind::FullyNN: return "fullynn";
    case ModelKind::Rmtpp: return "rmtpp";
    case ModelKind::Exp: return "exp";
    case ModelKind::Const: return "const";
  }
  return "?";
}

std::string_view to_string(Fusion fusion) {
  return fusion == Fusion::Product ? "product" : "add";
}

ModelKind parse_model_kind(std::string_view name) {
  for (ModelKind k : {ModelKind::Cufun, ModelKind::FullyNN, ModelKind::Rmtpp, ModelKind::Exp,
                      ModelKind::Const})
    if (to_string(k) == name) return k;
  throw ValidationError("unknown model '" + std::string(name) +
                        "' (expected cufun, fullynn, rmtpp, exp or const)");
}

Fusion parse_fusion(std::string_view name) {
  if (name == "product") return Fusion::Product;
  if (name == "add") return Fusion::Add;
  throw ValidationError("unknown fusion '" + std::string(name) + "' (expected product or add)");
}

void ModelConfig::validate() const {
  if (encoder.hidden == 0 || width == 0) throw ValidationError("model: widths must be positive");
  if (trapezoid_points < 2) throw ValidationError("model: trapezoid_points must be >= 2");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"kind", to_string(c.kind)},
       {"hidden", c.encoder.hidden},
       {"feature", c.encoder.feature == Feature::LogInterval ? "log" : "raw"},
       {"width", c.width},
       {"layers", c.layers},
       {"fusion", to_string(c.fusion)},
       {"trapezoid_points", c.trapezoid_points}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.kind = parse_model_kind(j.at("kind").get<std::string>());
  c.encoder.hidden = j.value("hidden", c.encoder.hidden);
  c.encoder.feature =
      j.value("feature", std::string("log")) == "raw" ? Feature::RawInterval : Feature::LogInterval;
  c.width = j.value("width", c.width);
  c.layers = j.value("layers", c.layers);
  c.fusion = parse_fusion(j.value("fusion", std::string("product")));
  c.trapezoid_points = j.value("trapezoid_points", c.trapezoid_points);
}

Model::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  add_encoder_params(params_, config_.encoder);
}

void Model::set_params(const ad::ParamVector& params) {
  if (!params.same_layout(params_)) throw ValidationError("parameter layout mismatch");
  params_ = params;
}

void Model::initialize(std::uint64_t seed) {
  Rng rng(seed, /*stream=*/0xC0FFEE);
  const std::size_t h = config_.encoder.hidden;
  const double sd_h = 1.0 / std::sqrt(static_cast<double>(h));
  for (double& w : params_.view(kEncoderWh)) w = sd_h * rng.normal();
  for (double& w : params_.view(kEncoderWx)) w = rng.normal();
  for (double& b : params_.view(kEncoderB)) b = 0.01 * rng.normal();
  init_head(rng);
  project(params_);
}

BatchOutput Model::log_density(ad::Tape& tape, std::span<const EventSequence* const> batch) const {
  EncodedBatch enc = encode_batch(tape, batch, config_.encoder);
  HeadOutput out = head(tape, enc.h, enc.tau, false);
  BatchOutput b;
  b.log_density = out.log_density;
  b.n_events = enc.n_events();
  b.offsets = std::move(enc.offsets);
  b.mean_abs_u = out.mean_abs_u;
  b.mean_abs_v = out.mean_abs_v;
  return b;
}

void project_positive(ad::ParamVector& params) {
  for (const ad::Segment& s : params.segments()) {
    if (s.constraint == ad::Constraint::Free) continue;
    for (double& w : params.view(s)) {
      if (s.constraint == ad::Constraint::ReflectNonNegative)
        w = std::abs(w);
      else if (w < 0.0)
        w = 0.0;
    }
  }
}

void Model::project(ad::ParamVector& params) const { project_positive(params); }

bool Model::constraints_hold() const {
  for (const ad::Segment& s : params_.segments()) {
    if (s.constraint == ad::Constraint::Free) continue;
    for (double w : params_.view(s))
      if (!(w >= 0.0)) return false;
  }
  return true;
}

Curves Model::curves(std::span<const double> taus, std::span<const double> h) const {
  if (h.size() != config_.encoder.hidden) throw std::invalid_argument("curves: bad h width");
  const std::size_t n = taus.size();
  Curves c;
  if (n == 0) return c;
  ad::Tape tape(params_);
  ad::Matrix hm(n, h.size());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < h.size(); ++k) hm(r, k) = h[k];
  HeadOutput out = head(tape, tape.constant(std::move(hm)), ad::Matrix::column(taus), true);
  const ad::Matrix& cdf = out.cdf.value();
  c.cdf.assign(cdf.values().begin(), cdf.values().end());
  c.density.resize(n);
  c.survivor.resize(n);
  c.intensity.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.density[i] = out.density.valid() ? out.density.value()[i]
                                       : std::exp(out.log_density.value()[i]);
    c.survivor[i] = 1.0 - c.cdf[i];
    c.intensity[i] = c.survivor[i] < kSurvivorFloor ? std::numeric_limits<double>::quiet_NaN()
                                                    : c.density[i] / c.survivor[i];
  }
  return c;
}

std::vector<HiddenState> Model::encode(const EventSequence& seq) const {
  return encode_sequence(seq, EncoderParams::view(params_), config_.encoder.feature);
}

std::unique_ptr<Model> make_model(const ModelConfig& config) {
  switch (config.kind) {
    case ModelKind::Cufun: return std::make_unique<CufunModel>(config);
    case ModelKind::FullyNN: return std::make_unique<FullyNNModel>(config);
    case ModelKind::Rmtpp: return std::make_unique<RmtppModel>(config);
    case ModelKind::Exp: return std::make_unique<ExpModel>(config);
    case ModelKind::Const: return std::make_unique<ConstModel>(config);
  }
  throw std::logic_error("make_model: unhandled kind");
}

}  // namespace cufun
