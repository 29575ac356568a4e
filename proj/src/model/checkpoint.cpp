#include "cufun/model/checkpoint.hpp"

#include <fstream>

#include "cufun/errors.hpp"

namespace cufun {
namespace {

const char* constraint_name(ad::Constraint c) {
  switch (c) {
    case ad::Constraint::Free: return "free";
    case ad::Constraint::ReflectNonNegative: return "reflect_nonnegative";
    case ad::Constraint::ClampNonNegative: return "clamp_nonnegative";
  }
  return "?";
}

nlohmann::json header() { return {{"format", kCheckpointFormat}, {"version", 1}}; }

}  // namespace

nlohmann::json checkpoint_json(const Model& model) {
  nlohmann::json doc = header();
  doc["model"] = model.config();
  nlohmann::json segs = nlohmann::json::array();
  for (const ad::Segment& s : model.params().segments()) {
    auto v = model.params().view(s);
    segs.push_back({{"name", s.name},
                    {"rows", s.rows},
                    {"cols", s.cols},
                    {"constraint", constraint_name(s.constraint)},
                    {"values", std::vector<double>(v.begin(), v.end())}});
  }
  doc["segments"] = std::move(segs);
  return doc;
}

nlohmann::json true_hawkes_checkpoint_json(const HawkesParams& params) {
  nlohmann::json doc = header();
  doc["true_model"] = {
      {"process", "hawkes"}, {"mu", params.mu}, {"alphas", params.alphas}, {"betas", params.betas}};
  return doc;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write checkpoint " + path.string());
  out << checkpoint_json(model).dump() << '\n';
}

LoadedCheckpoint checkpoint_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("format", std::string()) != kCheckpointFormat)
      throw ValidationError("not a checkpoint document");
    LoadedCheckpoint out;
    if (doc.contains("true_model")) {
      const nlohmann::json& t = doc.at("true_model");
      if (t.value("process", std::string()) != "hawkes")
        throw ValidationError("checkpoint: only hawkes true models are supported");
      HawkesParams p;
      p.mu = t.at("mu").get<double>();
      p.alphas = t.at("alphas").get<std::vector<double>>();
      p.betas = t.at("betas").get<std::vector<double>>();
      p.validate();
      out.hawkes = std::move(p);
      return out;
    }
    ModelConfig config = doc.at("model").get<ModelConfig>();
    out.model = make_model(config);
    ad::ParamVector& params = out.model->params();
    const nlohmann::json& segs = doc.at("segments");
    if (segs.size() != params.segments().size())
      throw ValidationError("checkpoint: segment count mismatch");
    for (const nlohmann::json& s : segs) {
      const std::string name = s.at("name").get<std::string>();
      if (!params.contains(name)) throw ValidationError("checkpoint: unknown segment " + name);
      const ad::Segment& seg = params.segment(name);
      if (s.at("rows").get<std::size_t>() != seg.rows || s.at("cols").get<std::size_t>() != seg.cols)
        throw ValidationError("checkpoint: shape mismatch in " + name);
      const auto values = s.at("values").get<std::vector<double>>();
      if (values.size() != seg.size()) throw ValidationError("checkpoint: size mismatch in " + name);
      std::copy(values.begin(), values.end(), params.view(seg).begin());
    }
    if (!out.model->constraints_hold())
      throw ValidationError("checkpoint: sign-constrained weight is negative");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint: ") + e.what());
  }
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(doc);
}

}  // namespace cufun
