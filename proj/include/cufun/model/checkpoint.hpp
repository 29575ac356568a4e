#pragma once

// Checkpoints are JSON documents:
//   {"format":"cufun-checkpoint","version":1,
//    "model":{"kind":"cufun","hidden":64,...},
//    "segments":[{"name":"encoder.W_h","rows":64,"cols":64,
//                 "constraint":"free","values":[...row-major...]}, ...]}
// A checkpoint may instead carry {"true_model":{"process":"hawkes",...}} to plug
// the generating process into the same curve exporters.

#include <filesystem>
#include <memory>
#include <optional>

#include "json.hpp"
#include "cufun/model/model.hpp"
#include "cufun/synthgen/hawkes.hpp"

namespace cufun {

inline constexpr const char* kCheckpointFormat = "cufun-checkpoint";

nlohmann::json checkpoint_json(const Model& model);
void save_checkpoint(const Model& model, const std::filesystem::path& path);
nlohmann::json true_hawkes_checkpoint_json(const HawkesParams& params);

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;          // set for trained models
  std::optional<HawkesParams> hawkes;    // set for true-model checkpoints
};

// ValidationError on malformed documents or layout mismatches.
LoadedCheckpoint checkpoint_from_json(const nlohmann::json& doc);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cufun
