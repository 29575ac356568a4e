#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "cufun/synthgen/event_sequence.hpp"

namespace cufun {

inline constexpr const char* kDatasetFormatVersion = "1";

// First line of a dataset file: provenance of the sequences that follow.
struct DatasetHeader {
  std::string spec_version = kDatasetFormatVersion;
  std::string generator;     // e.g. "hawkes1"; "external" for user data
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;

  friend bool operator==(const DatasetHeader&, const DatasetHeader&) = default;
};

struct Dataset {
  std::optional<DatasetHeader> header;
  std::vector<EventSequence> sequences;

  std::size_t total_events() const;
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace cufun
