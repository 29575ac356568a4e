#pragma once

// Dataset files.
//
// JSONL, UTF-8, one JSON object per line:
//   line 1 (optional header):
//     {"spec_version":"1","generator":"hawkes1","params":{...},"seed":7}
//   every further line, one sequence:
//     {"arrival_times":[0.31,1.2,...],"window_end":12.5,
//      "origin":1534.2,"history":[-3.1,-0.4,0.0]}
// "window_end", "origin" and "history" are optional (defaults: last arrival,
// 0, empty). Numbers are written in shortest round-trip form, so a write/read
// cycle reproduces every double exactly.
//
// The CSV shim reads one sequence per line, arrival times separated by commas
// and/or whitespace; blank lines and lines starting with '#' are skipped.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "cufun/data_io/dataset.hpp"

namespace cufun {

void write_dataset(const Dataset& dataset, std::ostream& out);
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Throws ValidationError with the offending line number or sequence index.
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);

Dataset read_csv_sequences(std::istream& in);
Dataset read_csv_sequences(const std::filesystem::path& path);

// Dispatches on extension: .csv/.txt use the shim, anything else JSONL.
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace cufun
