#include "cufun/data_io/dataset_io.hpp"

#include <fstream>
#include <sstream>

#include "cufun/errors.hpp"

namespace cufun {

std::size_t Dataset::total_events() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.size();
  return n;
}

void Dataset::validate() const {
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const std::string label = "sequence " + std::to_string(i);
    sequences[i].validate(label.c_str());
  }
}

namespace {

nlohmann::json header_json(const DatasetHeader& h) {
  return {{"spec_version", h.spec_version},
          {"generator", h.generator},
          {"params", h.params},
          {"seed", h.seed}};
}

nlohmann::json sequence_json(const EventSequence& s) {
  nlohmann::json j{{"arrival_times", s.arrival_times}, {"window_end", s.window_end}};
  if (s.origin != 0.0) j["origin"] = s.origin;
  if (!s.history.empty()) j["history"] = s.history;
  return j;
}

EventSequence parse_sequence(const nlohmann::json& j) {
  EventSequence s;
  j.at("arrival_times").get_to(s.arrival_times);
  s.window_end = s.arrival_times.empty() ? 0.0 : s.arrival_times.back();
  if (auto it = j.find("window_end"); it != j.end() && !it->is_null()) s.window_end = it->get<double>();
  if (auto it = j.find("origin"); it != j.end()) s.origin = it->get<double>();
  if (auto it = j.find("history"); it != j.end()) it->get_to(s.history);
  return s;
}

}  // namespace

void write_dataset(const Dataset& dataset, std::ostream& out) {
  if (dataset.header) out << header_json(*dataset.header).dump() << '\n';
  for (const auto& s : dataset.sequences) out << sequence_json(s).dump() << '\n';
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  write_dataset(dataset, out);
}

Dataset read_dataset(std::istream& in) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": malformed JSON (" + e.what() +
                            ")");
    }
    if (!j.is_object())
      throw ValidationError("line " + std::to_string(line_no) + ": expected a JSON object");
    try {
      if (first && j.contains("spec_version")) {
        DatasetHeader h;
        h.spec_version = j.at("spec_version").get<std::string>();
        h.generator = j.value("generator", std::string{});
        h.params = j.value("params", nlohmann::json::object());
        h.seed = j.value("seed", std::uint64_t{0});
        ds.header = std::move(h);
      } else {
        ds.sequences.push_back(parse_sequence(j));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
    first = false;
  }
  ds.validate();
  return ds;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset " + path.string());
  return read_dataset(in);
}

Dataset read_csv_sequences(std::istream& in) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    for (char& c : line)
      if (c == ',' || c == ';') c = ' ';
    std::istringstream row(line);
    EventSequence s;
    std::string tok;
    while (row >> tok) {
      try {
        std::size_t used = 0;
        s.arrival_times.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ValidationError("line " + std::to_string(line_no) + ": not a number: " + tok);
      }
    }
    s.window_end = s.arrival_times.empty() ? 0.0 : s.arrival_times.back();
    ds.sequences.push_back(std::move(s));
  }
  ds.validate();
  return ds;
}

Dataset read_csv_sequences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset " + path.string());
  return read_csv_sequences(in);
}

Dataset load_dataset(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv" || ext == ".txt") return read_csv_sequences(path);
  return read_dataset(path);
}

}  // namespace cufun
