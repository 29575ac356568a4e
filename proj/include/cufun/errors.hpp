#pragma once

#include <stdexcept>
#include <string>

namespace cufun {

// Bad input data or configuration (CLI exit code 2).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical evaluation left its domain: log of a nonpositive value,
// overflow, non-finite output, failed root bracketing.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training was aborted (CLI exit code 3).
class TrainingAbort : public std::runtime_error {
 public:
  TrainingAbort(const std::string& what, std::string dump)
      : std::runtime_error(what), dump_(std::move(dump)) {}
  // JSON document describing the offending batch.
  const std::string& dump() const noexcept { return dump_; }

 private:
  std::string dump_;
};

}  // namespace cufun
