#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cufun/autodiff/matrix.hpp"

namespace cufun::ad {

// How a segment is pulled back into its feasible set after an optimizer step.
enum class Constraint {
  Free,
  ReflectNonNegative,  // w <- |w|
  ClampNonNegative,    // w <- max(w, 0)
};

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  Constraint constraint = Constraint::Free;

  std::size_t size() const noexcept { return rows * cols; }
};

// Flat parameter storage partitioned into named matrix segments. Segments are
// laid out back to back in insertion order, so they tile the flat array with
// no overlap or gap.
class ParamVector {
 public:
  ParamVector() = default;

  // Appends a zero-initialised segment and returns its index.
  std::size_t add(std::string name, std::size_t rows, std::size_t cols,
                  Constraint constraint = Constraint::Free);

  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<Segment>& segments() const noexcept { return segments_; }
  const Segment& segment(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  bool contains(std::string_view name) const noexcept;

  std::span<double> view(std::string_view name);
  std::span<const double> view(std::string_view name) const;
  std::span<double> view(const Segment& s) { return {values_.data() + s.offset, s.size()}; }
  std::span<const double> view(const Segment& s) const {
    return {values_.data() + s.offset, s.size()};
  }
  Matrix matrix(std::string_view name) const;

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // Same layout, all values zero.
  ParamVector zeros_like() const;
  bool same_layout(const ParamVector& other) const;
  double squared_norm() const;

  friend bool operator==(const ParamVector& a, const ParamVector& b) {
    return a.same_layout(b) && a.values_ == b.values_;
  }

 private:
  std::vector<Segment> segments_;
  std::vector<double> values_;
};

}  // namespace cufun::ad
