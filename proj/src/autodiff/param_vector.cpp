#include "cufun/autodiff/param_vector.hpp"

#include <algorithm>
#include <stdexcept>

namespace cufun::ad {

std::size_t ParamVector::add(std::string name, std::size_t rows, std::size_t cols,
                             Constraint constraint) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter segment: " + name);
  segments_.push_back(Segment{std::move(name), values_.size(), rows, cols, constraint});
  values_.resize(values_.size() + rows * cols, 0.0);
  return segments_.size() - 1;
}

std::size_t ParamVector::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < segments_.size(); ++i)
    if (segments_[i].name == name) return i;
  throw std::out_of_range("unknown parameter segment: " + std::string(name));
}

const Segment& ParamVector::segment(std::string_view name) const {
  return segments_[index_of(name)];
}

bool ParamVector::contains(std::string_view name) const noexcept {
  return std::any_of(segments_.begin(), segments_.end(),
                     [&](const Segment& s) { return s.name == name; });
}

std::span<double> ParamVector::view(std::string_view name) { return view(segment(name)); }

std::span<const double> ParamVector::view(std::string_view name) const {
  return view(segment(name));
}

Matrix ParamVector::matrix(std::string_view name) const {
  const Segment& s = segment(name);
  auto v = view(s);
  return Matrix(s.rows, s.cols, std::vector<double>(v.begin(), v.end()));
}

ParamVector ParamVector::zeros_like() const {
  ParamVector out;
  out.segments_ = segments_;
  out.values_.assign(values_.size(), 0.0);
  return out;
}

bool ParamVector::same_layout(const ParamVector& other) const {
  if (segments_.size() != other.segments_.size()) return false;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& a = segments_[i];
    const Segment& b = other.segments_[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols || a.offset != b.offset ||
        a.constraint != b.constraint)
      return false;
  }
  return true;
}

double ParamVector::squared_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return s;
}

}  // namespace cufun::ad
