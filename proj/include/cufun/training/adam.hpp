#pragma once

#include <cstddef>

#include "cufun/autodiff/param_vector.hpp"

namespace cufun {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a flat parameter vector.
class Adam {
 public:
  Adam(const ad::ParamVector& layout, AdamConfig config = {});

  void step(ad::ParamVector& params, const ad::ParamVector& grad);

  std::size_t timestep() const noexcept { return t_; }
  const ad::ParamVector& first_moment() const noexcept { return m_; }
  const ad::ParamVector& second_moment() const noexcept { return v_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  AdamConfig config_;
  ad::ParamVector m_;
  ad::ParamVector v_;
  std::size_t t_ = 0;
};

}  // namespace cufun
