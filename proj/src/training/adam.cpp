#include "cufun/training/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "cufun/simd/kernels.hpp"

namespace cufun {

Adam::Adam(const ad::ParamVector& layout, AdamConfig config)
    : config_(config), m_(layout.zeros_like()), v_(layout.zeros_like()) {}

void Adam::step(ad::ParamVector& params, const ad::ParamVector& grad) {
  if (!params.same_layout(m_) || !grad.same_layout(m_))
    throw std::invalid_argument("adam: layout mismatch");
  ++t_;
  const double t = static_cast<double>(t_);
  const simd::AdamCoefficients c{config_.learning_rate,
                                 config_.beta1,
                                 config_.beta2,
                                 config_.eps,
                                 1.0 - std::pow(config_.beta1, t),
                                 1.0 - std::pow(config_.beta2, t)};
  simd::active().adam_update(params.size(), c, grad.values().data(), m_.values().data(),
                             v_.values().data(), params.values().data());
}

}  // namespace cufun
