#pragma once

// Comparison models sharing the encoder and the per-event log-density contract.
//
//   Const    lambda = softplus(v.h + b), exponential intervals
//   RMTPP    lambda(tau) = exp(a + w tau), a = v.h + b, closed-form compensator
//   Exp      same intensity, compensator by a fixed-grid trapezoid rule
//   FullyNN  cumulative hazard Phi = softplus(MNN(tau, h)) with additive fusion

#include "cufun/model/cufun_model.hpp"
#include "cufun/model/model.hpp"

namespace cufun {

// Scalar reference forms; the tape heads below compute the same quantities.
double const_logdensity(double tau, double rate);
// NumericError when exp(w tau) overflows.
double rmtpp_logdensity(double tau, double a, double w);
double exp_logdensity(double tau, double a, double w, std::size_t points = 64);

class ConstModel : public Model {
 public:
  explicit ConstModel(ModelConfig config);
  HeadOutput head(ad::Tape& tape, ad::Var h, const ad::Matrix& tau, bool want_cdf) const override;

 protected:
  void init_head(Rng& rng) override;
};

class RmtppModel : public Model {
 public:
  explicit RmtppModel(ModelConfig config);
  HeadOutput head(ad::Tape& tape, ad::Var h, const ad::Matrix& tau, bool want_cdf) const override;

 protected:
  RmtppModel(ModelConfig config, const char* prefix);
  void init_head(Rng& rng) override;
  std::string prefix_;
};

class ExpModel : public RmtppModel {
 public:
  explicit ExpModel(ModelConfig config);
  HeadOutput head(ad::Tape& tape, ad::Var h, const ad::Matrix& tau, bool want_cdf) const override;
};

class FullyNNModel : public Model {
 public:
  explicit FullyNNModel(ModelConfig config);
  static const MnnNames& names();
  HeadOutput head(ad::Tape& tape, ad::Var h, const ad::Matrix& tau, bool want_cdf) const override;

 protected:
  void init_head(Rng& rng) override;
};

}  // namespace cufun
