#pragma once

// Monotone CDF network: F(tau | h) = sigmoid(w_out . tanh(W (u (.) v) + b) + b_out)
// with u = W_tau tau + b_tau and v = W_h h + b_h. Every weight is nonnegative
// and b_h >= 0, so with h >= 0 the map is nondecreasing in tau. The density is
// the forward-mode derivative of F in tau.

#include <span>
#include <string>

#include "cufun/model/model.hpp"

namespace cufun {

// Segment names of one monotone network with the given prefix ("mnn" or "fullynn").
struct MnnNames {
  std::string tau_w, tau_b, hist_w, hist_b, out_w, out_b;
  std::string hidden_w(std::size_t layer) const;
  std::string hidden_b(std::size_t layer) const;
  std::string prefix;

  explicit MnnNames(std::string prefix);
};

struct MnnForward {
  ad::Var out;  // n x 1, pre-activation of the output unit
  double mean_abs_u = 0.0;
  double mean_abs_v = 0.0;
};

void add_mnn_params(ad::ParamVector& params, const MnnNames& names, std::size_t hidden,
                    std::size_t width, std::size_t layers, ad::Constraint hist_bias);
MnnForward mnn_forward(ad::Tape& tape, const MnnNames& names, std::size_t layers, ad::Var h,
                       ad::Var tau, Fusion fusion);

struct CufunOutput {
  double F;
  double p;
  double S;
  double lambda;
};

struct NllResult {
  double total = 0.0;
  double per_event = 0.0;
  std::size_t n_events = 0;
};

class CufunModel : public Model {
 public:
  explicit CufunModel(ModelConfig config);

  static const MnnNames& names();

  HeadOutput head(ad::Tape& tape, ad::Var h, const ad::Matrix& tau, bool want_cdf) const override;

  double cdf(double tau, std::span<const double> h) const;
  double density(double tau, std::span<const double> h) const;
  double survivor(double tau, std::span<const double> h) const;
  // NumericError when the survivor is below kSurvivorFloor.
  double intensity(double tau, std::span<const double> h) const;
  CufunOutput evaluate(double tau, std::span<const double> h) const;

  // Mass the sigmoid output places outside (0, inf): F(0+) and 1 - F(big).
  struct DefectMass {
    double at_zero;
    double at_infinity;
  };
  DefectMass defect_mass(std::span<const double> h) const;

 protected:
  void init_head(Rng& rng) override;
};

// -sum log p over the events of one sequence, under any model.
NllResult sequence_nll(const Model& model, const EventSequence& seq);

}  // namespace cufun
