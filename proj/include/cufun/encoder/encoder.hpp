#pragma once

// History encoder: h_i = max(tanh(W_h h_{i-1} + W_x x_i + b), 0), h_0 = 0.
// x_i is the featurised i-th inter-event interval; h_{i-1} conditions the
// prediction of interval tau_i. Weights are unconstrained; the outer clamp is
// what keeps every hidden component nonnegative.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cufun/autodiff/param_vector.hpp"
#include "cufun/autodiff/tape.hpp"
#include "cufun/synthgen/event_sequence.hpp"

namespace cufun {

using HiddenState = std::vector<double>;

enum class Feature { LogInterval, RawInterval };

inline constexpr double kFeatureEpsilon = 1e-8;

// log(interval + 1e-8), or the raw interval. Nonpositive intervals throw ValidationError.
double featurize(double interval, Feature feature = Feature::LogInterval);

struct EncoderConfig {
  std::size_t hidden = 64;
  Feature feature = Feature::LogInterval;
};

// Read-only view of the encoder segments inside a ParamVector.
struct EncoderParams {
  std::span<const double> w_h;  // hidden x hidden
  std::span<const double> w_x;  // hidden x 1
  std::span<const double> b;    // hidden
  std::size_t hidden = 0;

  static EncoderParams view(const ad::ParamVector& params);
};

inline constexpr const char* kEncoderWh = "encoder.W_h";
inline constexpr const char* kEncoderWx = "encoder.W_x";
inline constexpr const char* kEncoderB = "encoder.b";

void add_encoder_params(ad::ParamVector& params, const EncoderConfig& config);

HiddenState rnn_step(const HiddenState& h_prev, double x, const EncoderParams& params);

// [h_0, ..., h_{N-1}] for an N-event sequence; just [h_0] when N == 0.
std::vector<HiddenState> encode_sequence(const EventSequence& seq, const EncoderParams& params,
                                         Feature feature = Feature::LogInterval);

// Conditioning states and targets for every event of a batch, recorded on a tape.
struct EncodedBatch {
  ad::Var h;                         // n_events x hidden, row i conditions tau(i)
  ad::Matrix tau;                    // n_events x 1
  std::vector<std::size_t> offsets;  // sequence s owns rows [offsets[s], offsets[s+1])

  std::size_t n_events() const { return tau.rows(); }
};

EncodedBatch encode_batch(ad::Tape& tape, std::span<const EventSequence* const> batch,
                          const EncoderConfig& config);

}  // namespace cufun
