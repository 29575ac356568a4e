#include "cufun/encoder/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cufun/errors.hpp"

namespace cufun {

double featurize(double interval, Feature feature) {
  if (!(interval > 0.0))
    throw ValidationError("nonpositive inter-event interval " + std::to_string(interval));
  return feature == Feature::LogInterval ? std::log(interval + kFeatureEpsilon) : interval;
}

EncoderParams EncoderParams::view(const ad::ParamVector& params) {
  EncoderParams p;
  p.w_h = params.view(kEncoderWh);
  p.w_x = params.view(kEncoderWx);
  p.b = params.view(kEncoderB);
  p.hidden = p.b.size();
  return p;
}

void add_encoder_params(ad::ParamVector& params, const EncoderConfig& config) {
  params.add(kEncoderWh, config.hidden, config.hidden);
  params.add(kEncoderWx, config.hidden, 1);
  params.add(kEncoderB, 1, config.hidden);
}

HiddenState rnn_step(const HiddenState& h_prev, double x, const EncoderParams& p) {
  const std::size_t n = p.hidden;
  HiddenState h(n);
  for (std::size_t i = 0; i < n; ++i) {
    double a = p.b[i] + p.w_x[i] * x;
    for (std::size_t j = 0; j < n; ++j) a += p.w_h[i * n + j] * h_prev[j];
    h[i] = std::max(std::tanh(a), 0.0);
  }
  return h;
}

std::vector<HiddenState> encode_sequence(const EventSequence& seq, const EncoderParams& params,
                                         Feature feature) {
  std::vector<HiddenState> out;
  out.reserve(std::max<std::size_t>(seq.size(), 1));
  out.emplace_back(params.hidden, 0.0);
  const std::vector<double> taus = seq.intervals();
  for (std::size_t i = 0; i + 1 < taus.size(); ++i)
    out.push_back(rnn_step(out.back(), featurize(taus[i], feature), params));
  return out;
}

EncodedBatch encode_batch(ad::Tape& tape, std::span<const EventSequence* const> batch,
                          const EncoderConfig& config) {
  const std::size_t b = batch.size();
  const std::size_t hidden = config.hidden;
  std::size_t max_len = 0, total = 0;
  std::vector<std::vector<double>> taus(b);
  for (std::size_t s = 0; s < b; ++s) {
    taus[s] = batch[s]->intervals();
    max_len = std::max(max_len, taus[s].size());
    total += taus[s].size();
  }
  if (total == 0) throw ValidationError("encode_batch: batch has no events");

  ad::Var w_h = tape.param(kEncoderWh);
  ad::Var w_x = tape.param(kEncoderWx);
  ad::Var bias = tape.param(kEncoderB);

  // states[k] holds h_k for every sequence of the batch (row = sequence).
  std::vector<ad::Var> states;
  states.reserve(max_len);
  states.push_back(tape.constant(ad::Matrix(b, hidden)));
  for (std::size_t k = 1; k < max_len; ++k) {
    ad::Matrix x(b, 1);
    for (std::size_t s = 0; s < b; ++s)
      if (k < taus[s].size()) x(s, 0) = featurize(taus[s][k - 1], config.feature);
    ad::Var pre = tape.add(tape.affine(states.back(), w_h, bias),
                           tape.matmul_nt(tape.constant(std::move(x)), w_x));
    states.push_back(tape.relu(tape.tanh(pre)));
  }

  EncodedBatch out;
  out.tau = ad::Matrix(total, 1);
  out.offsets.reserve(b + 1);
  std::vector<ad::RowRef> rows;
  rows.reserve(total);
  std::size_t r = 0;
  for (std::size_t s = 0; s < b; ++s) {
    out.offsets.push_back(r);
    for (std::size_t i = 0; i < taus[s].size(); ++i, ++r) {
      rows.push_back({states[i], s});
      out.tau(r, 0) = taus[s][i];
    }
  }
  out.offsets.push_back(r);
  out.h = tape.gather_rows(rows);
  return out;
}

}  // namespace cufun
