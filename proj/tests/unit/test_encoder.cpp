#include <gtest/gtest.h>

#include <cmath>

#include "cufun/encoder/encoder.hpp"
#include "cufun/errors.hpp"

namespace {

using namespace cufun;

EncoderParams one_unit(const double* wh, const double* wx, const double* b) {
  return {{wh, 1}, {wx, 1}, {b, 1}, 1};
}

TEST(Encoder, ZeroWeightsGiveZeroState) {
  ad::ParamVector p;
  add_encoder_params(p, {4, Feature::LogInterval});
  const HiddenState h = rnn_step(HiddenState(4, 0.0), 1.7, EncoderParams::view(p));
  for (double v : h) EXPECT_EQ(v, 0.0);
}

TEST(Encoder, NegativeActivationClampsToZero) {
  const double wh = 0, wx = 1, b = 0;
  EXPECT_EQ(rnn_step({0.0}, -2.0, one_unit(&wh, &wx, &b))[0], 0.0);
}

TEST(Encoder, PositiveActivation) {
  const double wh = 0, wx = 1, b = 0;
  EXPECT_NEAR(rnn_step({0.0}, 1.0, one_unit(&wh, &wx, &b))[0], 0.761594, 1e-6);
}

TEST(Encoder, Featurize) {
  EXPECT_NEAR(featurize(1.0), 0.0, 1e-7);
  EXPECT_NEAR(featurize(std::exp(1.0)), 1.0, 1e-7);
  EXPECT_NEAR(featurize(1e-8), -17.73, 0.005);
  EXPECT_EQ(featurize(2.5, Feature::RawInterval), 2.5);
  EXPECT_THROW(featurize(0.0), ValidationError);
}

TEST(Encoder, SequenceConventions) {
  ad::ParamVector p;
  add_encoder_params(p, {3, Feature::LogInterval});
  for (double& v : p.values()) v = 0.3;
  const EncoderParams view = EncoderParams::view(p);

  EventSequence empty;
  const auto e = encode_sequence(empty, view);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0], HiddenState(3, 0.0));

  EventSequence one;
  one.arrival_times = {0.7};
  const auto o = encode_sequence(one, view);
  ASSERT_EQ(o.size(), 1u);
  EXPECT_EQ(o[0], HiddenState(3, 0.0));

  EventSequence three;
  three.arrival_times = {0.5, 1.75, 2.0};
  const auto t = encode_sequence(three, view);
  ASSERT_EQ(t.size(), 3u);
  HiddenState h(3, 0.0);
  const double gaps[] = {0.5, 1.25};
  for (int i = 0; i < 2; ++i) {
    h = rnn_step(h, featurize(gaps[i]), view);
    EXPECT_EQ(t[i + 1], h);
  }
}

TEST(Encoder, TapeBatchMatchesPlainEncoding) {
  ad::ParamVector p;
  const EncoderConfig config{5, Feature::LogInterval};
  add_encoder_params(p, config);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::sin(1.0 + i) * 0.8;
  EventSequence a, b;
  a.arrival_times = {0.2, 0.9, 1.1, 4.0};
  b.arrival_times = {1.5, 1.6};
  const EventSequence* batch[] = {&a, &b};
  ad::Tape tape(p);
  const EncodedBatch enc = encode_batch(tape, batch, config);
  ASSERT_EQ(enc.n_events(), 6u);
  ASSERT_EQ(enc.offsets, (std::vector<std::size_t>{0, 4, 6}));
  const auto ha = encode_sequence(a, EncoderParams::view(p));
  const auto hb = encode_sequence(b, EncoderParams::view(p));
  const ad::Matrix& h = enc.h.value();
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(h(r, k), ha[r][k], 1e-14);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(h(4 + r, k), hb[r][k], 1e-14);
  EXPECT_DOUBLE_EQ(enc.tau(2, 0), 0.2);
}

}  // namespace
