#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <random>

#include "cufun/errors.hpp"
#include "cufun/model/baselines.hpp"
#include "cufun/model/checkpoint.hpp"
#include "cufun/model/cufun_model.hpp"
#include "cufun/simd/kernels.hpp"
#include "cufun/synthgen/datasets.hpp"

namespace {

using namespace cufun;

bool ends_with(const std::string& s, const char* suffix) {
  const std::string t(suffix);
  return s.size() >= t.size() && s.compare(s.size() - t.size(), t.size(), t) == 0;
}

// D = H = 1, every head weight 1, every bias 0, encoder zero.
std::unique_ptr<Model> toy(ModelKind kind) {
  ModelConfig c;
  c.kind = kind;
  c.encoder.hidden = 1;
  c.width = 1;
  auto m = make_model(c);
  for (const auto& s : m->params().segments()) {
    const bool head = s.name.rfind("encoder.", 0) != 0;
    for (double& v : m->params().view(s)) v = head && ends_with(s.name, ".W") ? 1.0 : 0.0;
  }
  return m;
}

std::unique_ptr<Model> random_model(ModelKind kind, std::uint64_t seed, std::size_t hidden = 8,
                                    std::size_t width = 8, Fusion fusion = Fusion::Product) {
  ModelConfig c;
  c.kind = kind;
  c.encoder.hidden = hidden;
  c.width = width;
  c.fusion = fusion;
  auto m = make_model(c);
  m->initialize(seed);
  return m;
}

TEST(CufunToy, CdfDensitySurvivorIntensity) {
  auto m = toy(ModelKind::Cufun);
  const auto& cufun = dynamic_cast<const CufunModel&>(*m);
  const double h[] = {1.0};
  EXPECT_NEAR(cufun.cdf(1.0, h), 0.6817, 5e-5);
  EXPECT_NEAR(cufun.cdf(1e-12, h), 0.5, 1e-9);
  EXPECT_NEAR(cufun.density(0.0, h), 0.25, 1e-12);
  EXPECT_NEAR(cufun.survivor(1.0, h), 0.3183, 5e-5);
  EXPECT_NEAR(cufun.intensity(0.0, h), 0.5, 1e-12);
  const CufunOutput o = cufun.evaluate(1.0, h);
  EXPECT_EQ(o.F + o.S, 1.0);
  EXPECT_NEAR(o.lambda * o.S, o.p, 1e-10 * o.p);
  EXPECT_NEAR(cufun.defect_mass(h).at_zero, 0.5, 1e-9);
}

TEST(CufunToy, DeadHistoryFloorsTheDensity) {
  auto m = toy(ModelKind::Cufun);
  EventSequence seq;
  seq.arrival_times = {1.0};
  const NllResult r = sequence_nll(*m, seq);
  EXPECT_NEAR(r.total, -std::log(1e-12), 1e-9);
  EXPECT_NEAR(r.total, 27.63, 5e-3);
  EXPECT_EQ(r.n_events, 1u);
}

TEST(Cufun, NllIsAdditiveOverSequences) {
  auto m = random_model(ModelKind::Cufun, 4);
  EventSequence a, b;
  a.arrival_times = {0.3, 1.0, 2.2};
  b.arrival_times = {0.7, 0.8};
  const std::vector<EventSequence> both{a, b};
  const double sum = sequence_nll(*m, a).total + sequence_nll(*m, b).total;
  double pooled = 0;
  for (const auto& s : both) pooled += sequence_nll(*m, s).total;
  EXPECT_NEAR(pooled, sum, 1e-12);
}

TEST(Cufun, MonotoneBoundedNonnegativeDensity) {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> expo(0.5);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto m = random_model(ModelKind::Cufun, seed);
    ASSERT_TRUE(m->constraints_hold());
    const auto& c = dynamic_cast<const CufunModel&>(*m);
    for (int i = 0; i < 100; ++i) {
      std::vector<double> h(8);
      for (double& x : h) x = unit(gen);
      const double t1 = expo(gen), t2 = t1 + expo(gen);
      EXPECT_LE(c.cdf(t1, h), c.cdf(t2, h));
      EXPECT_GE(c.density(t1, h), 0.0);
      for (double t : {1e-6, 1e6}) {
        const double f = c.cdf(t, h);
        EXPECT_GT(f, 0.0);
        EXPECT_LT(f, 1.0);
      }
    }
  }
}

TEST(Cufun, DensityMatchesFiniteDifferenceOfCdf) {
  auto m = random_model(ModelKind::Cufun, 7);
  const auto& c = dynamic_cast<const CufunModel&>(*m);
  const std::vector<double> h{0.1, 0.5, 0.0, 0.9, 0.3, 0.2, 0.7, 0.4};
  const double eps = 1e-6;
  for (double tau : {0.01, 0.3, 1.0, 3.0}) {
    const double fd = (c.cdf(tau + eps, h) - c.cdf(tau - eps, h)) / (2 * eps);
    EXPECT_NEAR(c.density(tau, h), fd, 1e-5 * std::abs(fd));
  }
}

TEST(Cufun, SaturatedSurvivorHasNoIntensity) {
  auto m = toy(ModelKind::Cufun);
  const auto& c = dynamic_cast<const CufunModel&>(*m);
  m->params().view(CufunModel::names().out_w)[0] = 80.0;
  const double h[] = {1.0};
  EXPECT_THROW(c.intensity(50.0, h), NumericError);
  const double taus[] = {50.0};
  EXPECT_TRUE(std::isnan(m->curves(taus, h).intensity[0]));
}

TEST(Projection, ReflectAndClamp) {
  ad::ParamVector p;
  p.add("r", 1, 2, ad::Constraint::ReflectNonNegative);
  p.add("c", 1, 2, ad::Constraint::ClampNonNegative);
  p.add("f", 1, 1);
  p.view("r")[0] = -0.3;
  p.view("r")[1] = 0.3;
  p.view("c")[0] = -0.3;
  p.view("c")[1] = 0.3;
  p.view("f")[0] = -0.3;
  project_positive(p);
  EXPECT_EQ(p.view("r")[0], 0.3);
  EXPECT_EQ(p.view("r")[1], 0.3);
  EXPECT_EQ(p.view("c")[0], 0.0);
  EXPECT_EQ(p.view("c")[1], 0.3);
  EXPECT_EQ(p.view("f")[0], -0.3);
}

TEST(Cufun, InitialisationKeepsHistoryBranchAlive) {
  auto m = random_model(ModelKind::Cufun, 12, 16, 16);
  for (double b : m->params().view(CufunModel::names().hist_b)) EXPECT_GE(b, 0.1);
}

TEST(FullyNNToy, LogDensity) {
  auto m = toy(ModelKind::FullyNN);
  const double h[] = {0.0};
  const double taus[] = {1.0};
  const Curves c = m->curves(taus, h);
  const double t = std::tanh(1.0);
  const double cumulative = std::log1p(std::exp(t));
  const double hazard = (1 / (1 + std::exp(-t))) * (1 - t * t);
  EXPECT_NEAR(cumulative, 1.14476, 1e-5);
  EXPECT_NEAR(std::log(c.density[0]), std::log(hazard) - cumulative, 1e-12);
  EXPECT_NEAR(std::log(c.density[0]), -2.3955, 1e-4);
  EXPECT_NEAR(-std::log(c.survivor[0]), cumulative, 1e-12);
}

TEST(FullyNN, ImpliedCdfMonotone) {
  auto m = random_model(ModelKind::FullyNN, 3);
  const std::vector<double> h{0.2, 0.0, 0.4, 0.1, 0.9, 0.3, 0.3, 0.6};
  std::vector<double> taus;
  for (double t = 0.01; t < 20; t *= 1.2) taus.push_back(t);
  const Curves c = m->curves(taus, h);
  for (std::size_t i = 0; i < taus.size(); ++i) {
    EXPECT_GT(c.cdf[i], 0.0);
    EXPECT_LT(c.cdf[i], 1.0);
    if (i > 0) {
      EXPECT_LE(c.cdf[i - 1], c.cdf[i]);
    }
  }
}

TEST(Const, LogDensityExamples) {
  EXPECT_DOUBLE_EQ(const_logdensity(1.0, 1.0), -1.0);
  EXPECT_NEAR(const_logdensity(0.5, 2.0), -0.3069, 5e-5);
  boost::math::quadrature::exp_sinh<double> q;
  const double mass = q.integrate([](double t) { return std::exp(const_logdensity(t, 1.7)); });
  EXPECT_NEAR(mass, 1.0, 1e-8);
}

TEST(Rmtpp, LogDensityExamples) {
  EXPECT_NEAR(rmtpp_logdensity(1.0, 0.0, 1.0), -0.71828, 5e-6);
  for (double tau : {0.1, 1.0, 5.0}) {
    EXPECT_NEAR(rmtpp_logdensity(tau, 0.0, 1e-12), -tau, 1e-10);
    EXPECT_EQ(rmtpp_logdensity(tau, 0.0, 0.0), -tau);
  }
  EXPECT_THROW(rmtpp_logdensity(1000.0, 0.0, 5.0), NumericError);
}

TEST(Rmtpp, DensityIntegratesToOne) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> a_dist(-2.0, 1.0), w_dist(0.01, 2.0);
  boost::math::quadrature::exp_sinh<double> q;
  for (int i = 0; i < 10; ++i) {
    const double a = a_dist(gen), w = w_dist(gen);
    const double mass = q.integrate([&](double t) {
      if (w * t > 700) return 0.0;
      return std::exp(rmtpp_logdensity(t, a, w));
    });
    EXPECT_NEAR(mass, 1.0, 1e-6) << "a " << a << " w " << w;
  }
}

TEST(Exp, TrapezoidAgainstClosedForm) {
  for (double tau : {0.2, 1.0, 4.0}) EXPECT_NEAR(exp_logdensity(tau, 0.0, 0.0), -tau, 1e-14);
  EXPECT_LT(std::abs(exp_logdensity(1.0, 0.0, 1.0) - rmtpp_logdensity(1.0, 0.0, 1.0)), 1e-3);
  // halving the step cuts the error by four
  const double exact = rmtpp_logdensity(2.0, 0.3, 0.8);
  const double e1 = exp_logdensity(2.0, 0.3, 0.8, 33) - exact;
  const double e2 = exp_logdensity(2.0, 0.3, 0.8, 65) - exact;
  EXPECT_NEAR(e1 / e2, 4.0, 0.05);
}

// Tape heads against the scalar reference forms.
TEST(Baselines, HeadsMatchScalarReferences) {
  const std::vector<double> h{0.3, 0.0, 0.8, 0.1, 0.2, 0.5, 0.9, 0.4};
  const std::vector<double> taus{0.05, 0.7, 2.5};
  for (ModelKind kind : {ModelKind::Const, ModelKind::Rmtpp, ModelKind::Exp}) {
    auto m = random_model(kind, 5);
    const std::string p = kind == ModelKind::Const ? "const" : std::string(to_string(kind));
    double a = m->params().view(p + ".b")[0];
    const auto v = m->params().view(p + ".v");
    for (std::size_t k = 0; k < h.size(); ++k) a += v[k] * h[k];
    const Curves c = m->curves(taus, h);
    for (std::size_t i = 0; i < taus.size(); ++i) {
      double expected;
      if (kind == ModelKind::Const) {
        expected = const_logdensity(taus[i], std::log1p(std::exp(a)));
      } else {
        const double w = m->params().view(p + ".w")[0];
        expected = kind == ModelKind::Rmtpp ? rmtpp_logdensity(taus[i], a, w)
                                            : exp_logdensity(taus[i], a, w);
      }
      EXPECT_NEAR(std::log(c.density[i]), expected, 1e-12) << to_string(kind);
    }
  }
}

double batch_loss(const Model& m, const ad::ParamVector& params,
                  std::span<const EventSequence* const> batch) {
  ad::Tape tape(params);
  const BatchOutput out = m.log_density(tape, batch);
  return -tape.value(tape.sum(out.log_density))[0] / static_cast<double>(out.n_events);
}

class GradientCheck : public ::testing::TestWithParam<ModelKind> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  auto m = random_model(GetParam(), 31, 6, 6);
  SyntheticOptions o;
  o.n_sequences = 3;
  o.seq_len = 6;
  o.seed = 2;
  const Dataset d = generate_synthetic("hawkes1", o);
  std::vector<const EventSequence*> batch;
  for (const auto& s : d.sequences) batch.push_back(&s);

  ad::Tape tape(m->params());
  const BatchOutput out = m->log_density(tape, batch);
  tape.backward(tape.scale(tape.sum(out.log_density), -1.0 / static_cast<double>(out.n_events)));
  const ad::ParamVector g = tape.gradient();

  const double h = 1e-5;
  for (std::size_t i = 0; i < g.size(); ++i) {
    ad::ParamVector up = m->params(), down = m->params();
    up[i] += h;
    down[i] -= h;
    const double fd = (batch_loss(*m, up, batch) - batch_loss(*m, down, batch)) / (2 * h);
    const double rel = std::abs(g[i] - fd) / std::max({std::abs(g[i]), std::abs(fd), 1e-5});
    EXPECT_LT(rel, 1e-4) << "parameter " << i << " analytic " << g[i] << " fd " << fd;
  }
}

INSTANTIATE_TEST_SUITE_P(Models, GradientCheck,
                         ::testing::Values(ModelKind::Cufun, ModelKind::FullyNN, ModelKind::Rmtpp,
                                           ModelKind::Exp, ModelKind::Const),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Models, ScalarAndVectorKernelsAgree) {
  if (!simd::cpu_has_avx2()) GTEST_SKIP() << "no AVX2 on this machine";
  SyntheticOptions o;
  o.n_sequences = 4;
  o.seq_len = 40;
  const Dataset d = generate_synthetic("hawkes2", o);
  std::vector<const EventSequence*> batch;
  for (const auto& s : d.sequences) batch.push_back(&s);
  const auto before = simd::active().name;
  for (ModelKind kind : {ModelKind::Cufun, ModelKind::FullyNN, ModelKind::Exp}) {
    auto m = random_model(kind, 17, 64, 64);
    ASSERT_TRUE(simd::select("scalar"));
    const double ls = batch_loss(*m, m->params(), batch);
    ASSERT_TRUE(simd::select("avx2"));
    const double lv = batch_loss(*m, m->params(), batch);
    // saturated tanh units turn few-ulp differences into 1 - y^2 cancellation
    EXPECT_NEAR(ls, lv, 1e-6 * std::abs(ls)) << to_string(kind);
  }
  simd::select(before);
}

TEST(Checkpoint, RoundTripPreservesModel) {
  for (ModelKind kind : {ModelKind::Cufun, ModelKind::FullyNN, ModelKind::Rmtpp, ModelKind::Exp,
                         ModelKind::Const}) {
    auto m = random_model(kind, 21, 5, 4, Fusion::Add);
    const LoadedCheckpoint back = checkpoint_from_json(checkpoint_json(*m));
    ASSERT_TRUE(back.model);
    EXPECT_EQ(back.model->params(), m->params());
    EXPECT_EQ(back.model->config().fusion, Fusion::Add);
    EXPECT_EQ(back.model->kind(), kind);
  }
}

TEST(Checkpoint, MalformedDocumentsAreRejected) {
  auto m = random_model(ModelKind::Cufun, 1, 4, 4);
  nlohmann::json j = checkpoint_json(*m);
  j["segments"][0]["values"].erase(0);
  EXPECT_THROW(checkpoint_from_json(j), ValidationError);
  EXPECT_THROW(checkpoint_from_json(nlohmann::json{{"format", "other"}}), ValidationError);
}

TEST(ModelConfig, UnknownNamesAreValidationErrors) {
  EXPECT_THROW(parse_model_kind("lognormmix"), ValidationError);
  EXPECT_THROW(parse_fusion("concat"), ValidationError);
  EXPECT_EQ(parse_fusion("add"), Fusion::Add);
}

}  // namespace
