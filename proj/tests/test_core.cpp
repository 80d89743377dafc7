#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "vstealth/core.hpp"

using namespace vstealth;

TEST(TimeGrid, NodeCountAndSpacing) {
  const TimeGrid g(10.0, 1e-3);
  EXPECT_EQ(g.size(), 10001u);
  EXPECT_DOUBLE_EQ(g[0], 0.0);
  EXPECT_NEAR(g.last(), 10.0, 1e-12);
  for (std::size_t k = 1; k < 50; ++k) EXPECT_GT(g[k], g[k - 1]);
}

TEST(TimeGrid, FloorOfRatio) {
  EXPECT_EQ(TimeGrid(1.0, 0.3).size(), 4u);
  EXPECT_EQ(TimeGrid(1.0, 0.1).size(), 11u);
}

TEST(TimeGrid, RejectsDegenerate) {
  EXPECT_THROW(TimeGrid(1.0, 2.0), DomainError);
  EXPECT_THROW(TimeGrid(0.0, 0.1), DomainError);
  EXPECT_THROW(TimeGrid(1.0, -0.1), DomainError);
  EXPECT_THROW(TimeGrid(1.0, NAN), DomainError);
}

TEST(TimeGrid, RefinementDoublesIntervals) {
  for (double dt : {0.1, 0.01, 1e-3, 0.25}) {
    const TimeGrid g(10.0, dt);
    EXPECT_EQ(g.refined().size(), 2 * (g.size() - 1) + 1) << "dt=" << dt;
  }
}

TEST(Signal, RejectsNonFinite) {
  const TimeGrid g(1.0, 0.5);
  EXPECT_THROW(Signal(g, {0.0, NAN, 1.0}), NumericalError);
  EXPECT_THROW(Signal(g, {0.0, INFINITY, 1.0}), NumericalError);
  EXPECT_THROW(Signal(g, {0.0, 1.0}), DomainError);
}

TEST(SupNorm, Examples) {
  const TimeGrid g(1.0, 0.5);
  EXPECT_EQ(sup_norm(Signal::zeros(g)), 0.0);
  EXPECT_EQ(sup_norm(Signal(g, {1.0, -3.0, 2.0})), 3.0);
}

TEST(SupNorm, AbsolutelyHomogeneous) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  const TimeGrid g(1.0, 0.01);
  for (int trial = 0; trial < 20; ++trial) {
    const Signal s = Signal::sample(g, [&](double) { return u(rng); });
    const double c = u(rng);
    EXPECT_NEAR(sup_norm(s.scaled(c)), std::abs(c) * sup_norm(s), 1e-14 * sup_norm(s) * std::abs(c) + 1e-300);
  }
}

TEST(DecayMetric, ExponentialDecays) {
  const TimeGrid g(20.0, 1e-2);
  const auto d = decay_metric(Signal::sample(g, [](double t) { return std::exp(-t); }), 0.2);
  EXPECT_TRUE(d.is_decaying);
  EXPECT_NEAR(d.tail_max, std::exp(-16.0), 1e-12);
}

TEST(DecayMetric, ConstantDoesNotDecay) {
  const TimeGrid g(20.0, 1e-2);
  const auto d = decay_metric(Signal::sample(g, [](double) { return 1.0; }), 0.2);
  EXPECT_FALSE(d.is_decaying);
  EXPECT_TRUE(d.non_increasing);
  EXPECT_EQ(d.tail_max, 1.0);
}

TEST(DecayMetric, ZeroSignalDecays) {
  const auto d = decay_metric(Signal::zeros(TimeGrid(5.0, 0.01)), 0.2);
  EXPECT_TRUE(d.is_decaying);
  EXPECT_EQ(d.tail_max, 0.0);
}

TEST(DecayMetric, InsufficientHorizon) {
  const TimeGrid g(1.0, 0.25);
  try {
    decay_metric(Signal::zeros(g), 0.2);
    FAIL() << "expected an error";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient horizon"), std::string::npos);
  }
}

TEST(DecayMetric, RisingTailIsNotDecaying) {
  const TimeGrid g(10.0, 1e-2);
  const auto d = decay_metric(Signal::sample(g, [](double t) { return 1e-12 * t; }), 0.2, 1e3);
  EXPECT_FALSE(d.non_increasing);
  EXPECT_FALSE(d.is_decaying);
}

TEST(Coefficient, Forms) {
  const Coefficient c(2.5);
  EXPECT_TRUE(c.is_constant());
  EXPECT_EQ(c(3.0), 2.5);
  const auto p = Coefficient::polynomial({1.0, 0.0, -1.0});
  EXPECT_FALSE(p.is_constant());
  EXPECT_DOUBLE_EQ(p(2.0), -3.0);
  const Coefficient e(Polynomial{{2.0}}, Polynomial{{0.0, -1.0}});
  EXPECT_DOUBLE_EQ(e(1.0), 2.0 * std::exp(-1.0));
}

TEST(LtvStateSpace, DimensionChecks) {
  EXPECT_THROW(LtvStateSpace(2, {1.0, 0.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}), DomainError);
  EXPECT_THROW(LtvStateSpace(2, {1.0, 0.0, 0.0, 1.0}, {1.0}, {1.0, 0.0}), DomainError);
  EXPECT_THROW(LtvStateSpace(0, {}, {}, {}), DomainError);
}

TEST(LtvStateSpace, Representation) {
  EXPECT_EQ(LtvStateSpace::scalar(-1.0, 1.0, 1.0).representation(), Representation::constant);
  EXPECT_EQ(LtvStateSpace::scalar(Coefficient::polynomial({0, 0, -1}), 1.0, 1.0).representation(),
            Representation::polynomial);
  EXPECT_EQ(LtvStateSpace::scalar(Coefficient(Polynomial{{1.0}}, Polynomial{{0.0, 1.0}}), 1.0, 1.0)
                .representation(),
            Representation::expression);
}

TEST(LtvStateSpace, NonFiniteEvaluationThrows) {
  const auto sys = LtvStateSpace::scalar(Coefficient(Polynomial{{1.0}}, Polynomial{{0.0, 0.0, 0.0, 1e3}}), 1.0, 1.0);
  double a = 0.0;
  EXPECT_THROW(sys.eval_a(10.0, {&a, 1}), EvaluationError);
}

TEST(SystemConfig, Validation) {
  SystemConfig cfg;
  cfg.q = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.q = 1;
  cfg.attack.a = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.attack.a = 0;
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Helpers, FactorialBinomial) {
  EXPECT_EQ(factorial(0), 1.0);
  EXPECT_EQ(factorial(5), 120.0);
  EXPECT_EQ(binomial(5, 2), 10.0);
  EXPECT_EQ(binomial(4, 0), 1.0);
  EXPECT_EQ(binomial(3, 4), 0.0);
  EXPECT_EQ(ipow(2.0, 10), 1024.0);
  EXPECT_EQ(ipow(0.0, 0), 1.0);
}
