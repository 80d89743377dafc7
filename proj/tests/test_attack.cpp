#include <cmath>

#include <gtest/gtest.h>

#include "vstealth/attack.hpp"
#include "vstealth/conditions.hpp"

using namespace vstealth;

namespace {

double gc_ex1(double t, double tau) { return std::exp(-(t * t * t - tau * tau * tau) / 3.0); }

}  // namespace

TEST(AttackSignal, Formula) {
  const TimeGrid g(10.0, 0.5);
  const Signal c = attack_signal({0, 1.0}, g);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(c[k], 1.0);
  EXPECT_EQ(attack_signal({2, 1.0}, g)[g.index_of(2.0)], 2.0);
  EXPECT_NEAR(attack_signal({1, 0.1}, g).back(), 1.0, 1e-15);
  EXPECT_EQ(attack_signal({2, 1.0}, TimeGrid(10.0, 1e-3)).back(), 50.0);
  EXPECT_THROW(attack_signal({-1, 1.0}, g), DomainError);
}

TEST(ForcingTerm, Examples) {
  const TimeGrid g(2.0, 1e-3);
  const auto ones = integrator_kernel(1, g);
  const Signal zero = forcing_term(ones, {3, 0.0});
  EXPECT_EQ(sup_norm(zero), 0.0);
  const Signal phi = forcing_term(ones, {1, 1.0});
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(phi[i] - g[i] * g[i] / 2.0));
  EXPECT_LT(err, 1e-12);
}

TEST(ForcingTerm, Example1AgainstClosedForm) {
  // a = 2, h = 1: phi(t) = (1 - e^{-t^3/3}) / 2.
  auto err_at = [](double dt) {
    const TimeGrid g(10.0, dt);
    const Signal phi = forcing_term(KernelTable::from_function(g, gc_ex1), {2, 1.0});
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      err = std::max(err, std::abs(phi[i] - 0.5 * (1.0 - std::exp(-std::pow(g[i], 3) / 3.0))));
    return err;
  };
  const double e1 = err_at(2e-3), e2 = err_at(1e-3);
  EXPECT_LT(e2, 1e-3);
  EXPECT_NEAR(e1 / e2, 4.0, 0.5);
}

TEST(ForcingTerm, ConsistentWithMomentIntegral) {
  const TimeGrid g(3.0, 1e-2);
  const auto k = KernelTable::from_function(g, gc_ex1);
  for (int a = 0; a <= 3; ++a) {
    const Signal phi = forcing_term(k, {a, 1.7});
    for (std::size_t i = 1; i < g.size(); i += 13) {
      const double m = moment_integral(k, a, 0.0, g[i], i);
      EXPECT_NEAR(phi[i], 1.7 / factorial(a) * m, 1e-12 * std::max(1.0, std::abs(phi[i])));
    }
  }
}

TEST(AdmissibleWeight, Formula) {
  EXPECT_EQ(admissible_weight(1.0, 0, 0.5).bound, 0.5);
  EXPECT_EQ(admissible_weight(2.0, 2, 1.0).bound, 1.0);
  EXPECT_EQ(admissible_weight(-2.0, 2, 1.0).bound, 1.0);
  const auto inf = admissible_weight(0.0, 1, 1.0);
  EXPECT_TRUE(inf.unbounded);
  EXPECT_TRUE(std::isinf(inf.bound));
  EXPECT_THROW(admissible_weight(1.0, 1, 0.0), DomainError);
}

TEST(AdmissibleWeight, EndToEndBound) {
  const TimeGrid g(10.0, 1e-3);
  const auto k = KernelTable::from_function(g, gc_ex1);
  const auto m = row_moments(k, 2);
  const double big_m = sup_norm(m);
  const double delta = 0.1;
  const double h = 0.9 * admissible_weight(big_m, 2, delta).bound;
  EXPECT_LT(sup_norm(forcing_term(k, {2, h})), delta);
}

TEST(StealthVerdict, ZeroSignal) {
  const auto v = stealth_verdict(Signal::zeros(TimeGrid(10.0, 0.01)), 0.1);
  EXPECT_TRUE(v.is_epsilon_stealthy);
  EXPECT_TRUE(v.is_untraceable);
  EXPECT_TRUE(v.horizon_limited);
}

TEST(StealthVerdict, BoundIsInclusive) {
  const TimeGrid g(10.0, 0.01);
  const auto v = stealth_verdict(Signal::sample(g, [](double) { return 0.4; }), 0.4);
  EXPECT_TRUE(v.is_epsilon_stealthy);
  EXPECT_FALSE(v.is_untraceable);
  EXPECT_THROW(stealth_verdict(Signal::zeros(g), 0.0), DomainError);
}

TEST(StealthVerdict, UntraceableImpliesStealthy) {
  const TimeGrid g(10.0, 0.01);
  const Signal s = Signal::sample(g, [](double t) { return 5.0 * std::exp(-3.0 * t); });
  const auto tight = stealth_verdict(s, 1.0);
  EXPECT_FALSE(tight.is_epsilon_stealthy);
  EXPECT_FALSE(tight.is_untraceable);
  const auto loose = stealth_verdict(s, 10.0);
  EXPECT_TRUE(loose.is_untraceable);
}

TEST(TailClass, Classification) {
  const TimeGrid g(10.0, 0.01);
  auto cls = [&](auto f) { return classify_tail(decay_metric(Signal::sample(g, f), 0.2)); };
  EXPECT_EQ(cls([](double t) { return std::exp(-2 * t); }), TailClass::decaying);
  EXPECT_EQ(cls([](double) { return 1.0; }), TailClass::bounded);
  EXPECT_EQ(cls([](double t) { return t * t; }), TailClass::growing);
  EXPECT_EQ(cls([](double t) { return 1.0 - std::exp(-t); }), TailClass::bounded);
}
