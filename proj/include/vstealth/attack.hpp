#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "vstealth/core.hpp"
#include "vstealth/lvie.hpp"
#include "vstealth/stm.hpp"

namespace vstealth {

/// y_a(t) = h t^a / a!
inline Signal attack_signal(const AttackSpec& spec, const TimeGrid& grid) {
  if (spec.a < 0) throw DomainError("attack degree a must be >= 0");
  const double scale = spec.h / factorial(spec.a);
  return Signal::sample(grid, [&](double t) { return scale * ipow(t, spec.a); });
}

/// Row-wise moments int_0^{t_i} G(t_i, tau) tau^p dtau (trapezoid).
inline std::vector<double> row_moments(const KernelTable& g, int p) {
  const TimeGrid& grid = g.grid();
  std::vector<double> powers(g.size());
  for (std::size_t k = 0; k < powers.size(); ++k) powers[k] = ipow(grid[k], p);
  std::vector<double> out(g.size(), 0.0);
  const double dt = grid.dt();
  for (std::size_t i = 1; i < g.size(); ++i) {
    const auto row = g.row(i);
    double s = 0.5 * (row[0] * powers[0] + row[i] * powers[i]);
    for (std::size_t j = 1; j < i; ++j) s += row[j] * powers[j];
    out[i] = dt * s;
  }
  return out;
}

/// phi_{c,a}(t) = (h / a!) int_0^t g_c(t, tau) tau^a dtau.
inline Signal forcing_term(const KernelTable& g_c, const AttackSpec& spec) {
  if (spec.a < 0) throw DomainError("attack degree a must be >= 0");
  auto m = row_moments(g_c, spec.a);
  const double scale = spec.h / factorial(spec.a);
  for (double& v : m) v *= scale;
  return Signal(g_c.grid(), std::move(m));
}

struct WeightBound {
  /// a! delta / |M|; +inf when M == 0.
  double bound = 0.0;
  bool unbounded = false;
};

/// Largest |h| keeping sup|phi_{c,a}| below delta, given M = sup of the a-th
/// moment of g_c. Any |h| strictly below the bound is admissible.
inline WeightBound admissible_weight(double moment_sup, int a, double delta) {
  if (a < 0) throw DomainError("admissible_weight: a must be >= 0");
  if (!(delta > 0.0)) throw DomainError("admissible_weight: delta must be > 0");
  if (moment_sup == 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {factorial(a) * delta / std::abs(moment_sup), false};
}

struct StealthVerdict {
  double sup_uq = 0.0;
  double epsilon = 0.0;
  bool is_epsilon_stealthy = false;
  double tail_max = 0.0;
  double tail_fraction = kDefaultTailFraction;
  DecayMetric decay;
  bool is_untraceable = false;
  /// Finite-horizon surrogate of the asymptotic definitions; always set.
  bool horizon_limited = true;
};

/// epsilon-stealth uses the non-strict bound sup|u_q| <= epsilon.
inline StealthVerdict stealth_verdict(const Signal& u_q, double epsilon,
                                      double tail_fraction = kDefaultTailFraction,
                                      double decay_tol = kDefaultDecayTol) {
  if (!(epsilon > 0.0)) throw DomainError("stealth_verdict: epsilon must be > 0");
  StealthVerdict v;
  v.sup_uq = sup_norm(u_q);
  v.epsilon = epsilon;
  v.is_epsilon_stealthy = v.sup_uq <= epsilon;
  v.tail_fraction = tail_fraction;
  v.decay = decay_metric(u_q, tail_fraction, decay_tol);
  v.tail_max = v.decay.tail_max;
  v.is_untraceable = v.is_epsilon_stealthy && v.decay.is_decaying;
  return v;
}

enum class TailClass { decaying, bounded, growing };

inline const char* to_string(TailClass c) {
  switch (c) {
    case TailClass::decaying: return "decaying";
    case TailClass::bounded: return "bounded";
    case TailClass::growing: return "growing";
  }
  return "?";
}

inline constexpr double kGrowthTol = 0.05;

/// Exploratory tail classification. "growing" means the tail window maxima
/// increase monotonically by more than `growth_tol` (relative) across the
/// tail, i.e. no plateau is in sight on this horizon.
inline TailClass classify_tail(const DecayMetric& d, double growth_tol = kGrowthTol) {
  if (d.is_decaying) return TailClass::decaying;
  bool increasing = true;
  for (std::size_t w = 1; w < d.window_max.size(); ++w) {
    if (!(d.window_max[w] > d.window_max[w - 1])) increasing = false;
  }
  const double first = d.window_max.front();
  const double last = d.window_max.back();
  if (increasing && last > 0.0 && (last - first) / last > growth_tol) return TailClass::growing;
  return TailClass::bounded;
}

}  // namespace vstealth
