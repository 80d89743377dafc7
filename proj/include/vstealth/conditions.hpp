#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vstealth/attack.hpp"
#include "vstealth/closedloop.hpp"
#include "vstealth/core.hpp"
#include "vstealth/lvie.hpp"
#include "vstealth/stm.hpp"

namespace vstealth {

// Every limit (t -> inf, T -> inf, T -> 0+) is replaced by a trend test over a
// finite sequence. Results are horizon-limited by construction.

enum class KernelMode { raw, absolute };

inline const char* to_string(KernelMode m) { return m == KernelMode::raw ? "raw" : "absolute"; }

struct ConditionEntry {
  std::string name;
  std::string description;
  CheckStatus status = CheckStatus::indeterminate;
  std::vector<std::pair<std::string, double>> witness;
  std::vector<std::pair<std::string, double>> parameters;
  /// Required for indeterminate entries; optional otherwise.
  std::string reason;
};

struct ConditionReport {
  KernelMode mode = KernelMode::raw;
  bool horizon_limited = true;
  std::vector<ConditionEntry> entries;

  bool any_fail() const {
    return std::any_of(entries.begin(), entries.end(),
                       [](const ConditionEntry& e) { return e.status == CheckStatus::fail; });
  }
  const ConditionEntry* find(const std::string& name) const {
    for (const auto& e : entries) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Sign
// ---------------------------------------------------------------------------

/// Raw mode passes iff every entry >= -tol. Absolute mode always passes; the
/// caller is then expected to run the remaining checks on |G|.
inline CheckStatus nonneg_check(const KernelTable& g, KernelMode mode, double tol = 1e-12) {
  if (mode == KernelMode::absolute) return CheckStatus::pass;
  return g.min_entry() >= -tol ? CheckStatus::pass : CheckStatus::fail;
}

// ---------------------------------------------------------------------------
// Row bounds
// ---------------------------------------------------------------------------

inline constexpr double kStabilizeTol = 0.01;

struct Stabilization {
  double max_value = 0.0;
  /// Growth of the running maximum across the last quarter, relative.
  double last_quarter_growth = 0.0;
  /// Slope (per unit time) of the sequence over the last quarter.
  double trend = 0.0;
  CheckStatus status = CheckStatus::indeterminate;
};

/// Running-max stabilization of |values|: passes when the running max over the
/// last quarter grows by at most 1% or the last quarter is non-increasing.
inline Stabilization stabilization(std::span<const double> raw, std::span<const double> times) {
  Stabilization s;
  if (raw.size() < 4) return s;
  std::vector<double> values(raw.size());
  std::transform(raw.begin(), raw.end(), values.begin(), [](double v) { return std::abs(v); });
  const std::size_t q = values.size() * 3 / 4;
  const double head_max = *std::max_element(values.begin(), values.begin() + q);
  s.max_value = *std::max_element(values.begin(), values.end());
  s.last_quarter_growth = head_max != 0.0 ? (s.max_value - head_max) / std::abs(head_max)
                                          : (s.max_value > 0.0 ? INFINITY : 0.0);
  bool non_increasing = true;
  for (std::size_t k = q + 1; k < values.size(); ++k) {
    if (values[k] > values[k - 1]) non_increasing = false;
  }
  const double span = times.back() - times[q];
  s.trend = span > 0.0 ? (values.back() - values[q]) / span : 0.0;
  s.status = (s.last_quarter_growth <= kStabilizeTol || non_increasing) ? CheckStatus::pass
                                                                         : CheckStatus::indeterminate;
  return s;
}

struct BoundedRows {
  double max_row_integral = 0.0;
  double trend = 0.0;
  CheckStatus status = CheckStatus::indeterminate;
};

/// sup_t int_0^t G(t,tau) dtau < inf, as a stabilization test on row integrals.
inline BoundedRows check_bounded_rows(const KernelTable& g) {
  const auto r = row_integrals(g);
  const auto times = node_times(g.grid());
  const auto s = stabilization(r, times);
  return {s.max_value, s.trend, s.status};
}

// ---------------------------------------------------------------------------
// Iterated-kernel contraction estimate
// ---------------------------------------------------------------------------

inline constexpr std::size_t kIterateGuardSize = 3000;

struct AvEstimate {
  int v = 1;
  bool evaluated = false;
  std::vector<double> estimates;  // one per T
  bool below_one_non_increasing = false;
  bool above_one_growing = false;
};

struct AvResult {
  std::vector<double> t_list;  // snapped to grid nodes
  std::vector<AvEstimate> per_v;
  CheckStatus status = CheckStatus::indeterminate;
};

/// sup over rows t >= T of int_T^t G(t,tau) dtau.
inline double tail_block_sup(const KernelTable& g, std::size_t k_t) {
  const double dt = g.grid().dt();
  double best = 0.0;
  bool any = false;
  for (std::size_t i = k_t; i < g.size(); ++i) {
    const double v = detail::trapezoid(g.row(i).subspan(k_t), dt);
    best = any ? std::max(best, v) : v;
    any = true;
  }
  return best;
}

/// For v = 1..v_max, estimates sup_{t >= T} int_T^t G_v(t,tau) dtau for every
/// T in t_list. Passes once some v is below one and non-increasing in T; with
/// `stop_at_first_pass` the remaining iterates are not built.
inline AvResult estimate_av(const KernelTable& g, int v_max, std::vector<double> t_list,
                            bool stop_at_first_pass = true) {
  if (v_max < 1) throw DomainError("estimate_av: v_max must be >= 1");
  if (g.size() > kIterateGuardSize && v_max > 3) {
    throw DomainError("estimate_av: refusing v_max > 3 on " + std::to_string(g.size()) +
                      " nodes (O(n^3) per iterate); use v_max <= 3 or a grid with at most " +
                      std::to_string(kIterateGuardSize) + " nodes");
  }
  if (t_list.empty()) throw DomainError("estimate_av: T list is empty");
  AvResult out;
  const TimeGrid& grid = g.grid();
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < t_list.size(); ++k) {
    if (!(t_list[k] > 0.0 && t_list[k] < grid.last())) {
      throw DomainError("estimate_av: T values must lie inside the horizon");
    }
    if (k > 0 && !(t_list[k] > t_list[k - 1])) {
      throw DomainError("estimate_av: T values must be increasing");
    }
    idx.push_back(grid.index_of(t_list[k]));
    out.t_list.push_back(grid[idx.back()]);
  }

  std::optional<KernelTable> gv;
  bool passed = false;
  for (int v = 1; v <= v_max; ++v) {
    AvEstimate est;
    est.v = v;
    if (passed && stop_at_first_pass) {
      out.per_v.push_back(est);
      continue;
    }
    if (v > 1) gv = compose_kernels(g, gv ? *gv : g);
    const KernelTable& cur = gv ? *gv : g;
    est.evaluated = true;
    for (std::size_t k : idx) est.estimates.push_back(tail_block_sup(cur, k));
    bool below = true, above = true;
    for (std::size_t k = 0; k < est.estimates.size(); ++k) {
      below = below && est.estimates[k] < 1.0;
      above = above && est.estimates[k] > 1.0;
      if (k > 0) {
        below = below && est.estimates[k] <= est.estimates[k - 1];
        above = above && est.estimates[k] >= est.estimates[k - 1];
      }
    }
    est.below_one_non_increasing = below;
    est.above_one_growing = above;
    passed = passed || below;
    out.per_v.push_back(est);
  }
  const bool all_fail = std::all_of(out.per_v.begin(), out.per_v.end(), [](const AvEstimate& e) {
    return e.evaluated && e.above_one_growing;
  });
  out.status = passed ? CheckStatus::pass : (all_fail ? CheckStatus::fail : CheckStatus::indeterminate);
  return out;
}

// ---------------------------------------------------------------------------
// Vanishing head
// ---------------------------------------------------------------------------

struct HeadDecay {
  std::vector<double> times;
  std::vector<double> values;  // h(t) for rows t >= T
  double limit_estimate = 0.0;
  DecayMetric decay;
  CheckStatus status = CheckStatus::indeterminate;
};

/// pass: tail windows non-increasing and below threshold. fail: tail windows
/// non-decreasing while above threshold (plateau or growth). Otherwise the
/// sequence is still falling on this horizon: indeterminate.
inline CheckStatus decay_status(const DecayMetric& d) {
  if (d.is_decaying) return CheckStatus::pass;
  bool non_decreasing = true;
  for (std::size_t w = 1; w < d.window_max.size(); ++w) {
    if (d.window_max[w] < d.window_max[w - 1]) non_decreasing = false;
  }
  return non_decreasing ? CheckStatus::fail : CheckStatus::indeterminate;
}

/// h(t) = int_0^T G(t,tau) dtau for t >= T; tests h -> 0.
inline HeadDecay check_vanishing_head(const KernelTable& g, double T,
                                      double tail_fraction = kDefaultTailFraction,
                                      double decay_tol = kDefaultDecayTol) {
  const TimeGrid& grid = g.grid();
  if (!(T > 0.0 && T < grid.last())) throw DomainError("check_vanishing_head: T out of range");
  const std::size_t k_t = grid.index_of(T);
  HeadDecay out;
  for (std::size_t i = k_t; i < g.size(); ++i) {
    out.times.push_back(grid[i]);
    out.values.push_back(detail::trapezoid(g.row(i).first(k_t + 1), grid.dt()));
  }
  out.limit_estimate = out.values.back();
  out.decay = tail_decay(out.values, out.times, tail_fraction, decay_tol);
  out.status = decay_status(out.decay);
  return out;
}

// ---------------------------------------------------------------------------
// Moment integrals
// ---------------------------------------------------------------------------

/// int_{b1}^{b2} G(t_i, tau) tau^p dtau over the piecewise-linear interpolant
/// of the integrand on row i. Additive over subintervals.
inline double moment_integral(const KernelTable& g, int p, double b1, double b2, std::size_t row) {
  if (p < 0) throw DomainError("moment_integral: p must be >= 0");
  if (row >= g.size()) throw DomainError("moment_integral: row out of range");
  if (b1 < 0.0 || b2 < b1) throw DomainError("moment_integral: bounds out of order");
  const TimeGrid& grid = g.grid();
  if (b2 > grid[row] + 1e-9 * grid.dt()) {
    throw DomainError("moment_integral: upper bound exceeds the row time");
  }
  const auto r = g.row(row);
  std::vector<double> f(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) f[k] = r[k] * ipow(grid[k], p);
  return detail::integrate_linear_interp(f, grid.dt(), b1, b2);
}

/// sup over rows of int_0^t G(t,tau) tau^p dtau, with the stabilization verdict.
inline Stabilization moment_sup(const KernelTable& g, int p) {
  const auto m = row_moments(g, p);
  return stabilization(m, node_times(g.grid()));
}

/// Tail decay of int_0^t G(t,tau) tau^p dtau.
inline HeadDecay moment_decay(const KernelTable& g, int p, double tail_fraction = kDefaultTailFraction,
                              double decay_tol = kDefaultDecayTol) {
  HeadDecay out;
  out.values = row_moments(g, p);
  out.times = node_times(g.grid());
  out.limit_estimate = out.values.back();
  out.decay = tail_decay(out.values, out.times, tail_fraction, decay_tol);
  out.status = decay_status(out.decay);
  return out;
}

// ---------------------------------------------------------------------------
// Small-T head (continuity of the kernel near tau = 0)
// ---------------------------------------------------------------------------

/// Permitted growth of value/T between successive (decreasing) T values.
inline constexpr double kLinearTrendSlack = 1.25;

struct ShrinkTrend {
  std::vector<double> t_list;
  std::vector<double> values;
  CheckStatus status = CheckStatus::indeterminate;
  std::string reason;
};

/// Decreasing T: values must strictly decrease and value/T must not grow by
/// more than 25% per step (linear approach to zero).
inline void judge_linear_shrink(ShrinkTrend& s) {
  bool decreasing = true;
  bool linear = true;
  for (std::size_t k = 1; k < s.values.size(); ++k) {
    if (!(s.values[k] < s.values[k - 1])) decreasing = false;
    const double prev = s.values[k - 1] / s.t_list[k - 1];
    const double cur = s.values[k] / s.t_list[k];
    if (cur > kLinearTrendSlack * prev + 1e-300) linear = false;
  }
  const bool all_zero = std::all_of(s.values.begin(), s.values.end(), [](double v) { return v == 0.0; });
  if (all_zero || (decreasing && linear)) {
    s.status = CheckStatus::pass;
  } else if (!decreasing) {
    s.status = CheckStatus::fail;
    s.reason = "sequence does not decrease as T shrinks";
  } else {
    s.status = CheckStatus::indeterminate;
    s.reason = "sequence decreases but slower than linearly in T";
  }
}

inline std::vector<std::size_t> small_t_indices(const TimeGrid& grid, const std::vector<double>& t_list,
                                                const char* who) {
  if (t_list.empty()) throw DomainError(std::string(who) + ": T list is empty");
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < t_list.size(); ++k) {
    if (t_list[k] < 4.0 * grid.dt() * (1.0 - 1e-9)) {
      throw DomainError(std::string(who) + ": each T must be at least 4 dt (grid resolution)");
    }
    if (t_list[k] >= grid.last()) throw DomainError(std::string(who) + ": T exceeds the horizon");
    if (k > 0 && !(t_list[k] < t_list[k - 1])) {
      throw DomainError(std::string(who) + ": T list must be decreasing");
    }
    idx.push_back(grid.index_of(t_list[k]));
  }
  return idx;
}

/// sup_t |int_0^{min(T,t)} g(t,tau) dtau| for each T.
inline ShrinkTrend small_head_sup(const KernelTable& g, const std::vector<double>& t_list) {
  const auto idx = small_t_indices(g.grid(), t_list, "small_head_sup");
  ShrinkTrend s;
  const double dt = g.grid().dt();
  for (std::size_t k : idx) {
    double best = 0.0;
    for (std::size_t i = 1; i < g.size(); ++i) {
      best = std::max(best, std::abs(detail::trapezoid(g.row(i).first(std::min(i, k) + 1), dt)));
    }
    s.t_list.push_back(g.grid()[k]);
    s.values.push_back(best);
  }
  judge_linear_shrink(s);
  return s;
}

// ---------------------------------------------------------------------------
// Uniform convergence of the shifted moment
// ---------------------------------------------------------------------------

struct UniformProbe {
  ShrinkTrend trend;  // sup_t |F_T - F_0| per T
  /// sup_t |int_0^t g tau^(q-2) dtau|; q >= 2 only.
  std::optional<double> moment_bound;
  /// dev(T) <= T q M for every T (q >= 2).
  std::optional<bool> within_bound;
};

/// F_T(t) = int_T^t g(t,tau) (tau - T)^(q-1) dtau (zero for t <= T) against
/// F_0(t) = int_0^t g(t,tau) tau^(q-1) dtau; reports sup_t |F_T - F_0| per T.
inline UniformProbe uniform_convergence_probe(const KernelTable& g, int q, const std::vector<double>& t_list) {
  if (q < 1) throw DomainError("uniform_convergence_probe: q must be >= 1");
  const auto idx = small_t_indices(g.grid(), t_list, "uniform_convergence_probe");
  const TimeGrid& grid = g.grid();
  const double dt = grid.dt();
  const auto f0 = row_moments(g, q - 1);
  UniformProbe out;
  std::vector<double> f(g.size());
  for (std::size_t k_t : idx) {
    const double t_shift = grid[k_t];
    double dev = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      double ft = 0.0;
      if (i > k_t) {
        const auto r = g.row(i);
        for (std::size_t j = k_t; j <= i; ++j) f[j - k_t] = r[j] * ipow(grid[j] - t_shift, q - 1);
        ft = detail::trapezoid(std::span<const double>(f).first(i - k_t + 1), dt);
      }
      dev = std::max(dev, std::abs(ft - f0[i]));
    }
    out.trend.t_list.push_back(t_shift);
    out.trend.values.push_back(dev);
  }
  judge_linear_shrink(out.trend);
  if (q >= 2) {
    const auto m = row_moments(g, q - 2);
    out.moment_bound = sup_norm(m);
    bool ok = true;
    for (std::size_t k = 0; k < out.trend.values.size(); ++k) {
      ok = ok && out.trend.values[k] <= out.trend.t_list[k] * q * *out.moment_bound;
    }
    out.within_bound = ok;
  }
  return out;
}

/// Both sides of (mu + T)^q - mu^q = q T mu^(q-1) + sum_{k=2..q} C(q,k) mu^(q-k) T^k.
inline std::pair<double, double> binomial_shift_identity(double mu, double t, int q) {
  const double lhs = ipow(mu + t, q) - ipow(mu, q);
  double rhs = q * t * ipow(mu, q - 1);
  for (int k = 2; k <= q; ++k) rhs += binomial(q, k) * ipow(mu, q - k) * ipow(t, k);
  return {lhs, rhs};
}

// ---------------------------------------------------------------------------
// Suite
// ---------------------------------------------------------------------------

struct ConditionOptions {
  KernelMode mode = KernelMode::raw;
  int v_max = 3;
  /// T values for the iterated-kernel estimate; empty = {0.2, 0.4, 0.6} x horizon.
  std::vector<double> av_t_list;
  double head_t = 1.0;
  std::vector<double> small_t_list{0.5, 0.25, 0.125};
  std::vector<double> probe_t_list{0.4, 0.2, 0.1};
  double tail_fraction = kDefaultTailFraction;
  double decay_tol = kDefaultDecayTol;
  double nonneg_tol = 1e-12;
};

namespace detail {

inline ConditionEntry entry(std::string name, std::string description) {
  ConditionEntry e;
  e.name = std::move(name);
  e.description = std::move(description);
  return e;
}

/// In absolute mode a failing check on |G| is inconclusive, not a failure.
inline void apply_mode(ConditionEntry& e, KernelMode mode) {
  if (mode == KernelMode::absolute && e.status == CheckStatus::fail) {
    e.status = CheckStatus::indeterminate;
    e.reason = "check on |G| failed; absolute mode is sufficiency-only, so this is inconclusive" +
               (e.reason.empty() ? std::string() : " (" + e.reason + ")");
  }
}

inline void require_nonneg(ConditionEntry& e, bool kernel_nonneg) {
  if (!kernel_nonneg) {
    e.status = CheckStatus::indeterminate;
    e.reason = "loop kernel has negative entries; the criterion needs G >= 0 (use absolute mode)";
  }
}

inline std::vector<double> head_one_integrals(const KernelTable& g) {
  const std::size_t k1 = g.grid().index_of(1.0);
  std::vector<double> r(g.size(), 0.0);
  for (std::size_t i = 1; i < g.size(); ++i) {
    r[i] = trapezoid(g.row(i).first(std::min(i, k1) + 1), g.grid().dt());
  }
  return r;
}

}  // namespace detail

/// Stability preconditions on the controller and loop kernels: loop-equation
/// stability through the row-bound and iterated-kernel criteria, a bounded
/// unit-interval head of g_c, and the dominance G_cp >= g_c >= 0.
inline std::vector<ConditionEntry> check_stability_preconditions(const KernelTable& g_c,
                                                                 const KernelTable& g_cp,
                                                                 const KernelTable& g_cpq,
                                                                 const ConditionOptions& opt) {
  std::vector<ConditionEntry> out;
  const bool loop_nonneg = nonneg_check(g_cpq, KernelMode::raw, opt.nonneg_tol) == CheckStatus::pass;
  const TimeGrid& grid = g_c.grid();

  {
    auto e = detail::entry("loop.bounded_rows", "sup_t int_0^t G_cpq(t,tau) dtau is finite");
    const auto b = check_bounded_rows(g_cpq);
    e.status = b.status;
    e.witness = {{"max_row_integral", b.max_row_integral}, {"last_quarter_trend", b.trend}};
    if (e.status == CheckStatus::indeterminate) e.reason = "row integrals still growing at the horizon";
    detail::require_nonneg(e, loop_nonneg || opt.mode == KernelMode::absolute);
    detail::apply_mode(e, opt.mode);
    out.push_back(std::move(e));
  }
  {
    auto e = detail::entry("loop.iterated_kernel",
                           "some iterate G_v has sup_{t>=T} int_T^t G_v below one, non-increasing in T");
    auto t_list = opt.av_t_list;
    if (t_list.empty()) {
      for (double f : {0.2, 0.4, 0.6}) t_list.push_back(f * grid.last());
    }
    const auto av = estimate_av(g_cpq, opt.v_max, t_list);
    e.status = av.status;
    e.parameters.emplace_back("v_max", opt.v_max);
    for (std::size_t k = 0; k < av.t_list.size(); ++k) {
      e.parameters.emplace_back("T" + std::to_string(k), av.t_list[k]);
    }
    for (const auto& est : av.per_v) {
      if (!est.evaluated) continue;
      for (std::size_t k = 0; k < est.estimates.size(); ++k) {
        e.witness.emplace_back("A" + std::to_string(est.v) + "_T" + std::to_string(k), est.estimates[k]);
      }
    }
    if (e.status == CheckStatus::indeterminate) e.reason = "no iterate is clearly below one";
    detail::require_nonneg(e, loop_nonneg || opt.mode == KernelMode::absolute);
    detail::apply_mode(e, opt.mode);
    out.push_back(std::move(e));
  }
  {
    auto e = detail::entry("controller.unit_head_bounded", "sup_t int_0^1 g_c(t,tau) dtau is finite");
    const auto r = detail::head_one_integrals(g_c);
    const auto s = stabilization(r, node_times(grid));
    e.status = s.status;
    e.witness = {{"max", s.max_value}, {"last_quarter_trend", s.trend}};
    if (e.status == CheckStatus::indeterminate) e.reason = "unit-interval head still growing at the horizon";
    detail::apply_mode(e, opt.mode);
    out.push_back(std::move(e));
  }
  {
    auto e = detail::entry("kernel.dominance", "G_cp(t,tau) >= g_c(t,tau) >= 0 on the grid");
    double min_gc = 0.0, min_gap = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < g_c.size(); ++i) {
      const auto a = g_c.row(i);
      const auto b = g_cp.row(i);
      for (std::size_t j = 0; j <= i; ++j) {
        min_gc = std::min(min_gc, a[j]);
        min_gap = std::min(min_gap, b[j] - a[j]);
      }
    }
    ok = min_gc >= -opt.nonneg_tol && min_gap >= -opt.nonneg_tol;
    e.status = ok ? CheckStatus::pass : CheckStatus::fail;
    e.witness = {{"min_g_c", min_gc}, {"min_G_cp_minus_g_c", min_gap}};
    e.parameters = {{"nonneg_tol", opt.nonneg_tol}};
    if (!ok) e.reason = min_gc < -opt.nonneg_tol ? "g_c takes negative values" : "G_cp < g_c somewhere";
    detail::apply_mode(e, opt.mode);
    out.push_back(std::move(e));
  }
  return out;
}

/// Asymptotic preconditions: vanishing head of the loop kernel, decay of the
/// unit-interval head of g_c, and linear shrinkage of its small-T head.
inline std::vector<ConditionEntry> check_asymptotic_preconditions(const KernelTable& g_c,
                                                                  const KernelTable& g_cpq,
                                                                  const ConditionOptions& opt) {
  std::vector<ConditionEntry> out;
  const bool loop_nonneg = nonneg_check(g_cpq, KernelMode::raw, opt.nonneg_tol) == CheckStatus::pass;
  {
    auto e = detail::entry("loop.vanishing_head", "lim_t int_0^T G_cpq(t,tau) dtau = 0");
    const auto h = check_vanishing_head(g_cpq, opt.head_t, opt.tail_fraction, opt.decay_tol);
    e.status = h.status;
    e.parameters = {{"T", opt.head_t}, {"tail_fraction", opt.tail_fraction}, {"decay_tol", opt.decay_tol}};
    e.witness = {{"limit_estimate", h.limit_estimate},
                 {"tail_max", h.decay.tail_max},
                 {"threshold", h.decay.threshold}};
    if (e.status == CheckStatus::indeterminate) e.reason = "head integral still decreasing but above threshold";
    if (e.status == CheckStatus::fail) e.reason = "head integral does not decrease over the tail";
    detail::require_nonneg(e, loop_nonneg || opt.mode == KernelMode::absolute);
    detail::apply_mode(e, opt.mode);
    out.push_back(std::move(e));
  }
  {
    // The unsubscripted kernel here is read as the controller kernel g_c.
    auto e = detail::entry("controller.unit_head_decay", "lim_t int_0^1 g_c(t,tau) dtau = 0");
    const auto r = detail::head_one_integrals(g_c);
    const auto times = node_times(g_c.grid());
    const auto d = tail_decay(r, times, opt.tail_fraction, opt.decay_tol);
    e.status = decay_status(d);
    e.witness = {{"limit_estimate", r.back()}, {"tail_max", d.tail_max}, {"threshold", d.threshold}};
    if (e.status == CheckStatus::indeterminate) e.reason = "still decreasing but above threshold";
    if (e.status == CheckStatus::fail) e.reason = "does not decrease over the tail";
    detail::apply_mode(e, opt.mode);
    out.push_back(std::move(e));
  }
  {
    auto e = detail::entry("controller.small_head", "lim_{T->0+} sup_t int_0^T g_c(t,tau) dtau = 0");
    const auto s = small_head_sup(g_c, opt.small_t_list);
    e.status = s.status;
    e.reason = s.reason;
    for (std::size_t k = 0; k < s.values.size(); ++k) {
      e.parameters.emplace_back("T" + std::to_string(k), s.t_list[k]);
      e.witness.emplace_back("sup_T" + std::to_string(k), s.values[k]);
    }
    detail::apply_mode(e, opt.mode);
    out.push_back(std::move(e));
  }
  return out;
}

/// Moment checks that follow from the preconditions: bounded q-th moment,
/// decaying (q-1)-th moment, and uniform convergence of the shifted moment.
inline std::vector<ConditionEntry> check_moment_consequences(const KernelTable& g_c, int q,
                                                             const ConditionOptions& opt) {
  std::vector<ConditionEntry> out;
  {
    auto e = detail::entry("controller.moment_bounded", "sup_t int_0^t g_c(t,tau) tau^q dtau is finite");
    const auto s = moment_sup(g_c, q);
    e.status = s.status;
    e.parameters = {{"p", q}};
    e.witness = {{"sup", s.max_value}, {"last_quarter_trend", s.trend}};
    if (e.status == CheckStatus::indeterminate) e.reason = "moment still growing at the horizon";
    detail::apply_mode(e, opt.mode);
    out.push_back(std::move(e));
  }
  {
    auto e = detail::entry("controller.moment_decay", "lim_t int_0^t g_c(t,tau) tau^(q-1) dtau = 0");
    const auto d = moment_decay(g_c, q - 1, opt.tail_fraction, opt.decay_tol);
    e.status = d.status;
    e.parameters = {{"p", q - 1}};
    e.witness = {{"limit_estimate", d.limit_estimate}, {"tail_max", d.decay.tail_max},
                 {"threshold", d.decay.threshold}};
    if (e.status == CheckStatus::indeterminate) e.reason = "still decreasing but above threshold";
    if (e.status == CheckStatus::fail) e.reason = "does not decrease over the tail";
    detail::apply_mode(e, opt.mode);
    out.push_back(std::move(e));
  }
  {
    auto e = detail::entry("controller.uniform_convergence",
                           "sup_t |F_T - F_0| -> 0 linearly as T -> 0+");
    const auto p = uniform_convergence_probe(g_c, q, opt.probe_t_list);
    e.status = p.trend.status;
    e.reason = p.trend.reason;
    for (std::size_t k = 0; k < p.trend.values.size(); ++k) {
      e.parameters.emplace_back("T" + std::to_string(k), p.trend.t_list[k]);
      e.witness.emplace_back("dev_T" + std::to_string(k), p.trend.values[k]);
    }
    if (p.moment_bound) {
      e.witness.emplace_back("M", *p.moment_bound);
      e.witness.emplace_back("within_TqM_bound", *p.within_bound ? 1.0 : 0.0);
      if (!*p.within_bound && e.status == CheckStatus::pass) {
        e.status = CheckStatus::indeterminate;
        e.reason = "deviation exceeds the T q M bound";
      }
    }
    detail::apply_mode(e, opt.mode);
    out.push_back(std::move(e));
  }
  return out;
}

/// Full condition suite for one configuration.
inline ConditionReport run_condition_suite(const LoopKernels& kernels, int q, const ConditionOptions& opt) {
  ConditionReport report;
  report.mode = opt.mode;

  {
    auto e = detail::entry("controller.nonnegative", "g_c(t,tau) >= 0 on the grid");
    e.status = nonneg_check(kernels.g_c, opt.mode, opt.nonneg_tol);
    e.witness = {{"min_entry", kernels.g_c.min_entry()}};
    e.parameters = {{"nonneg_tol", opt.nonneg_tol}};
    if (opt.mode == KernelMode::absolute) e.reason = "absolute mode: later checks run on |G|";
    report.entries.push_back(std::move(e));
  }
  {
    auto e = detail::entry("loop.nonnegative", "G_cpq(t,tau) >= 0 on the grid");
    e.status = nonneg_check(kernels.g_cpq, opt.mode, opt.nonneg_tol);
    e.witness = {{"min_entry", kernels.g_cpq.min_entry()}};
    e.parameters = {{"nonneg_tol", opt.nonneg_tol}};
    if (opt.mode == KernelMode::absolute) e.reason = "absolute mode: later checks run on |G|";
    report.entries.push_back(std::move(e));
  }

  auto append = [&](std::vector<ConditionEntry> v) {
    for (auto& e : v) report.entries.push_back(std::move(e));
  };
  if (opt.mode == KernelMode::absolute) {
    const KernelTable g_c = kernels.g_c.abs();
    const KernelTable g_cpq = kernels.g_cpq.abs();
    const std::optional<KernelTable> g_cp =
        kernels.g_cp ? std::optional<KernelTable>(kernels.g_cp->abs()) : std::nullopt;
    append(check_stability_preconditions(g_c, g_cp ? *g_cp : g_c, g_cpq, opt));
    append(check_asymptotic_preconditions(g_c, g_cpq, opt));
    append(check_moment_consequences(g_c, q, opt));
  } else {
    append(check_stability_preconditions(kernels.g_c, kernels.controller_plant(), kernels.g_cpq, opt));
    append(check_asymptotic_preconditions(kernels.g_c, kernels.g_cpq, opt));
    append(check_moment_consequences(kernels.g_c, q, opt));
  }
  for (auto& e : report.entries) {
    if (e.status == CheckStatus::indeterminate && e.reason.empty()) e.reason = "trend inconclusive on this horizon";
  }
  return report;
}

}  // namespace vstealth
