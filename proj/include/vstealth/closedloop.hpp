#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vstealth/attack.hpp"
#include "vstealth/core.hpp"
#include "vstealth/lvie.hpp"
#include "vstealth/stm.hpp"

namespace vstealth {

// Loop convention: u_c = y_p + y_a (summing junction, no sign flip). The
// controller maps u_c -> u_q, the integrator chain u_q -> u_p, and the plant
// u_p -> y_p. All subsystem states start at zero.

struct GrowthEvent {
  double t = 0.0;
  double magnitude = 0.0;
  std::string message() const {
    return "unbounded growth detected at t = " + std::to_string(t);
  }
};

struct Trajectories {
  Signal u_q;
  Signal u_c;
  Signal u_p;
  Signal y_p;
  Signal y_a;
  /// Set when the stacked state left the guard; signals then stop at the last
  /// node reached before the event.
  std::optional<GrowthEvent> growth;
};

namespace detail {

class LoopDynamics {
 public:
  explicit LoopDynamics(const SystemConfig& cfg)
      : cfg_(cfg),
        nc_(cfg.controller.states()),
        nq_(static_cast<std::size_t>(cfg.q)),
        np_(is_unity(cfg.plant) ? 0 : std::get<LtvStateSpace>(cfg.plant).states()),
        ac_(nc_ * nc_), bc_(nc_), cc_(nc_), ap_(np_ * np_), bp_(np_), cp_(np_),
        attack_scale_(cfg.attack.h / factorial(cfg.attack.a)) {}

  std::size_t dimension() const { return nc_ + nq_ + np_; }

  struct Outputs {
    double u_q, u_c, u_p, y_p, y_a;
  };

  Outputs outputs(double t, std::span<const double> x) {
    Outputs o{};
    cfg_.controller.eval_c(t, cc_);
    o.u_q = dot(cc_.data(), x.data(), nc_);
    o.u_p = x[nc_];
    if (np_ == 0) {
      o.y_p = o.u_p;
    } else {
      std::get<LtvStateSpace>(cfg_.plant).eval_c(t, cp_);
      o.y_p = dot(cp_.data(), x.data() + nc_ + nq_, np_);
    }
    o.y_a = attack_scale_ * ipow(t, cfg_.attack.a);
    o.u_c = o.y_p + o.y_a;
    return o;
  }

  void derivative(double t, std::span<const double> x, std::span<double> dx) {
    const Outputs o = outputs(t, x);
    cfg_.controller.eval_a(t, ac_);
    cfg_.controller.eval_b(t, bc_);
    matvec(ac_.data(), x.data(), dx.data(), nc_);
    for (std::size_t r = 0; r < nc_; ++r) dx[r] += bc_[r] * o.u_c;
    for (std::size_t r = 0; r + 1 < nq_; ++r) dx[nc_ + r] = x[nc_ + r + 1];
    dx[nc_ + nq_ - 1] = o.u_q;
    if (np_ > 0) {
      const auto& plant = std::get<LtvStateSpace>(cfg_.plant);
      plant.eval_a(t, ap_);
      plant.eval_b(t, bp_);
      const std::size_t off = nc_ + nq_;
      matvec(ap_.data(), x.data() + off, dx.data() + off, np_);
      for (std::size_t r = 0; r < np_; ++r) dx[off + r] += bp_[r] * o.u_p;
    }
  }

 private:
  const SystemConfig& cfg_;
  std::size_t nc_, nq_, np_;
  std::vector<double> ac_, bc_, cc_, ap_, bp_, cp_;
  double attack_scale_;
};

}  // namespace detail

/// Integrates the stacked loop ODE with RK4 (sub-step <= 1e-3) and samples the
/// loop signals on the grid.
inline Trajectories simulate(const SystemConfig& cfg) {
  cfg.validate();
  const TimeGrid& grid = cfg.grid;
  detail::LoopDynamics dyn(cfg);
  const std::size_t dim = dyn.dimension();
  const auto substeps = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(grid.dt() / kMaxOdeStep - 1e-9)));
  const double h = grid.dt() / static_cast<double>(substeps);

  std::vector<double> x(dim, 0.0), k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  std::vector<double> uq, uc, up, yp, ya;
  for (auto* v : {&uq, &uc, &up, &yp, &ya}) v->reserve(grid.size());
  auto record = [&](double t) {
    const auto o = dyn.outputs(t, x);
    uq.push_back(o.u_q);
    uc.push_back(o.u_c);
    up.push_back(o.u_p);
    yp.push_back(o.y_p);
    ya.push_back(o.y_a);
    return o;
  };

  std::optional<GrowthEvent> growth;
  record(0.0);
  for (std::size_t k = 1; k < grid.size() && !growth; ++k) {
    const double t0 = grid[k - 1];
    for (std::size_t s = 0; s < substeps; ++s) {
      const double t = t0 + static_cast<double>(s) * h;
      dyn.derivative(t, x, k1);
      for (std::size_t r = 0; r < dim; ++r) tmp[r] = x[r] + 0.5 * h * k1[r];
      dyn.derivative(t + 0.5 * h, tmp, k2);
      for (std::size_t r = 0; r < dim; ++r) tmp[r] = x[r] + 0.5 * h * k2[r];
      dyn.derivative(t + 0.5 * h, tmp, k3);
      for (std::size_t r = 0; r < dim; ++r) tmp[r] = x[r] + h * k3[r];
      dyn.derivative(t + h, tmp, k4);
      for (std::size_t r = 0; r < dim; ++r) {
        x[r] += (h / 6.0) * (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r]);
      }
      double mag = 0.0;
      for (double v : x) mag = std::isfinite(v) ? std::max(mag, std::abs(v)) : INFINITY;
      if (!(mag <= cfg.tolerances.sup_guard)) {
        growth = GrowthEvent{t + h, mag};
        break;
      }
    }
    if (!growth) {
      const auto o = record(grid[k]);
      const double mag = std::max({std::abs(o.u_q), std::abs(o.u_c), std::abs(o.y_p)});
      if (!(mag <= cfg.tolerances.sup_guard)) {
        growth = GrowthEvent{grid[k], mag};
        for (auto* v : {&uq, &uc, &up, &yp, &ya}) v->pop_back();
      }
    }
  }

  const std::size_t kept = uq.size();
  if (kept < 2) {
    throw NumericalError(growth ? growth->message() + " (before the first grid step)"
                                : "simulate: empty trajectory");
  }
  const TimeGrid out_grid = kept == grid.size()
                                ? grid
                                : TimeGrid(static_cast<double>(kept - 1) * grid.dt(), grid.dt());
  return Trajectories{Signal(out_grid, std::move(uq)), Signal(out_grid, std::move(uc)),
                      Signal(out_grid, std::move(up)), Signal(out_grid, std::move(yp)),
                      Signal(out_grid, std::move(ya)), growth};
}

/// Kernels of the u_q integral equation for one configuration.
struct LoopKernels {
  KernelTable g_c;
  /// G_{c,p}; empty for a unity plant, where it equals g_c.
  std::optional<KernelTable> g_cp;
  KernelTable g_cpq;

  const KernelTable& controller_plant() const { return g_cp ? *g_cp : g_c; }
};

inline KernelTable controller_plant_kernel(const SystemConfig& cfg, const KernelTable& g_c) {
  if (is_unity(cfg.plant)) return compose_kernels(g_c, UnitImpulse{});
  const KernelTable g_p = impulse_kernel(std::get<LtvStateSpace>(cfg.plant), cfg.grid);
  return compose_kernels(g_c, g_p);
}

inline LoopKernels build_loop_kernels(const SystemConfig& cfg) {
  cfg.validate();
  KernelTable g_c = impulse_kernel(cfg.controller, cfg.grid);
  std::optional<KernelTable> g_cp;
  if (!is_unity(cfg.plant)) g_cp = controller_plant_kernel(cfg, g_c);
  KernelTable g_cpq = compose_kernels(g_cp ? *g_cp : g_c, IntegratorChain(cfg.q));
  return LoopKernels{std::move(g_c), std::move(g_cp), std::move(g_cpq)};
}

/// u_q from its integral equation given prebuilt kernels.
inline Signal uq_via_lvie(const KernelTable& g_cpq, const KernelTable& g_c, const AttackSpec& attack) {
  return solve_lvie(g_cpq, forcing_term(g_c, attack));
}

/// u_q from its integral equation. Keeps at most two kernel tables alive.
inline Signal uq_via_lvie(const SystemConfig& cfg) {
  cfg.validate();
  KernelTable g_c = impulse_kernel(cfg.controller, cfg.grid);
  const Signal phi = forcing_term(g_c, cfg.attack);
  KernelTable g_cp = is_unity(cfg.plant) ? std::move(g_c) : controller_plant_kernel(cfg, g_c);
  const KernelTable g_cpq = compose_kernels(std::move(g_cp), IntegratorChain(cfg.q));
  return solve_lvie(g_cpq, phi);
}

enum class CheckStatus { pass, fail, indeterminate };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::indeterminate: return "indeterminate";
  }
  return "?";
}

inline double sup_difference(const Signal& a, const Signal& b) {
  const std::size_t n = std::min(a.size(), b.size());
  double d = 0.0;
  for (std::size_t k = 0; k < n; ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

struct CrossValidation {
  double sup_diff = 0.0;
  std::optional<double> sup_diff_refined;
  /// sup_diff / sup_diff_refined when the refined run was made.
  std::optional<double> ratio;
  double tolerance = 0.0;
  CheckStatus status = CheckStatus::indeterminate;
};

/// Compares ODE and integral-equation u_q already computed on cfg.grid. With
/// `refine`, both are recomputed at dt/2 and the difference must shrink.
inline CrossValidation cross_validate(const SystemConfig& cfg, const Signal& ode_uq, const Signal& lvie_uq,
                                      bool refine = true) {
  CrossValidation cv;
  cv.tolerance = cfg.tolerances.xval_tol;
  cv.sup_diff = sup_difference(ode_uq, lvie_uq);
  bool shrinks = true;
  if (refine && cv.sup_diff > 0.0) {
    SystemConfig fine = cfg;
    fine.grid = cfg.grid.refined();
    const Trajectories ode = simulate(fine);
    const Signal lvie = uq_via_lvie(fine);
    cv.sup_diff_refined = sup_difference(ode.u_q, lvie);
    cv.ratio = *cv.sup_diff_refined > 0.0 ? cv.sup_diff / *cv.sup_diff_refined : INFINITY;
    shrinks = *cv.sup_diff_refined < cv.sup_diff;
  }
  cv.status = (cv.sup_diff <= cv.tolerance && shrinks) ? CheckStatus::pass : CheckStatus::fail;
  return cv;
}

/// Compares ODE and integral-equation u_q. Passes when the difference is within
/// tolerance and (if `refine`) shrinks when dt is halved.
inline CrossValidation cross_validate(const SystemConfig& cfg, bool refine = true) {
  const Trajectories ode = simulate(cfg);
  const Signal lvie = uq_via_lvie(cfg);
  return cross_validate(cfg, ode.u_q, lvie, refine);
}

}  // namespace vstealth
