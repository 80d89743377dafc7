// Acceptance criteria. Prints one PASS/FAIL line per criterion.
//   acceptance                 run all
//   acceptance --criterion N   run criterion N only
// Exit status is 0 iff every selected criterion passes.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <optional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vstealth/vstealth.hpp"

using namespace vstealth;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double time_limit_s;  // 0 = none
  std::function<Outcome()> run;
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

SystemConfig ex1_with(int a, double h) {
  SystemConfig cfg = preset_ex1();
  cfg.attack = {a, h};
  return cfg;
}

// 1. Example 1, a = 2: y_a(10) = 50, sup|u_q| <= 0.4, tail plateaus.
Outcome ex1_epsilon_stealth() {
  const SystemConfig cfg = ex1_with(2, 1.0);
  const Signal y_a = attack_signal(cfg.attack, cfg.grid);
  const Signal u_q = uq_via_lvie(cfg);
  const StealthVerdict v = stealth_verdict(u_q, 0.4, cfg.tail_fraction, cfg.tolerances.decay_tol);
  const TailClass tail = classify_tail(v.decay);
  const bool ok = y_a.back() == 50.0 && v.is_epsilon_stealthy && tail != TailClass::growing;
  return {ok, "y_a(10)=" + fmt(y_a.back()) + " sup|u_q|=" + fmt(v.sup_uq) + " (need <= 0.4) tail=" +
                  to_string(tail)};
}

// 2. Example 1, a = 1: finite sup, tail max over [8, 10] below 1e-2, untraceable.
Outcome ex1_untraceable() {
  const SystemConfig cfg = ex1_with(1, 1.0);
  const Signal u_q = uq_via_lvie(cfg);
  const StealthVerdict v = stealth_verdict(u_q, cfg.epsilon, cfg.tail_fraction, cfg.tolerances.decay_tol);
  const bool ok = std::isfinite(v.sup_uq) && v.tail_max < 1e-2 && v.is_untraceable;
  return {ok, "sup|u_q|=" + fmt(v.sup_uq) + " tail_max[8,10]=" + fmt(v.tail_max) +
                  " (need < 1e-2) untraceable=" + (v.is_untraceable ? "true" : "false")};
}

// 3. Example 2: y_p grows over horizons 10, 20, 40; sup|u_q| < 3; u_c tail decays.
Outcome ex2_growth() {
  std::vector<double> peaks;
  bool monotone = true;
  double sup_uq = 0.0;
  std::optional<StealthVerdict> uc_verdict;
  for (double horizon : {10.0, 20.0, 40.0}) {
    SystemConfig cfg = preset_ex2();
    cfg.grid = TimeGrid(horizon, 1e-3);
    const Trajectories tr = simulate(cfg);
    peaks.push_back(sup_norm(tr.y_p));
    const auto y = tr.y_p.values();
    // |y_p| non-decreasing over the last half of the run.
    for (std::size_t k = y.size() / 2 + 1; k < y.size(); ++k) monotone = monotone && std::abs(y[k]) >= std::abs(y[k - 1]);
    if (horizon == 10.0) {
      sup_uq = sup_norm(tr.u_q);
      uc_verdict = stealth_verdict(tr.u_c, cfg.epsilon, cfg.tail_fraction, cfg.tolerances.decay_tol);
    }
  }
  const bool growing = monotone && peaks[1] > 1.5 * peaks[0] && peaks[2] > 1.5 * peaks[1];
  const bool ok = growing && sup_uq < 3.0 && uc_verdict->decay.is_decaying;
  return {ok, "sup|y_p| over T=10,20,40: " + fmt(peaks[0]) + ", " + fmt(peaks[1]) + ", " + fmt(peaks[2]) +
                  (growing ? " (growing)" : " (not growing)") + " sup|u_q|=" + fmt(sup_uq) +
                  " u_c tail_max=" + fmt(uc_verdict->tail_max) + " vs threshold " +
                  fmt(uc_verdict->decay.threshold)};
}

// 4. ODE vs integral-equation u_q: diff <= 5e-3 at dt = 1e-3, shrinking >= 3x at dt/2.
Outcome cross_method() {
  std::vector<std::pair<std::string, SystemConfig>> cases;
  for (int a : {0, 1, 2}) cases.emplace_back("ex1 a=" + std::to_string(a), ex1_with(a, 1.0));
  cases.emplace_back("ex2 a=1", preset_ex2());
  bool ok = true;
  std::string detail;
  for (const auto& [name, cfg] : cases) {
    const CrossValidation cv = cross_validate(cfg, true);
    const bool pass = cv.sup_diff <= 5e-3 && cv.ratio && *cv.ratio >= 3.0;
    ok = ok && pass;
    detail += name + ": diff=" + fmt(cv.sup_diff) + " ratio=" + (cv.ratio ? fmt(*cv.ratio) : "n/a") + "; ";
  }
  return {ok, detail};
}

// 5. G = -1, phi = 1 reproduces exp(-t).
Outcome analytic_lvie() {
  auto err = [](double dt) {
    const TimeGrid g(5.0, dt);
    const auto k = KernelTable::from_function(g, [](double, double) { return -1.0; });
    const Signal x = solve_lvie(k, Signal::sample(g, [](double) { return 1.0; }));
    double e = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) e = std::max(e, std::abs(x[i] - std::exp(-g[i])));
    return e;
  };
  const double e1 = err(1e-3), e2 = err(5e-4);
  const double ratio = e1 / e2;
  return {e1 <= 1e-5 && ratio >= 3.5 && ratio <= 4.5, "sup err=" + fmt(e1) + " ratio=" + fmt(ratio)};
}

// 6. Iterates of |G| = 0.5 against 0.5^v (t - tau)^(v-1) / (v-1)!.
Outcome iterated_kernel() {
  const TimeGrid g(2.0, 1e-3);
  const double lambda = 0.5;
  const auto k = KernelTable::from_function(g, [&](double, double) { return lambda; });
  bool ok = true;
  std::string detail;
  KernelTable gv = k;
  for (int v = 2; v <= 3; ++v) {
    gv = compose_kernels(k, gv);
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        const double oracle = std::pow(lambda, v) * ipow(g[i] - g[j], v - 1) / factorial(v - 1);
        diff = std::max(diff, std::abs(gv(i, j) - oracle));
        scale = std::max(scale, std::abs(oracle));
      }
    }
    ok = ok && diff <= 1e-4 * scale;
    detail += "v=" + std::to_string(v) + " rel=" + fmt(diff / scale) + "; ";
  }
  return {ok, detail};
}

// 7. Condition suite on both presets.
Outcome condition_suite() {
  ConditionOptions raw;
  ConditionOptions abs_opt;
  abs_opt.mode = KernelMode::absolute;
  std::string detail;
  bool ok = true;
  auto status = [](const ConditionReport& r, const std::string& name) {
    const ConditionEntry* e = r.find(name);
    return e ? e->status : CheckStatus::fail;
  };
  {
    const SystemConfig cfg = preset_ex1();
    const LoopKernels k = build_loop_kernels(cfg);
    const ConditionReport r = run_condition_suite(k, cfg.q, raw);
    for (const char* name : {"controller.unit_head_bounded", "kernel.dominance", "controller.unit_head_decay",
                             "controller.small_head", "loop.bounded_rows", "loop.iterated_kernel",
                             "loop.vanishing_head"}) {
      const CheckStatus s = status(r, name);
      if (s != CheckStatus::pass) {
        ok = false;
        detail += std::string("ex1 ") + name + "=" + to_string(s) + "; ";
      }
    }
  }
  {
    const SystemConfig cfg = preset_ex2();
    const LoopKernels k = build_loop_kernels(cfg);
    const ConditionReport r = run_condition_suite(k, cfg.q, raw);
    const CheckStatus dom = status(r, "kernel.dominance");
    ok = ok && dom == CheckStatus::fail;
    detail += std::string("ex2 raw dominance=") + to_string(dom) + "; ";
    const ConditionReport a = run_condition_suite(k, cfg.q, abs_opt);
    const bool abs_pass = !a.any_fail() && status(a, "kernel.dominance") == CheckStatus::pass &&
                          status(a, "controller.unit_head_bounded") == CheckStatus::pass;
    ok = ok && abs_pass;
    detail += std::string("ex2 abs ") + (abs_pass ? "pass" : "not pass");
  }
  return {ok, detail};
}

// 8. u_q(.; 2h) = 2 u_q(.; h) for 20 random (a <= q, h) on Example 1.
Outcome homogeneity() {
  const SystemConfig cfg = preset_ex1();
  const LoopKernels k = build_loop_kernels(cfg);
  std::mt19937 rng(20240601);
  std::uniform_int_distribution<int> a_dist(0, cfg.q);
  std::uniform_real_distribution<double> h_dist(-5.0, 5.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int a = a_dist(rng);
    const double h = h_dist(rng);
    const Signal x1 = uq_via_lvie(k.g_cpq, k.g_c, {a, h});
    const Signal x2 = uq_via_lvie(k.g_cpq, k.g_c, {a, 2.0 * h});
    double diff = 0.0;
    for (std::size_t i = 0; i < x1.size(); ++i) diff = std::max(diff, std::abs(x2[i] - 2.0 * x1[i]));
    worst = std::max(worst, diff / sup_norm(x2));
  }
  return {worst <= 1e-9, "worst relative deviation=" + fmt(worst)};
}

// 9. Binomial identity and the uniform-convergence probe on Example 1 (q = 2).
Outcome convergence_probes() {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  double worst = 0.0;
  for (int q = 1; q <= 5; ++q) {
    for (int k = 0; k < 200; ++k) {
      const auto [lhs, rhs] = binomial_shift_identity(u(rng), u(rng), q);
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
  }
  const SystemConfig cfg = preset_ex1();
  const KernelTable g_c = impulse_kernel(cfg.controller, cfg.grid);
  const UniformProbe p = uniform_convergence_probe(g_c, 2, {0.4, 0.2, 0.1});
  const auto& d = p.trend.values;
  const bool decreasing = d[0] > d[1] && d[1] > d[2];
  const bool bounded = p.within_bound.value_or(false);
  return {worst <= 1e-12 && decreasing && bounded,
          "binomial rel err=" + fmt(worst) + " dev(0.4,0.2,0.1)=" + fmt(d[0]) + ", " + fmt(d[1]) + ", " +
              fmt(d[2]) + " M=" + fmt(p.moment_bound.value_or(NAN)) + " within T*q*M=" + (bounded ? "yes" : "no")};
}

// 10. Sweep a = 0..3 at q = 2 on Example 1.
Outcome boundary_sweep() {
  const auto rows = run_sweep(preset_ex1(), SweepSpec{{0, 1, 2, 3}, {1.0}, {2}});
  bool ok = rows.size() == 4;
  std::string detail;
  for (const auto& r : rows) {
    const StealthClass c = stealth_class(r.verdict);
    bool row_ok = false;
    if (r.a <= 1) row_ok = c == StealthClass::untraceable;
    if (r.a == 2) row_ok = c == StealthClass::epsilon_stealthy;
    if (r.a == 3) row_ok = r.tail == TailClass::growing && c != StealthClass::untraceable;
    ok = ok && row_ok;
    detail += "a=" + std::to_string(r.a) + ":" + to_string(c) + "/" + to_string(r.tail) + " (sup " +
              fmt(r.verdict.sup_uq) + ") ";
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "example 1 epsilon-stealth", 30, ex1_epsilon_stealth},
      {2, "example 1 untraceable stealth", 30, ex1_untraceable},
      {3, "example 2 output growth", 60, ex2_growth},
      {4, "ODE / integral-equation equivalence", 0, cross_method},
      {5, "analytic integral-equation oracle", 0, analytic_lvie},
      {6, "iterated-kernel oracle", 0, iterated_kernel},
      {7, "condition suite on presets", 0, condition_suite},
      {8, "homogeneity in h", 0, homogeneity},
      {9, "binomial identity and uniform-convergence probe", 0, convergence_probes},
      {10, "attack-degree boundary sweep", 180, boundary_sweep},
  };
  int only = 0;
  for (int k = 1; k < argc; ++k) {
    const std::string arg = argv[k];
    if (arg == "--criterion" && k + 1 < argc) {
      only = std::atoi(argv[++k]);
    } else {
      std::cerr << "usage: acceptance [--criterion N]\n";
      return 2;
    }
  }
  warning_sink() = [](const std::string&) {};
  bool all_pass = true;
  bool ran = false;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    ran = true;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0 && secs > c.time_limit_s) {
      o.pass = false;
      o.detail += " [runtime " + fmt(secs) + " s exceeds " + fmt(c.time_limit_s) + " s]";
    }
    all_pass = all_pass && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.title << "): " << o.detail
              << " [" << fmt(secs) << " s]" << std::endl;
  }
  if (!ran) {
    std::cerr << "no such criterion\n";
    return 2;
  }
  return all_pass ? 0 : 1;
}
