#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vstealth/attack.hpp"
#include "vstealth/closedloop.hpp"
#include "vstealth/core.hpp"
#include "vstealth/parallel.hpp"

namespace vstealth {

struct SweepSpec {
  std::vector<int> a_values;
  std::vector<double> h_values;
  /// Empty: use the base config's q.
  std::vector<int> q_values;
};

struct SweepRow {
  int a = 0;
  double h = 0.0;
  int q = 1;
  StealthVerdict verdict;
  TailClass tail = TailClass::bounded;
};

enum class StealthClass { untraceable, epsilon_stealthy, not_stealthy };

inline const char* to_string(StealthClass c) {
  switch (c) {
    case StealthClass::untraceable: return "untraceable";
    case StealthClass::epsilon_stealthy: return "epsilon-stealthy";
    case StealthClass::not_stealthy: return "not-stealthy";
  }
  return "?";
}

inline StealthClass stealth_class(const StealthVerdict& v) {
  if (v.is_untraceable) return StealthClass::untraceable;
  return v.is_epsilon_stealthy ? StealthClass::epsilon_stealthy : StealthClass::not_stealthy;
}

/// Runs every (a, h, q) combination through the integral-equation path. g_c
/// and G_cpq are built once per q; the (a, h) solves share them read-only.
/// Rows come back ordered by q, then a, then h.
inline std::vector<SweepRow> run_sweep(const SystemConfig& base, const SweepSpec& spec) {
  if (spec.a_values.empty() || spec.h_values.empty()) {
    throw ConfigError("sweep needs at least one a value and one h value");
  }
  for (int a : spec.a_values) {
    if (a < 0) throw ConfigError("sweep: a values must be >= 0");
  }
  const std::vector<int> qs = spec.q_values.empty() ? std::vector<int>{base.q} : spec.q_values;
  base.validate();
  std::vector<SweepRow> rows;
  for (int q : qs) {
    if (q < 1) throw ConfigError("sweep: q values must be >= 1");
    SystemConfig cfg = base;
    cfg.q = q;
    const LoopKernels k = build_loop_kernels(cfg);
    const std::size_t first = rows.size();
    for (int a : spec.a_values) {
      for (double h : spec.h_values) rows.push_back(SweepRow{a, h, q, {}, TailClass::bounded});
    }
    detail::parallel_for(first, rows.size(), [&](std::size_t r) {
      SweepRow& row = rows[r];
      const Signal u_q = uq_via_lvie(k.g_cpq, k.g_c, AttackSpec{row.a, row.h});
      row.verdict = stealth_verdict(u_q, cfg.epsilon, cfg.tail_fraction, cfg.tolerances.decay_tol);
      row.tail = classify_tail(row.verdict.decay);
    });
  }
  return rows;
}

/// (a, q) -> class label; "mixed" when the h values disagree.
inline std::map<std::pair<int, int>, std::string> sweep_summary(const std::vector<SweepRow>& rows) {
  std::map<std::pair<int, int>, std::string> out;
  for (const auto& r : rows) {
    const std::string label = std::string(to_string(stealth_class(r.verdict))) + "/" + to_string(r.tail);
    auto [it, inserted] = out.emplace(std::make_pair(r.a, r.q), label);
    if (!inserted && it->second != label) it->second = "mixed";
  }
  return out;
}

}  // namespace vstealth
