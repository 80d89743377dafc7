// volterra-stealth: simulate, check and sweep polynomial sensor attacks on
// LTV loops with integrator chains.
//
// Exit codes: 0 ok, 1 a condition check failed, 2 usage/config error,
// 3 numerical error.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vstealth/vstealth.hpp"

namespace fs = std::filesystem;
using namespace vstealth;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConditionFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::string out_dir = ".";
  std::optional<double> dt;
  std::optional<double> t_end;
  std::optional<int> attack_degree;
  std::optional<double> attack_weight;
  std::optional<double> epsilon;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "System config JSON");
  cmd->add_option("--preset", o.preset, "Built-in example config")->check(CLI::IsMember({"ex1", "ex2"}));
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_option("--dt", o.dt, "Grid step (overrides config)");
  cmd->add_option("--t-end", o.t_end, "Horizon (overrides config)");
  cmd->add_option("--attack-degree", o.attack_degree, "Attack polynomial degree a");
  cmd->add_option("--attack-weight", o.attack_weight, "Attack weight h");
  cmd->add_option("--epsilon", o.epsilon, "Anomaly-detector bound");
}

SystemConfig resolve_config(const CommonOptions& o) {
  if (o.config_path.empty() == o.preset.empty()) {
    throw ConfigError("give exactly one of --config PATH or --preset ex1|ex2");
  }
  SystemConfig cfg = o.preset.empty() ? load_config(o.config_path) : preset(o.preset);
  if (o.dt || o.t_end) {
    try {
      cfg.grid = TimeGrid(o.t_end.value_or(cfg.grid.t_end()), o.dt.value_or(cfg.grid.dt()));
    } catch (const DomainError& e) {
      throw ConfigError(std::string("--dt/--t-end: ") + e.what());
    }
  }
  if (o.attack_degree) cfg.attack.a = *o.attack_degree;
  if (o.attack_weight) cfg.attack.h = *o.attack_weight;
  if (o.epsilon) cfg.epsilon = *o.epsilon;
  cfg.validate();
  return cfg;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write '" + p.string() + "'");
  return os;
}

int cmd_simulate(const CommonOptions& o, bool plots, bool refine) {
  const SystemConfig cfg = resolve_config(o);
  const fs::path out = prepare_out(o.out_dir);

  const Trajectories tr = simulate(cfg);
  if (tr.growth) std::cout << "note: " << tr.growth->message() << " (|state| > sup_guard)\n";
  const Signal lvie = uq_via_lvie(cfg);
  const CrossValidation cv = cross_validate(cfg, tr.u_q, lvie, refine);
  const StealthVerdict v = stealth_verdict(tr.u_q, cfg.epsilon, cfg.tail_fraction, cfg.tolerances.decay_tol);

  {
    auto os = open_out(out / "trajectories.csv");
    write_trajectories_csv(os, tr);
  }
  json doc = verdict_json(v, cfg);
  doc["uq_source"] = "ode";
  doc["sup_uq_lvie"] = sup_norm(lvie);
  doc["cross_validation"] = to_json(cv);
  doc["growth_detected"] = tr.growth.has_value();
  if (tr.growth) doc["growth_time"] = tr.growth->t;
  {
    auto os = open_out(out / "verdict.json");
    os << doc.dump(2) << '\n';
  }
  if (plots) {
    const std::pair<const char*, const Signal*> series[] = {
        {"u_q", &tr.u_q}, {"u_c", &tr.u_c}, {"u_p", &tr.u_p}, {"y_p", &tr.y_p}, {"y_a", &tr.y_a}};
    for (const auto& [name, sig] : series) {
      auto os = open_out(out / (std::string(name) + ".svg"));
      write_svg_plot(os, *sig, name);
    }
  }

  std::cout << std::setprecision(6) << "sup|u_q| = " << v.sup_uq << " (epsilon " << v.epsilon << "): "
            << (v.is_epsilon_stealthy ? "epsilon-stealthy" : "not epsilon-stealthy") << '\n'
            << "tail max = " << v.tail_max << " (threshold " << v.decay.threshold << "): "
            << (v.is_untraceable ? "untraceable" : "not untraceable") << '\n'
            << "ode vs integral equation: sup diff = " << cv.sup_diff;
  if (cv.ratio) std::cout << ", refinement ratio = " << *cv.ratio;
  std::cout << " [" << to_string(cv.status) << "]\n";
  return kExitOk;
}

int cmd_check(const CommonOptions& o, bool absolute) {
  const SystemConfig cfg = resolve_config(o);
  const fs::path out = prepare_out(o.out_dir);
  ConditionOptions opt;
  opt.mode = absolute ? KernelMode::absolute : KernelMode::raw;
  opt.tail_fraction = cfg.tail_fraction;
  opt.decay_tol = cfg.tolerances.decay_tol;
  opt.nonneg_tol = cfg.tolerances.nonneg_tol;
  const LoopKernels k = build_loop_kernels(cfg);
  const ConditionReport report = run_condition_suite(k, cfg.q, opt);
  json doc = to_json(report);
  doc["grid"] = grid_json(cfg.grid);
  doc["config_hash"] = config_hash(cfg);
  {
    auto os = open_out(out / "conditions.json");
    os << doc.dump(2) << '\n';
  }
  write_report_table(std::cout, report);
  return report.any_fail() ? kExitConditionFail : kExitOk;
}

SweepSpec load_sweep_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read sweep file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("sweep file is not valid JSON: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw ConfigError("sweep file must be a JSON object");
  SweepSpec s;
  try {
    if (doc.contains("a")) s.a_values = doc["a"].get<std::vector<int>>();
    if (doc.contains("h")) s.h_values = doc["h"].get<std::vector<double>>();
    if (doc.contains("q")) s.q_values = doc["q"].get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw ConfigError("sweep file: fields a, h, q must be number arrays (" + std::string(e.what()) + ")");
  }
  return s;
}

int cmd_sweep(const CommonOptions& o, const std::string& sweep_file, SweepSpec spec) {
  const SystemConfig cfg = resolve_config(o);
  if (!sweep_file.empty()) spec = load_sweep_spec(sweep_file);
  if (spec.a_values.empty() || spec.h_values.empty()) {
    throw ConfigError("empty sweep: provide a-values and h-values (--sweep FILE or --a-values/--h-values)");
  }
  const fs::path out = prepare_out(o.out_dir);
  const auto rows = run_sweep(cfg, spec);

  {
    auto os = open_out(out / "sweep.csv");
    os << "a,h,q,sup_uq,tail_max,is_epsilon_stealthy,is_untraceable\n";
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : rows) {
      os << r.a << ',' << r.h << ',' << r.q << ',' << r.verdict.sup_uq << ',' << r.verdict.tail_max << ','
         << (r.verdict.is_epsilon_stealthy ? "true" : "false") << ','
         << (r.verdict.is_untraceable ? "true" : "false") << '\n';
    }
  }
  const auto summary = sweep_summary(rows);
  std::ostringstream table;
  table << "stealth class by (a, q), epsilon = " << cfg.epsilon << " (class/tail)\n";
  for (const auto& [key, label] : summary) {
    const auto [a, q] = key;
    table << "a=" << a << " q=" << q << (a < q ? " (a<q) " : a == q ? " (a=q) " : " (a>q) ") << label << '\n';
  }
  {
    auto os = open_out(out / "sweep_summary.txt");
    os << table.str();
  }
  std::cout << table.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polynomial sensor-attack stealth analysis for LTV loops with integrator chains"};
  app.require_subcommand(1);

  CommonOptions sim_opt, check_opt, sweep_opt;
  bool plots = false, no_refine = false, absolute = false;
  std::string sweep_file;
  SweepSpec spec;

  auto* sim = app.add_subcommand("simulate", "ODE and integral-equation runs, verdict and trajectories");
  add_common(sim, sim_opt);
  sim->add_flag("--plots", plots, "Write SVG plots of each signal");
  sim->add_flag("--no-refine", no_refine, "Skip the dt/2 cross-validation run");

  auto* check = app.add_subcommand("check", "Kernel condition suite");
  add_common(check, check_opt);
  check->add_flag("--abs", absolute, "Run checks on |G| (sufficiency-only)");

  auto* sweep = app.add_subcommand("sweep", "Stealth classification over attack parameters");
  add_common(sweep, sweep_opt);
  sweep->add_option("--sweep", sweep_file, "JSON file with arrays a, h and optionally q");
  sweep->add_option("--a-values", spec.a_values, "Attack degrees")->delimiter(',');
  sweep->add_option("--h-values", spec.h_values, "Attack weights")->delimiter(',');
  sweep->add_option("--q-values", spec.q_values, "Integrator counts")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(sim_opt, plots, !no_refine);
    if (*check) return cmd_check(check_opt, absolute);
    if (*sweep) return cmd_sweep(sweep_opt, sweep_file, spec);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const EvaluationError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::bad_alloc&) {
    std::cerr << "numerical error: out of memory (kernel tables scale as n^2; use a coarser grid)\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
