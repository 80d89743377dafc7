#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vstealth/attack.hpp"
#include "vstealth/closedloop.hpp"
#include "vstealth/conditions.hpp"
#include "vstealth/core.hpp"

namespace vstealth {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Config JSON
// ---------------------------------------------------------------------------

namespace detail {

inline const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ConfigError("missing required field '" + (where.empty() ? "" : where + ".") + key + "'");
  }
  return *it;
}

inline double number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError("field '" + field + "' must be a number");
  return v.get<double>();
}

inline int integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ConfigError("field '" + field + "' must be an integer");
  return v.get<int>();
}

inline std::vector<double> number_list(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) throw ConfigError("field '" + field + "' must be a non-empty number array");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(number(v[k], field + "[" + std::to_string(k) + "]"));
  return out;
}

/// number | [c0, c1, ...] (polynomial, ascending) | {"poly": [...], "exp": [...]}
inline Coefficient coefficient_from_json(const json& v, const std::string& field) {
  if (v.is_number()) return Coefficient(v.get<double>());
  if (v.is_array()) return Coefficient::polynomial(number_list(v, field));
  if (v.is_object()) {
    for (const auto& [key, _] : v.items()) {
      if (key != "poly" && key != "exp") throw ConfigError("field '" + field + "': unknown key '" + key + "'");
    }
    Polynomial p{v.contains("poly") ? number_list(v["poly"], field + ".poly") : std::vector<double>{1.0}};
    std::optional<Polynomial> e;
    if (v.contains("exp")) e = Polynomial{number_list(v["exp"], field + ".exp")};
    return Coefficient(std::move(p), std::move(e));
  }
  throw ConfigError("field '" + field + "' must be a number, a coefficient array, or {\"poly\", \"exp\"}");
}

inline json coefficient_to_json(const Coefficient& c) {
  if (c.exp_arg) return json{{"poly", c.poly.coeffs}, {"exp", c.exp_arg->coeffs}};
  if (c.poly.coeffs.size() == 1) return c.poly.coeffs.front();
  return c.poly.coeffs;
}

inline std::vector<Coefficient> coefficient_vector(const json& v, std::size_t n, const std::string& field) {
  if (!v.is_array() || v.size() != n) {
    throw ConfigError("field '" + field + "' must be an array of " + std::to_string(n) + " entries");
  }
  std::vector<Coefficient> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(coefficient_from_json(v[k], field + "[" + std::to_string(k) + "]"));
  return out;
}

inline LtvStateSpace state_space_from_json(const json& v, const std::string& where) {
  const int n = integer(require(v, "states", where), where + ".states");
  if (n < 1) throw ConfigError("field '" + where + ".states' must be >= 1");
  const auto un = static_cast<std::size_t>(n);
  const json& a = require(v, "A", where);
  if (!a.is_array() || a.size() != un) {
    throw ConfigError("field '" + where + ".A' must hold " + std::to_string(n) + " rows");
  }
  std::vector<Coefficient> a_entries;
  for (std::size_t r = 0; r < un; ++r) {
    auto row = coefficient_vector(a[r], un, where + ".A[" + std::to_string(r) + "]");
    for (auto& c : row) a_entries.push_back(std::move(c));
  }
  return LtvStateSpace(un, std::move(a_entries), coefficient_vector(require(v, "B", where), un, where + ".B"),
                       coefficient_vector(require(v, "C", where), un, where + ".C"));
}

inline json state_space_to_json(const LtvStateSpace& s) {
  const std::size_t n = s.states();
  json a = json::array();
  for (std::size_t r = 0; r < n; ++r) {
    json row = json::array();
    for (std::size_t k = 0; k < n; ++k) row.push_back(coefficient_to_json(s.a_entries()[r * n + k]));
    a.push_back(row);
  }
  json b = json::array(), c = json::array();
  for (const auto& e : s.b_entries()) b.push_back(coefficient_to_json(e));
  for (const auto& e : s.c_entries()) c.push_back(coefficient_to_json(e));
  return json{{"states", n}, {"A", a}, {"B", b}, {"C", c}};
}

}  // namespace detail

inline SystemConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  SystemConfig cfg;

  const json& plant = detail::require(doc, "plant", "");
  if (plant.is_object() && plant.contains("unity")) {
    if (!plant["unity"].is_boolean() || !plant["unity"].get<bool>()) {
      throw ConfigError("field 'plant.unity' must be true (omit it for a state-space plant)");
    }
    cfg.plant = UnityPlant{};
  } else {
    cfg.plant = detail::state_space_from_json(plant, "plant");
  }
  cfg.controller = detail::state_space_from_json(detail::require(doc, "controller", ""), "controller");
  cfg.q = detail::integer(detail::require(doc, "q", ""), "q");

  const json& attack = detail::require(doc, "attack", "");
  cfg.attack.a = detail::integer(detail::require(attack, "a", "attack"), "attack.a");
  cfg.attack.h = detail::number(detail::require(attack, "h", "attack"), "attack.h");

  const json& grid = detail::require(doc, "grid", "");
  const double t_end = detail::number(detail::require(grid, "t_end", "grid"), "grid.t_end");
  const double dt = detail::number(detail::require(grid, "dt", "grid"), "grid.dt");
  try {
    cfg.grid = TimeGrid(t_end, dt);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("field 'grid': ") + e.what());
  }

  if (doc.contains("tolerances")) {
    const json& tol = doc["tolerances"];
    if (!tol.is_object()) throw ConfigError("field 'tolerances' must be an object");
    auto opt = [&](const char* key, double& dst) {
      if (tol.contains(key)) dst = detail::number(tol[key], std::string("tolerances.") + key);
    };
    opt("decay_tol", cfg.tolerances.decay_tol);
    opt("nonneg_tol", cfg.tolerances.nonneg_tol);
    opt("sup_guard", cfg.tolerances.sup_guard);
    opt("xval_tol", cfg.tolerances.xval_tol);
  }
  if (doc.contains("epsilon")) cfg.epsilon = detail::number(doc["epsilon"], "epsilon");
  if (doc.contains("tail_fraction")) cfg.tail_fraction = detail::number(doc["tail_fraction"], "tail_fraction");
  cfg.validate();
  return cfg;
}

inline SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

inline json config_to_json(const SystemConfig& cfg) {
  json doc;
  doc["plant"] = is_unity(cfg.plant) ? json{{"unity", true}}
                                     : detail::state_space_to_json(std::get<LtvStateSpace>(cfg.plant));
  doc["controller"] = detail::state_space_to_json(cfg.controller);
  doc["q"] = cfg.q;
  doc["attack"] = {{"a", cfg.attack.a}, {"h", cfg.attack.h}};
  doc["grid"] = {{"t_end", cfg.grid.t_end()}, {"dt", cfg.grid.dt()}};
  doc["tolerances"] = {{"decay_tol", cfg.tolerances.decay_tol},
                       {"nonneg_tol", cfg.tolerances.nonneg_tol},
                       {"sup_guard", cfg.tolerances.sup_guard},
                       {"xval_tol", cfg.tolerances.xval_tol}};
  doc["epsilon"] = cfg.epsilon;
  doc["tail_fraction"] = cfg.tail_fraction;
  return doc;
}

/// 64-bit FNV-1a over the canonical (key-sorted, compact) JSON form.
inline std::string config_hash(const SystemConfig& cfg) {
  const std::string text = config_to_json(cfg).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

/// Scalar controller x' = -t^2 x + u, y = x: g_c(t,tau) = exp(-(t^3 - tau^3)/3).
inline SystemConfig preset_ex1() {
  SystemConfig cfg;
  cfg.plant = UnityPlant{};
  cfg.controller = LtvStateSpace::scalar(Coefficient::polynomial({0.0, 0.0, -1.0}), 1.0, 1.0);
  cfg.q = 2;
  cfg.attack = {2, 1.0};
  cfg.grid = TimeGrid(10.0, 1e-3);
  cfg.epsilon = 0.4;
  return cfg;
}

/// Scalar controller x' = -(0.5 + 3 t^2) x + u, y = -x: a non-positive kernel.
inline SystemConfig preset_ex2() {
  SystemConfig cfg;
  cfg.plant = UnityPlant{};
  cfg.controller = LtvStateSpace::scalar(Coefficient::polynomial({-0.5, 0.0, -3.0}), 1.0, -1.0);
  cfg.q = 2;
  cfg.attack = {1, 0.1};
  cfg.grid = TimeGrid(10.0, 1e-3);
  cfg.epsilon = 3.0;
  return cfg;
}

inline SystemConfig preset(const std::string& name) {
  if (name == "ex1") return preset_ex1();
  if (name == "ex2") return preset_ex2();
  throw ConfigError("unknown preset '" + name + "' (expected ex1 or ex2)");
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

inline json grid_json(const TimeGrid& g) {
  return json{{"t_end", g.t_end()}, {"dt", g.dt()}, {"nodes", g.size()}};
}

inline json to_json(const DecayMetric& d) {
  return json{{"tail_max", d.tail_max},
              {"threshold", d.threshold},
              {"window_max", d.window_max},
              {"non_increasing", d.non_increasing},
              {"is_decaying", d.is_decaying}};
}

inline json to_json(const StealthVerdict& v) {
  return json{{"sup_uq", v.sup_uq},
              {"epsilon", v.epsilon},
              {"is_epsilon_stealthy", v.is_epsilon_stealthy},
              {"tail_max", v.tail_max},
              {"tail_fraction", v.tail_fraction},
              {"decay", to_json(v.decay)},
              {"is_untraceable", v.is_untraceable},
              {"horizon_limited", v.horizon_limited}};
}

/// Verdict with grid metadata and the config hash.
inline json verdict_json(const StealthVerdict& v, const SystemConfig& cfg) {
  json doc = to_json(v);
  doc["grid"] = grid_json(cfg.grid);
  doc["config_hash"] = config_hash(cfg);
  return doc;
}

inline json to_json(const CrossValidation& cv) {
  json doc{{"sup_diff", cv.sup_diff}, {"tolerance", cv.tolerance}, {"status", to_string(cv.status)}};
  doc["sup_diff_refined"] = cv.sup_diff_refined ? json(*cv.sup_diff_refined) : json(nullptr);
  doc["ratio"] = cv.ratio ? json(*cv.ratio) : json(nullptr);
  return doc;
}

inline json to_json(const ConditionEntry& e) {
  json w = json::object(), p = json::object();
  for (const auto& [k, v] : e.witness) w[k] = v;
  for (const auto& [k, v] : e.parameters) p[k] = v;
  json doc{{"name", e.name},
           {"description", e.description},
           {"status", to_string(e.status)},
           {"witness", w},
           {"parameters", p}};
  if (!e.reason.empty()) doc["reason"] = e.reason;
  return doc;
}

inline json to_json(const ConditionReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) entries.push_back(to_json(e));
  return json{{"mode", to_string(r.mode)}, {"horizon_limited", r.horizon_limited}, {"entries", entries}};
}

/// Fixed-width console table: name, status, first witness, reason.
inline void write_report_table(std::ostream& os, const ConditionReport& r) {
  std::size_t width = 4;
  for (const auto& e : r.entries) width = std::max(width, e.name.size());
  os << "condition report (" << to_string(r.mode) << " mode, horizon-limited)\n";
  os << std::left << std::setw(static_cast<int>(width) + 2) << "name" << std::setw(15) << "status"
     << "witness\n";
  os << std::string(width + 2 + 15 + 30, '-') << '\n';
  for (const auto& e : r.entries) {
    os << std::left << std::setw(static_cast<int>(width) + 2) << e.name << std::setw(15) << to_string(e.status);
    if (!e.witness.empty()) os << e.witness.front().first << " = " << std::setprecision(6) << e.witness.front().second;
    if (!e.reason.empty()) os << "  [" << e.reason << "]";
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// CSV / SVG
// ---------------------------------------------------------------------------

inline void write_trajectories_csv(std::ostream& os, const Trajectories& tr) {
  os << "t,u_q,u_c,u_p,y_p,y_a\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  const TimeGrid& g = tr.u_q.grid();
  for (std::size_t k = 0; k < g.size(); ++k) {
    os << g[k] << ',' << tr.u_q[k] << ',' << tr.u_c[k] << ',' << tr.u_p[k] << ',' << tr.y_p[k] << ','
       << tr.y_a[k] << '\n';
  }
}

/// Single-series line plot: polyline plus axes with min/max labels.
inline void write_svg_plot(std::ostream& os, const Signal& s, const std::string& label) {
  constexpr double w = 640, h = 360, ml = 70, mr = 20, mt = 30, mb = 40;
  const TimeGrid& g = s.grid();
  const auto v = s.values();
  double lo = *std::min_element(v.begin(), v.end());
  double hi = *std::max_element(v.begin(), v.end());
  if (hi - lo < 1e-300) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double t_max = g.last();
  auto px = [&](double t) { return ml + (w - ml - mr) * t / t_max; };
  auto py = [&](double y) { return h - mb - (h - mt - mb) * (y - lo) / (hi - lo); };
  // Decimate to at most ~2000 points; keep the per-bucket extremes.
  const std::size_t stride = std::max<std::size_t>(1, g.size() / 1000);

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << std::setprecision(6);
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
     << "\" stroke=\"black\"/>\n";
  if (lo < 0.0 && hi > 0.0) {
    os << "<line x1=\"" << ml << "\" y1=\"" << py(0.0) << "\" x2=\"" << w - mr << "\" y2=\"" << py(0.0)
       << "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";
  }
  os << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.2\" points=\"";
  for (std::size_t k = 0; k < g.size(); k += stride) {
    std::size_t kmin = k, kmax = k;
    for (std::size_t j = k; j < std::min(g.size(), k + stride); ++j) {
      if (v[j] < v[kmin]) kmin = j;
      if (v[j] > v[kmax]) kmax = j;
    }
    for (std::size_t j : {std::min(kmin, kmax), std::max(kmin, kmax)}) os << px(g[j]) << ',' << py(v[j]) << ' ';
  }
  os << px(g[g.size() - 1]) << ',' << py(v.back()) << "\"/>\n";
  auto text = [&](double x, double y, const std::string& s, const char* anchor) {
    os << "<text x=\"" << x << "\" y=\"" << y << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\""
       << anchor << "\">" << s << "</text>\n";
  };
  auto fmt = [](double x) {
    std::ostringstream o;
    o << std::setprecision(4) << x;
    return o.str();
  };
  text(w / 2, 18, label + "(t)", "middle");
  text(ml - 6, h - mb, fmt(lo), "end");
  text(ml - 6, mt + 10, fmt(hi), "end");
  text(ml, h - mb + 16, "0", "middle");
  text(w - mr, h - mb + 16, fmt(t_max), "middle");
  text(w / 2, h - 8, "t", "middle");
  os << "</svg>\n";
}

}  // namespace vstealth
