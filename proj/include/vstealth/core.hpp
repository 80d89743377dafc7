#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace vstealth {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of an operation (tau > t, q < 1, bad window).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Two operands were sampled on different grids.
class GridMismatch : public DomainError {
 public:
  GridMismatch() : DomainError("grid mismatch: operands must share one time grid") {}
};

/// A coefficient function produced a non-finite value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown: singular implicit step, non-finite intermediate.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent configuration document.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Time grid
// ---------------------------------------------------------------------------

/// Uniform grid t_k = k*dt on [0, t_end]. n = floor(t_end/dt) + 1.
class TimeGrid {
 public:
  TimeGrid(double t_end, double dt) : t_end_(t_end), dt_(dt) {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
      throw DomainError("TimeGrid: t_end must be positive and finite");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
      throw DomainError("TimeGrid: dt must be positive and finite");
    }
    // Relative slack so that e.g. 10/1e-3 counts 10001 nodes, not 10000.
    const double ratio = t_end / dt;
    n_ = static_cast<std::size_t>(std::floor(ratio * (1.0 + 1e-12))) + 1;
    if (n_ < 2) {
      throw DomainError("TimeGrid: need at least two nodes (dt > t_end)");
    }
  }

  double t_end() const { return t_end_; }
  double dt() const { return dt_; }
  std::size_t size() const { return n_; }
  double operator[](std::size_t k) const { return static_cast<double>(k) * dt_; }
  /// Time of the last node; equals t_end when t_end is a multiple of dt.
  double last() const { return (*this)[n_ - 1]; }

  /// Nearest node index for time t, clamped to the grid.
  std::size_t index_of(double t) const {
    if (t <= 0.0) return 0;
    const auto k = static_cast<std::size_t>(std::llround(t / dt_));
    return std::min(k, n_ - 1);
  }

  /// Same grid with half the step over the same horizon.
  TimeGrid refined() const { return TimeGrid(t_end_, dt_ / 2.0); }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.n_ == b.n_ && a.dt_ == b.dt_;
  }

 private:
  double t_end_;
  double dt_;
  std::size_t n_;
};

// ---------------------------------------------------------------------------
// Signal
// ---------------------------------------------------------------------------

/// Uniformly sampled scalar trajectory. Values are finite by construction.
class Signal {
 public:
  Signal(TimeGrid grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw DomainError("Signal: value count does not match grid size");
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (!std::isfinite(values_[k])) {
        std::ostringstream msg;
        msg << "Signal: non-finite value at t = " << grid_[k];
        throw NumericalError(msg.str());
      }
    }
  }

  static Signal zeros(TimeGrid grid) {
    return Signal(grid, std::vector<double>(grid.size(), 0.0));
  }

  template <typename F>
  static Signal sample(TimeGrid grid, F&& f) {
    std::vector<double> v(grid.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = f(grid[k]);
    return Signal(grid, std::move(v));
  }

  const TimeGrid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  double back() const { return values_.back(); }

  Signal scaled(double c) const {
    std::vector<double> v(values_);
    for (double& x : v) x *= c;
    return Signal(grid_, std::move(v));
  }

 private:
  TimeGrid grid_;
  std::vector<double> values_;
};

inline double sup_norm(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

inline double sup_norm(const Signal& s) { return sup_norm(s.values()); }

// ---------------------------------------------------------------------------
// Tail diagnostics
// ---------------------------------------------------------------------------

inline constexpr double kDefaultDecayTol = 1e-3;
inline constexpr double kDecayFloor = 1e-9;
inline constexpr double kDefaultTailFraction = 0.2;
inline constexpr std::size_t kTailWindows = 4;

struct DecayMetric {
  double tail_max = 0.0;
  /// Absolute threshold the tail was compared against.
  double threshold = 0.0;
  std::array<double, kTailWindows> window_max{};
  bool non_increasing = false;
  bool is_decaying = false;
};

/// Tail test over the last `tail_fraction` of a sequence sampled at `times`.
/// The tail is split into four equal windows; decay means the window maxima
/// never increase and the tail maximum is below
/// max(decay_tol * reference, 1e-9). `reference` defaults to the sup-norm of
/// the whole sequence.
inline DecayMetric tail_decay(std::span<const double> values, std::span<const double> times,
                              double tail_fraction, double decay_tol = kDefaultDecayTol,
                              std::optional<double> reference = std::nullopt) {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) {
    throw DomainError("decay_metric: tail_fraction must lie in (0, 1)");
  }
  if (values.size() != times.size() || values.empty()) {
    throw DomainError("decay_metric: empty or inconsistent sequence");
  }
  const double t0 = times.front();
  const double t1 = times.back();
  const double start = t1 - tail_fraction * (t1 - t0);
  std::size_t first = 0;
  while (first < times.size() && times[first] < start - 1e-12 * std::max(1.0, std::abs(start))) {
    ++first;
  }
  const std::size_t count = times.size() - first;
  if (count < 2 * kTailWindows) {
    throw DomainError("insufficient horizon: tail holds fewer than 8 samples");
  }

  DecayMetric out;
  for (std::size_t w = 0; w < kTailWindows; ++w) {
    const std::size_t lo = first + w * count / kTailWindows;
    const std::size_t hi = first + (w + 1) * count / kTailWindows;
    out.window_max[w] = sup_norm(values.subspan(lo, hi - lo));
  }
  out.tail_max = *std::max_element(out.window_max.begin(), out.window_max.end());
  out.non_increasing = true;
  for (std::size_t w = 1; w < kTailWindows; ++w) {
    if (out.window_max[w] > out.window_max[w - 1]) out.non_increasing = false;
  }
  const double ref = reference.value_or(sup_norm(values));
  out.threshold = std::max(decay_tol * ref, kDecayFloor);
  out.is_decaying = out.non_increasing && out.tail_max < out.threshold;
  return out;
}

inline std::vector<double> node_times(const TimeGrid& grid) {
  std::vector<double> t(grid.size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = grid[k];
  return t;
}

inline DecayMetric decay_metric(const Signal& s, double tail_fraction,
                                double decay_tol = kDefaultDecayTol) {
  const auto times = node_times(s.grid());
  return tail_decay(s.values(), times, tail_fraction, decay_tol);
}

// ---------------------------------------------------------------------------
// Coefficient functions
// ---------------------------------------------------------------------------

/// Polynomial in t with ascending coefficients c0 + c1 t + c2 t^2 + ...
struct Polynomial {
  std::vector<double> coeffs;

  double operator()(double t) const {
    double v = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * t + *it;
    return v;
  }
  bool is_constant() const {
    return std::all_of(coeffs.begin() + std::min<std::size_t>(1, coeffs.size()), coeffs.end(),
                       [](double c) { return c == 0.0; });
  }
};

/// Entry of A(t), B(t) or C(t): poly(t), optionally times exp(exp_arg(t)).
struct Coefficient {
  Polynomial poly;
  std::optional<Polynomial> exp_arg;

  Coefficient() = default;
  Coefficient(double c) : poly{{c}} {}  // NOLINT: implicit from constant
  explicit Coefficient(Polynomial p, std::optional<Polynomial> e = std::nullopt)
      : poly(std::move(p)), exp_arg(std::move(e)) {}

  static Coefficient polynomial(std::vector<double> c) { return Coefficient(Polynomial{std::move(c)}); }

  double operator()(double t) const {
    double v = poly(t);
    if (exp_arg) v *= std::exp((*exp_arg)(t));
    return v;
  }
  bool is_constant() const { return !exp_arg && poly.is_constant(); }
};

// ---------------------------------------------------------------------------
// System descriptions
// ---------------------------------------------------------------------------

enum class Representation { constant, polynomial, expression };

/// SISO LTV realization  x' = A(t) x + B(t) u,  y = C(t) x.
class LtvStateSpace {
 public:
  LtvStateSpace(std::size_t n_states, std::vector<Coefficient> a, std::vector<Coefficient> b,
                std::vector<Coefficient> c)
      : n_(n_states), a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
    if (n_ == 0) throw DomainError("LtvStateSpace: need at least one state");
    if (a_.size() != n_ * n_) throw DomainError("LtvStateSpace: A must be n x n");
    if (b_.size() != n_) throw DomainError("LtvStateSpace: B must be n x 1");
    if (c_.size() != n_) throw DomainError("LtvStateSpace: C must be 1 x n");
  }

  /// Scalar system x' = a(t) x + b(t) u, y = c(t) x.
  static LtvStateSpace scalar(Coefficient a, Coefficient b, Coefficient c) {
    return LtvStateSpace(1, {std::move(a)}, {std::move(b)}, {std::move(c)});
  }

  std::size_t states() const { return n_; }
  const std::vector<Coefficient>& a_entries() const { return a_; }
  const std::vector<Coefficient>& b_entries() const { return b_; }
  const std::vector<Coefficient>& c_entries() const { return c_; }

  /// Row-major A(t) into out (size n*n).
  void eval_a(double t, std::span<double> out) const { eval(a_, t, out, "A"); }
  void eval_b(double t, std::span<double> out) const { eval(b_, t, out, "B"); }
  void eval_c(double t, std::span<double> out) const { eval(c_, t, out, "C"); }

  Representation representation() const {
    bool constant = true;
    for (const auto* group : {&a_, &b_, &c_}) {
      for (const auto& e : *group) {
        if (e.exp_arg) return Representation::expression;
        if (!e.is_constant()) constant = false;
      }
    }
    return constant ? Representation::constant : Representation::polynomial;
  }

 private:
  static void eval(const std::vector<Coefficient>& entries, double t, std::span<double> out,
                   const char* name) {
    for (std::size_t k = 0; k < entries.size(); ++k) {
      out[k] = entries[k](t);
      if (!std::isfinite(out[k])) {
        std::ostringstream msg;
        msg << "coefficient " << name << "[" << k << "] is not finite at t = " << t;
        throw EvaluationError(msg.str());
      }
    }
  }

  std::size_t n_;
  std::vector<Coefficient> a_;
  std::vector<Coefficient> b_;
  std::vector<Coefficient> c_;
};

/// Unity plant: y_p == u_p, impulse response is a Dirac delta.
struct UnityPlant {};

using PlantSpec = std::variant<UnityPlant, LtvStateSpace>;

inline bool is_unity(const PlantSpec& p) { return std::holds_alternative<UnityPlant>(p); }

/// Polynomial attack y_a(t) = h t^a / a!.
struct AttackSpec {
  int a = 0;
  double h = 0.0;
};

struct Tolerances {
  /// Relative decay threshold (times the signal's sup-norm), floored at 1e-9.
  double decay_tol = kDefaultDecayTol;
  double nonneg_tol = 1e-12;
  /// Magnitude above which a simulated state counts as unbounded growth.
  double sup_guard = 1e12;
  /// Cross-validation threshold between ODE and integral-equation u_q.
  double xval_tol = 5e-3;
};

struct SystemConfig {
  PlantSpec plant = UnityPlant{};
  LtvStateSpace controller = LtvStateSpace::scalar(-1.0, 1.0, 1.0);
  int q = 1;
  AttackSpec attack;
  TimeGrid grid{1.0, 1e-3};
  Tolerances tolerances;
  /// Anomaly-detector bound used for verdicts; the model itself does not fix one.
  double epsilon = 1.0;
  double tail_fraction = kDefaultTailFraction;

  void validate() const {
    if (q < 1) throw ConfigError("q must be >= 1");
    if (attack.a < 0) throw ConfigError("attack.a must be >= 0");
    if (!std::isfinite(attack.h)) throw ConfigError("attack.h must be finite");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
    if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) {
      throw ConfigError("tail_fraction must lie in (0, 1)");
    }
  }
};

// ---------------------------------------------------------------------------
// Small numeric helpers
// ---------------------------------------------------------------------------

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Integer power by repeated multiplication; pow(0, 0) == 1.
inline double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

}  // namespace vstealth
