#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "vstealth/core.hpp"
#include "vstealth/parallel.hpp"

namespace vstealth {

/// Dense lower-triangular table G(t_i, tau_j), j <= i, on a uniform grid.
/// Storage is packed row-wise; row i holds i + 1 entries.
class KernelTable {
 public:
  explicit KernelTable(TimeGrid grid)
      : grid_(grid), data_(grid.size() * (grid.size() + 1) / 2, 0.0) {}

  template <typename F>
  static KernelTable from_function(TimeGrid grid, F&& f) {
    KernelTable k(grid);
    for (std::size_t i = 0; i < k.size(); ++i) {
      auto r = k.row(i);
      for (std::size_t j = 0; j <= i; ++j) r[j] = f(grid[i], grid[j]);
    }
    k.check_finite();
    return k;
  }

  const TimeGrid& grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }

  double operator()(std::size_t i, std::size_t j) const { return data_[offset(i) + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[offset(i) + j]; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + offset(i), i + 1}; }
  std::span<double> row(std::size_t i) { return {data_.data() + offset(i), i + 1}; }

  KernelTable abs() const {
    KernelTable out(*this);
    for (double& v : out.data_) v = std::abs(v);
    return out;
  }

  double min_entry() const {
    double m = data_.empty() ? 0.0 : data_.front();
    for (double v : data_) m = std::min(m, v);
    return m;
  }

  void check_finite() const {
    for (std::size_t i = 0; i < size(); ++i) {
      for (double v : row(i)) {
        if (!std::isfinite(v)) {
          throw NumericalError("kernel table holds a non-finite entry in row t = " +
                               std::to_string(grid_[i]));
        }
      }
    }
  }

 private:
  static std::size_t offset(std::size_t i) { return i * (i + 1) / 2; }

  TimeGrid grid_;
  std::vector<double> data_;
};

inline void require_same_grid(const TimeGrid& a, const TimeGrid& b) {
  if (!(a == b)) throw GridMismatch();
}

/// Writes the lower triangle as `t,tau,value` rows.
inline void write_kernel_csv(std::ostream& os, const KernelTable& k) {
  os << "t,tau,value\n";
  os.precision(17);
  for (std::size_t i = 0; i < k.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      os << k.grid()[i] << ',' << k.grid()[j] << ',' << k(i, j) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// State-transition matrix
// ---------------------------------------------------------------------------

inline constexpr double kMaxOdeStep = 1e-3;

/// Phi(t, tau) from dPhi/dt = A(t) Phi, Phi(tau, tau) = I, integrated with
/// classical RK4 on uniform sub-steps no longer than `max_step`.
inline Eigen::MatrixXd transition_matrix(const LtvStateSpace& sys, double t, double tau,
                                         double max_step = kMaxOdeStep) {
  if (tau > t) throw DomainError("transition_matrix: tau must not exceed t");
  if (tau < 0.0) throw DomainError("transition_matrix: tau must be >= 0");
  if (!(max_step > 0.0)) throw DomainError("transition_matrix: step must be positive");
  const auto n = static_cast<Eigen::Index>(sys.states());
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
  if (t == tau) return phi;

  const auto steps = static_cast<std::size_t>(std::ceil((t - tau) / max_step - 1e-9));
  const double h = (t - tau) / static_cast<double>(steps);
  Eigen::MatrixXd a0(n, n), am(n, n), a1(n, n);
  auto load = [&](double s, Eigen::MatrixXd& m) {
    // Eigen is column-major; eval_a fills row-major.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> tmp(n, n);
    sys.eval_a(s, {tmp.data(), static_cast<std::size_t>(n * n)});
    m = tmp;
  };
  load(tau, a0);
  for (std::size_t k = 0; k < steps; ++k) {
    const double s = tau + static_cast<double>(k) * h;
    load(s + 0.5 * h, am);
    load(s + h, a1);
    const Eigen::MatrixXd k1 = a0 * phi;
    const Eigen::MatrixXd k2 = am * (phi + 0.5 * h * k1);
    const Eigen::MatrixXd k3 = am * (phi + 0.5 * h * k2);
    const Eigen::MatrixXd k4 = a1 * (phi + h * k3);
    phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    a0 = a1;
  }
  if (!phi.allFinite()) throw NumericalError("transition_matrix: non-finite result");
  return phi;
}

namespace detail {

/// A(t) sampled at every RK4 stage time of a grid with `substeps` sub-steps per
/// interval: index s <-> time s * dt / (2 * substeps).
struct SampledDynamics {
  std::size_t n = 0;
  std::size_t substeps = 1;
  double h = 0.0;  // sub-step length
  std::vector<double> a;      // (2 * substeps * (N - 1) + 1) blocks of n*n
  std::vector<double> b;      // N blocks of n, at grid nodes
  std::vector<double> c;      // N blocks of n, at grid nodes

  SampledDynamics(const LtvStateSpace& sys, const TimeGrid& grid) : n(sys.states()) {
    substeps = static_cast<std::size_t>(std::ceil(grid.dt() / kMaxOdeStep - 1e-9));
    substeps = std::max<std::size_t>(substeps, 1);
    h = grid.dt() / static_cast<double>(substeps);
    const std::size_t samples = 2 * substeps * (grid.size() - 1) + 1;
    a.resize(samples * n * n);
    for (std::size_t s = 0; s < samples; ++s) {
      sys.eval_a(static_cast<double>(s) * 0.5 * h, {a.data() + s * n * n, n * n});
    }
    b.resize(grid.size() * n);
    c.resize(grid.size() * n);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      sys.eval_b(grid[k], {b.data() + k * n, n});
      sys.eval_c(grid[k], {c.data() + k * n, n});
    }
  }

  const double* a_at(std::size_t sample) const { return a.data() + sample * n * n; }
  const double* b_at(std::size_t node) const { return b.data() + node * n; }
  const double* c_at(std::size_t node) const { return c.data() + node * n; }
};

inline void matvec(const double* m, const double* x, double* y, std::size_t n) {
  for (std::size_t r = 0; r < n; ++r) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += m[r * n + k] * x[k];
    y[r] = acc;
  }
}

inline double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
  return acc;
}

/// One RK4 step of z' = A(t) z from stage sample s0 (A at s0, s0+1, s0+2).
inline void rk4_linear_step(const SampledDynamics& d, std::size_t s0, std::vector<double>& z,
                            std::vector<double>& work) {
  const std::size_t n = d.n;
  double* k1 = work.data();
  double* k2 = k1 + n;
  double* k3 = k2 + n;
  double* k4 = k3 + n;
  double* tmp = k4 + n;
  const double h = d.h;
  matvec(d.a_at(s0), z.data(), k1, n);
  for (std::size_t r = 0; r < n; ++r) tmp[r] = z[r] + 0.5 * h * k1[r];
  matvec(d.a_at(s0 + 1), tmp, k2, n);
  for (std::size_t r = 0; r < n; ++r) tmp[r] = z[r] + 0.5 * h * k2[r];
  matvec(d.a_at(s0 + 1), tmp, k3, n);
  for (std::size_t r = 0; r < n; ++r) tmp[r] = z[r] + h * k3[r];
  matvec(d.a_at(s0 + 2), tmp, k4, n);
  for (std::size_t r = 0; r < n; ++r) z[r] += (h / 6.0) * (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r]);
}

}  // namespace detail

/// g(t_i, tau_j) = C(t_i) Phi(t_i, tau_j) B(tau_j). Each column is one forward
/// sweep of z' = A(t) z from z(tau_j) = B(tau_j); columns run in parallel.
inline KernelTable impulse_kernel(const LtvStateSpace& sys, const TimeGrid& grid) {
  const detail::SampledDynamics d(sys, grid);
  KernelTable g(grid);
  const std::size_t n = d.n;
  const std::size_t stride = 2 * d.substeps;
  detail::parallel_for(0, grid.size(), [&](std::size_t j) {
    std::vector<double> z(d.b_at(j), d.b_at(j) + n);
    std::vector<double> work(5 * n);
    g(j, j) = detail::dot(d.c_at(j), z.data(), n);
    for (std::size_t i = j + 1; i < grid.size(); ++i) {
      // Once the state has underflowed it stays (numerically) zero; skip the
      // denormal arithmetic.
      bool underflow = true;
      for (double v : z) underflow = underflow && std::abs(v) < std::numeric_limits<double>::min();
      if (underflow) break;
      const std::size_t base = (i - 1) * stride;
      for (std::size_t s = 0; s < d.substeps; ++s) {
        detail::rk4_linear_step(d, base + 2 * s, z, work);
      }
      const double v = detail::dot(d.c_at(i), z.data(), n);
      if (!std::isfinite(v)) {
        throw NumericalError("impulse_kernel: non-finite kernel value at t = " +
                             std::to_string(grid[i]) + ", tau = " + std::to_string(grid[j]));
      }
      g(i, j) = v;
    }
  });
  return g;
}

/// Chain of q pure integrators: shift-matrix A, B = e_q, C = e_1.
inline LtvStateSpace integrator_chain_system(int q) {
  if (q < 1) throw DomainError("integrator chain needs q >= 1");
  const auto n = static_cast<std::size_t>(q);
  std::vector<Coefficient> a(n * n, Coefficient(0.0));
  for (std::size_t r = 0; r + 1 < n; ++r) a[r * n + r + 1] = Coefficient(1.0);
  std::vector<Coefficient> b(n, Coefficient(0.0));
  std::vector<Coefficient> c(n, Coefficient(0.0));
  b[n - 1] = Coefficient(1.0);
  c[0] = Coefficient(1.0);
  return LtvStateSpace(n, std::move(a), std::move(b), std::move(c));
}

/// Analytic kernel of the integrator chain, (t - tau)^(q-1) / (q-1)!.
struct IntegratorChain {
  int q = 1;

  explicit IntegratorChain(int order) : q(order) {
    if (q < 1) throw DomainError("integrator chain needs q >= 1");
  }
  double operator()(double t, double tau) const { return ipow(t - tau, q - 1) / factorial(q - 1); }
};

inline KernelTable integrator_kernel(int q, const TimeGrid& grid) {
  const IntegratorChain chain(q);
  return KernelTable::from_function(grid, chain);
}

}  // namespace vstealth
