#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <iostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vstealth/core.hpp"
#include "vstealth/parallel.hpp"
#include "vstealth/stm.hpp"

namespace vstealth {

/// Sink for non-fatal diagnostics (cost warnings). Defaults to stderr.
inline std::function<void(const std::string&)>& warning_sink() {
  static std::function<void(const std::string&)> sink = [](const std::string& msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return sink;
}

inline constexpr std::size_t kComposeWarnSize = 5000;

/// Symbolic Dirac delta kernel; identity element of composition.
struct UnitImpulse {};

namespace detail {

/// Composite trapezoid of samples spaced dt.
inline double trapezoid(std::span<const double> f, double dt) {
  if (f.size() < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t k = 1; k + 1 < f.size(); ++k) s += f[k];
  return dt * s;
}

/// Exact integral over [b1, b2] of the piecewise-linear interpolant through
/// samples f[k] at k*dt. Additive over subintervals by construction.
inline double integrate_linear_interp(std::span<const double> f, double dt, double b1, double b2) {
  if (f.empty()) return 0.0;
  const double top = dt * static_cast<double>(f.size() - 1);
  const double eps = 1e-9 * dt;
  if (b1 < -eps || b2 > top + eps || b1 > b2 + eps) {
    throw DomainError("integration bounds out of order or outside the row");
  }
  b1 = std::clamp(b1, 0.0, top);
  b2 = std::clamp(b2, b1, top);
  if (b2 <= b1 || f.size() < 2) return 0.0;
  auto value_at = [&](double x) {
    const double u = x / dt;
    auto k = static_cast<std::size_t>(std::floor(u));
    if (k >= f.size() - 1) return f.back();
    const double w = u - static_cast<double>(k);
    return (1.0 - w) * f[k] + w * f[k + 1];
  };
  // Snap bounds that sit on a node (within rounding) so node-aligned calls
  // reduce to the plain composite trapezoid.
  auto snap = [&](double x) {
    const double r = std::round(x / dt);
    return std::abs(x / dt - r) < 1e-9 ? r * dt : x;
  };
  b1 = snap(b1);
  b2 = snap(b2);
  const auto k1 = static_cast<std::size_t>(std::ceil(b1 / dt - 1e-9));
  const auto k2 = static_cast<std::size_t>(std::floor(b2 / dt + 1e-9));
  if (k1 > k2) {  // both bounds inside one cell
    return 0.5 * (value_at(b1) + value_at(b2)) * (b2 - b1);
  }
  double s = 0.0;
  const double x1 = static_cast<double>(k1) * dt;
  const double x2 = static_cast<double>(k2) * dt;
  if (x1 > b1) s += 0.5 * (value_at(b1) + f[k1]) * (x1 - b1);
  s += trapezoid(f.subspan(k1, k2 - k1 + 1), dt);
  if (b2 > x2) s += 0.5 * (f[k2] + value_at(b2)) * (b2 - x2);
  return s;
}

inline void warn_if_large(std::size_t n, const char* what) {
  if (n > kComposeWarnSize) {
    warning_sink()(std::string(what) + ": O(n^3) composition with n = " + std::to_string(n) +
                   " nodes will be slow; consider a coarser grid");
  }
}

}  // namespace detail

/// Second-kind Volterra equation x(t) = int_0^t G(t,tau) x(tau) dtau + phi(t),
/// solved by the implicit product trapezoidal rule.
inline Signal solve_lvie(const KernelTable& g, const Signal& phi) {
  require_same_grid(g.grid(), phi.grid());
  const std::size_t n = g.size();
  const double dt = g.grid().dt();
  std::vector<double> x(n, 0.0);
  x[0] = phi[0];
  for (std::size_t i = 1; i < n; ++i) {
    const auto row = g.row(i);
    double s = 0.5 * row[0] * x[0];
    for (std::size_t j = 1; j < i; ++j) s += row[j] * x[j];
    const double denom = 1.0 - 0.5 * dt * row[i];
    if (std::abs(denom) < 1e-12) {
      throw NumericalError("implicit step singular at t = " + std::to_string(g.grid()[i]));
    }
    x[i] = (phi[i] + dt * s) / denom;
    if (!std::isfinite(x[i])) {
      throw NumericalError("solve_lvie: non-finite solution at t = " + std::to_string(g.grid()[i]));
    }
  }
  return Signal(g.grid(), std::move(x));
}

/// (K1 o K2)(t,tau) = int_tau^t K1(t,s) K2(s,tau) ds by the trapezoid rule on
/// grid nodes. Diagonal entries are zero. Rows are computed independently.
inline KernelTable compose_kernels(const KernelTable& k1, const KernelTable& k2) {
  require_same_grid(k1.grid(), k2.grid());
  detail::warn_if_large(k1.size(), "compose_kernels");
  const std::size_t n = k1.size();
  const double dt = k1.grid().dt();
  KernelTable out(k1.grid());
  detail::parallel_for(1, n, [&](std::size_t i) {
    auto dst = out.row(i);
    const auto a = k1.row(i);
    // dst[j] accumulates sum_{k=j..i} K1(i,k) K2(k,j).
    for (std::size_t k = 0; k <= i; ++k) {
      const double w = a[k];
      if (w == 0.0) continue;
      const auto b = k2.row(k);
      for (std::size_t j = 0; j <= k; ++j) dst[j] += w * b[j];
    }
    const auto last = k2.row(i);
    for (std::size_t j = 0; j < i; ++j) {
      dst[j] = dt * (dst[j] - 0.5 * a[j] * k2(j, j) - 0.5 * a[i] * last[j]);
    }
    dst[i] = 0.0;
  });
  out.check_finite();
  return out;
}

inline KernelTable compose_kernels(const KernelTable& k, UnitImpulse) { return k; }
inline KernelTable compose_kernels(UnitImpulse, const KernelTable& k) { return k; }

/// Composition with the integrator-chain kernel (s - tau)^(q-1)/(q-1)!.
/// Same trapezoid values as the dense route, in O(n^2 q^2) and in place: the
/// binomial shift (s - tau_j) = (s - tau_{j+1}) + dt carries the moment sums
/// from column j+1 to column j.
inline KernelTable compose_kernels(KernelTable k1, const IntegratorChain& chain) {
  const std::size_t n = k1.size();
  const double dt = k1.grid().dt();
  const int m = chain.q - 1;
  const double inv_fact = 1.0 / factorial(m);
  // shift[l][r] = C(l, r) dt^(l-r)
  std::vector<std::vector<double>> shift(m + 1, std::vector<double>(m + 1, 0.0));
  for (int l = 0; l <= m; ++l) {
    for (int r = 0; r <= l; ++r) shift[l][r] = binomial(l, r) * ipow(dt, l - r);
  }
  detail::parallel_for(1, n, [&](std::size_t i) {
    auto row = k1.row(i);
    const double f_last = row[i];
    std::vector<double> moments(m + 1, 0.0);  // H_l(j) = sum_{k=j..i} f_k (s_k - tau_j)^l
    moments[0] = f_last;
    for (std::size_t jj = i; jj-- > 0;) {
      const double f_j = row[jj];
      for (int l = m; l >= 0; --l) {
        double acc = 0.0;
        for (int r = 0; r <= l; ++r) acc += shift[l][r] * moments[r];
        moments[l] = acc;
      }
      moments[0] += f_j;
      const double span = static_cast<double>(i - jj) * dt;
      double trap = moments[m] - 0.5 * f_last * ipow(span, m);
      if (m == 0) trap -= 0.5 * f_j;
      row[jj] = dt * trap * inv_fact;
    }
    row[i] = 0.0;
  });
  k1(0, 0) = 0.0;
  k1.check_finite();
  return k1;
}

/// G_1 = G, G_m = G o G_{m-1}.
inline KernelTable iterate_kernel(const KernelTable& g, int v) {
  if (v < 1) throw DomainError("iterate_kernel: v must be >= 1");
  KernelTable gv = g;
  for (int m = 2; m <= v; ++m) gv = compose_kernels(g, gv);
  return gv;
}

/// Trapezoid value of int_0^{t_i} G(t_i, tau) dtau.
inline double row_integral(const KernelTable& g, std::size_t i) {
  if (i >= g.size()) throw DomainError("row_integral: row index out of range");
  return detail::trapezoid(g.row(i), g.grid().dt());
}

inline std::vector<double> row_integrals(const KernelTable& g) {
  std::vector<double> r(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) r[i] = row_integral(g, i);
  return r;
}

}  // namespace vstealth
