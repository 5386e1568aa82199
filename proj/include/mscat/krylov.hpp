#pragma once

// Matrix-free Krylov solvers for complex, non-Hermitian systems A x = b.
// Operators are callables mapping std::span<const cplx> to std::vector<cplx>.

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "mscat/errors.hpp"

namespace mscat::krylov {

using cplx = std::complex<double>;
using Vec = std::vector<cplx>;

struct Result {
  int iterations = 0;
  double relative_residual = 0.0;  // true residual ||b - A x|| / ||b||
  bool converged = false;
};

inline cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  cplx acc{};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

inline double norm(std::span<const cplx> a) {
  double acc = 0.0;
  for (const cplx& v : a) acc += std::norm(v);
  return std::sqrt(acc);
}

namespace detail {

inline void check_finite(double value, int iteration) {
  if (!std::isfinite(value)) {
    throw SolverError("non-finite value in Krylov iteration " + std::to_string(iteration));
  }
}

template <typename Op>
double true_residual(const Op& apply_a, std::span<const cplx> b, std::span<const cplx> x, Vec& r) {
  const Vec ax = apply_a(x);
  r.resize(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) r[i] = b[i] - ax[i];
  return norm(r);
}

}  // namespace detail

/// BiCGStab. `x` holds the initial guess on entry and the best iterate (by
/// residual norm) on exit. Restarts on breakdown and whenever the recursive
/// residual claims convergence that the true residual does not confirm.
template <typename Op>
Result bicgstab(const Op& apply_a, std::span<const cplx> b, Vec& x, double tol, int max_iter) {
  const std::size_t n = b.size();
  const double b_norm = norm(b);
  Result result;
  if (b_norm == 0.0) {
    x.assign(n, cplx{});
    result.converged = true;
    return result;
  }
  const double target = tol * b_norm;

  Vec r;
  double r_norm = detail::true_residual(apply_a, b, x, r);
  Vec best = x;
  double best_norm = r_norm;
  Vec r_hat = r;
  Vec p(n, cplx{}), v(n, cplx{}), s(n), t;
  cplx rho_old{1.0}, alpha{1.0}, omega{1.0};

  int it = 0;
  while (r_norm > target && it < max_iter) {
    ++it;
    const cplx rho = dot(r_hat, r);
    if (std::abs(rho) == 0.0 || std::abs(omega) == 0.0) {
      r_hat = r;
      rho_old = alpha = omega = cplx{1.0};
      std::fill(p.begin(), p.end(), cplx{});
      std::fill(v.begin(), v.end(), cplx{});
      continue;
    }
    const cplx beta = (rho / rho_old) * (alpha / omega);
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    v = apply_a(p);
    const cplx rv = dot(r_hat, v);
    if (std::abs(rv) == 0.0) {
      r_hat = r;
      rho_old = alpha = omega = cplx{1.0};
      std::fill(p.begin(), p.end(), cplx{});
      std::fill(v.begin(), v.end(), cplx{});
      continue;
    }
    alpha = rho / rv;
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    const double s_norm = norm(s);
    detail::check_finite(s_norm, it);
    if (s_norm <= target) {
      for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
      r_norm = detail::true_residual(apply_a, b, x, r);
    } else {
      t = apply_a(s);
      const double tt = std::real(dot(t, t));
      omega = tt > 0.0 ? dot(t, s) / tt : cplx{};
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i] + omega * s[i];
        r[i] = s[i] - omega * t[i];
      }
      r_norm = norm(r);
      detail::check_finite(r_norm, it);
      if (r_norm <= target) r_norm = detail::true_residual(apply_a, b, x, r);
    }
    rho_old = rho;
    if (r_norm < best_norm) {
      best_norm = r_norm;
      best = x;
    }
    if (r_norm > target && (s_norm <= target || std::abs(omega) == 0.0)) {
      // Recursive residual drifted from the true one; restart the shadow space.
      r_hat = r;
      rho_old = alpha = omega = cplx{1.0};
      std::fill(p.begin(), p.end(), cplx{});
      std::fill(v.begin(), v.end(), cplx{});
    }
  }

  x = best;
  Vec scratch;
  result.iterations = it;
  result.relative_residual = detail::true_residual(apply_a, b, x, scratch) / b_norm;
  result.converged = result.relative_residual <= tol;
  return result;
}

/// Conjugate gradient on the normal equations A^H A x = A^H b, monitoring the
/// residual of the original system. Slower than BiCGStab but monotone.
template <typename Op, typename OpAdjoint>
Result cgnr(const Op& apply_a, const OpAdjoint& apply_a_adjoint, std::span<const cplx> b, Vec& x, double tol,
            int max_iter) {
  const std::size_t n = b.size();
  const double b_norm = norm(b);
  Result result;
  if (b_norm == 0.0) {
    x.assign(n, cplx{});
    result.converged = true;
    return result;
  }
  const double target = tol * b_norm;
  Vec r;
  double r_norm = detail::true_residual(apply_a, b, x, r);
  Vec z = apply_a_adjoint(r);
  Vec p = z;
  double z_sq = std::real(dot(z, z));
  int it = 0;
  while (r_norm > target && it < max_iter && z_sq > 0.0) {
    ++it;
    const Vec w = apply_a(p);
    const double w_sq = std::real(dot(w, w));
    detail::check_finite(w_sq, it);
    if (w_sq == 0.0) break;
    const double alpha = z_sq / w_sq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * w[i];
    }
    r_norm = norm(r);
    detail::check_finite(r_norm, it);
    z = apply_a_adjoint(r);
    const double z_sq_new = std::real(dot(z, z));
    const double beta = z_sq_new / z_sq;
    z_sq = z_sq_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  Vec scratch;
  result.iterations = it;
  result.relative_residual = detail::true_residual(apply_a, b, x, scratch) / b_norm;
  result.converged = result.relative_residual <= tol;
  return result;
}

}  // namespace mscat::krylov
