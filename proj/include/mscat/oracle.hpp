#pragma once

// Independent reference solutions: the analytic series for plane-wave
// scattering by a homogeneous circular cylinder, and dense direct solves of
// the discrete system on small grids.

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mscat/errors.hpp"
#include "mscat/greens.hpp"
#include "mscat/scene.hpp"
#include "mscat/specfun.hpp"

namespace mscat::oracle {

inline constexpr double kCoefficientFloor = 1e-12;

/// Scattering coefficients a_n (n = 0..n_max; a_{-n} = a_n) of a disk of
/// radius `radius_m` and permittivity eps_c in the background `medium`.
struct MieSolution {
  double radius_m = 0.0;
  double eps_c = 1.0;
  Medium medium;
  int n_max = 0;
  std::vector<cplx> coefficients;
};

namespace detail {

// C_n'(x) from C_{n-1}, C_n, C_{n+1}.
inline std::vector<double> derivatives(const std::vector<double>& c, double x, int n_max) {
  std::vector<double> d(static_cast<std::size_t>(n_max) + 1);
  d[0] = -c[1];
  for (int n = 1; n <= n_max; ++n) d[n] = c[n - 1] - (n / x) * c[n];
  return d;
}

inline std::vector<cplx> coefficients(double radius, double k_b, double k_c, int n_max) {
  const double xb = k_b * radius;
  const double xc = k_c * radius;
  const auto jb = specfun::bessel_j_sequence(n_max + 1, xb);
  const auto yb = specfun::bessel_y_sequence(n_max + 1, xb);
  const auto jc = specfun::bessel_j_sequence(n_max + 1, xc);
  const auto djb = derivatives(jb, xb, n_max);
  const auto dyb = derivatives(yb, xb, n_max);
  const auto djc = derivatives(jc, xc, n_max);
  std::vector<cplx> a(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) {
    // Continuity of u and du/drho at rho = radius:
    //   J_n(xb) + a_n H_n(xb)         = c_n J_n(xc)
    //   k_b (J_n'(xb) + a_n H_n'(xb)) = c_n k_c J_n'(xc)
    const cplx h(jb[n], yb[n]);
    const cplx dh(djb[n], dyb[n]);
    const double num = k_c * djc[n] * jb[n] - k_b * jc[n] * djb[n];
    const cplx den = k_b * jc[n] * dh - k_c * djc[n] * h;
    a[n] = num / den;
  }
  return a;
}

}  // namespace detail

/// Builds the coefficient set with n_max = ceil(k_b radius) + 15, extended in
/// steps of 5 until |a_n_max| < 1e-12 (pass n_max >= 0 to force a truncation).
inline MieSolution mie_solution(double radius_m, double eps_c, const Medium& medium, int n_max = -1) {
  if (!(radius_m > 0.0)) throw DomainError("cylinder radius must be positive");
  if (!(eps_c > 0.0)) throw DomainError("cylinder permittivity must be positive");
  const double k_b = medium.k_b();
  const double k_c = medium.k() * std::sqrt(eps_c);
  MieSolution sol{radius_m, eps_c, medium, 0, {}};
  if (eps_c == medium.eps_b()) {
    // No contrast: the interface system is solved exactly by a_n = 0.
    sol.n_max = std::max(n_max, 0);
    sol.coefficients.assign(static_cast<std::size_t>(sol.n_max) + 1, cplx{});
    return sol;
  }
  if (n_max >= 0) {
    sol.n_max = n_max;
    sol.coefficients = detail::coefficients(radius_m, k_b, k_c, n_max);
    return sol;
  }
  int n = static_cast<int>(std::ceil(k_b * radius_m)) + 15;
  for (;;) {
    auto a = detail::coefficients(radius_m, k_b, k_c, n);
    if (std::abs(a.back()) < kCoefficientFloor || n + 5 > specfun::kMaxOrder - 1) {
      sol.n_max = n;
      sol.coefficients = std::move(a);
      return sol;
    }
    n += 5;
  }
}

/// Scattered field sum_{|n|<=n_max} i^n a_n H_n(k_b rho) e^{i n (phi - phi_inc)}
/// at points outside the cylinder, for incidence exp(i k_b (cos phi_inc, sin phi_inc).r).
inline std::vector<cplx> mie_scattered_field(const MieSolution& sol, std::span<const Point> points,
                                             double incidence_angle) {
  const double k_b = sol.medium.k_b();
  std::vector<cplx> out(points.size());
  std::vector<cplx> i_pow(static_cast<std::size_t>(sol.n_max) + 1);
  i_pow[0] = 1.0;
  for (int n = 1; n <= sol.n_max; ++n) i_pow[n] = i_pow[n - 1] * cplx(0.0, 1.0);
  for (std::size_t p = 0; p < points.size(); ++p) {
    const double rho = std::hypot(points[p][0], points[p][1]);
    if (!(rho > sol.radius_m)) throw DomainError("Mie field requested inside the cylinder");
    const double phi = std::atan2(points[p][1], points[p][0]) - incidence_angle;
    const auto j = specfun::bessel_j_sequence(sol.n_max, k_b * rho);
    const auto y = specfun::bessel_y_sequence(sol.n_max, k_b * rho);
    cplx acc = sol.coefficients[0] * cplx(j[0], y[0]);
    for (int n = 1; n <= sol.n_max; ++n) {
      acc += 2.0 * i_pow[n] * sol.coefficients[n] * cplx(j[n], y[n]) * std::cos(n * phi);
    }
    out[p] = acc;
  }
  return out;
}

/// Far-field amplitude T(theta) = sum_n a_n e^{i n theta}, theta measured from
/// the incidence direction.
inline cplx far_field_amplitude(const MieSolution& sol, double theta) {
  cplx acc = sol.coefficients[0];
  for (int n = 1; n <= sol.n_max; ++n) acc += 2.0 * sol.coefficients[n] * std::cos(n * theta);
  return acc;
}

/// Scattering width from the forward amplitude, -(4/k_b) Re T(0).
inline double extinction_width(const MieSolution& sol) {
  return -4.0 / sol.medium.k_b() * std::real(far_field_amplitude(sol, 0.0));
}

/// Scattering width from angular integration of |T|^2 (periodic trapezoid rule).
inline double scattering_width(const MieSolution& sol, int samples = 0) {
  if (samples <= 0) samples = 8 * (sol.n_max + 1);
  double acc = 0.0;
  for (int s = 0; s < samples; ++s) {
    acc += std::norm(far_field_amplitude(sol, 2.0 * std::numbers::pi * s / samples));
  }
  return 4.0 / sol.medium.k_b() * acc / samples;
}

inline constexpr int kDenseMaxSide = 32;

/// G assembled entry by entry from the operator's kernel_value().
inline Eigen::MatrixXcd dense_domain_matrix(const DomainOperator& op) {
  const Grid& g = op.grid();
  if (g.n() > kDenseMaxSide) throw ValidationError("dense G limited to grids of at most 32 x 32");
  const auto N = static_cast<Eigen::Index>(g.pixels());
  const int n = g.n();
  Eigen::MatrixXcd G(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      const int dx = static_cast<int>(i % n) - static_cast<int>(j % n);
      const int dy = static_cast<int>(i / n) - static_cast<int>(j / n);
      G(i, j) = op.kernel_value(dx, dy);
    }
  }
  return G;
}

/// Direct LU solve of (I - G diag(x)) u = u_in.
inline ComplexField dense_total_field(const Potential& x, const ComplexField& u_in, const DomainOperator& op) {
  const Grid& g = op.grid();
  if (g.n() > kDenseMaxSide) throw ValidationError("dense solve limited to grids of at most 32 x 32");
  if (!(x.grid == g) || !(u_in.grid == g)) throw ValidationError("dense_total_field: grid mismatch");
  const Eigen::MatrixXcd G = dense_domain_matrix(op);
  const auto N = G.rows();
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(N, N);
  for (Eigen::Index j = 0; j < N; ++j) A.col(j) -= G.col(j) * x.values[static_cast<std::size_t>(j)];
  Eigen::VectorXcd b(N);
  for (Eigen::Index i = 0; i < N; ++i) b(i) = u_in.values[static_cast<std::size_t>(i)];
  const Eigen::VectorXcd u = A.partialPivLu().solve(b);
  ComplexField out{g, std::vector<cplx>(u.data(), u.data() + N)};
  return out;
}

inline ComplexField dense_total_field(const Potential& x, const ComplexField& u_in, const Grid& grid,
                                      const Medium& medium) {
  if (grid.n() > kDenseMaxSide) throw ValidationError("dense solve limited to grids of at most 32 x 32");
  return dense_total_field(x, u_in, DomainOperator(grid, medium));
}

}  // namespace mscat::oracle
