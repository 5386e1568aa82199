#pragma once

// Bessel functions J_n, Y_n and the Hankel function H_n^(1) of integer order
// and real argument.
//
// Evaluation regions:
//   x < 1e-5        leading terms of the ascending series
//   1e-5 <= x < 25  Miller downward recurrence for J_0..J_m, normalized with
//                   J_0^2 + 2 sum J_k^2 = 1; Y_0 and Y_1 from the Neumann
//                   series over the same J sequence
//   x >= 25         Hankel asymptotic expansion for orders 0 and 1; J_n for
//                   n > x by downward recurrence matched to the upward values
// Y_n for n >= 2 always comes from upward recurrence, which is stable for Y.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "mscat/errors.hpp"

namespace mscat::specfun {

using ComplexScalar = std::complex<double>;

inline constexpr int kMaxOrder = 20000;

namespace detail {

inline constexpr double kTinyArgument = 1e-5;
inline constexpr double kAsymptoticArgument = 25.0;
inline constexpr double kRescaleAbove = 1e100;
inline constexpr double kRescaleBy = 1e-100;

struct OrderZeroOne {
  double j0, j1, y0, y1;
};

inline void check_order(int n) {
  if (n < 0 || n > kMaxOrder) {
    throw DomainError("Bessel order " + std::to_string(n) + " outside [0, " +
                      std::to_string(kMaxOrder) + "]");
  }
}

// Returns d[0..start-stop], d[i] proportional to J_{stop+i}(x), by downward
// recurrence started at `start` with J_{start+1} = 0.
inline std::vector<double> downward_sequence(int start, int stop, double x) {
  std::vector<double> d(static_cast<std::size_t>(start - stop + 1), 0.0);
  double above = 0.0;
  double current = 1.0;
  d.back() = current;
  for (int k = start; k > stop; --k) {
    double below = (2.0 * k / x) * current - above;
    above = current;
    current = below;
    const auto idx = static_cast<std::size_t>(k - 1 - stop);
    d[idx] = current;
    if (std::abs(current) > kRescaleAbove) {
      for (std::size_t i = idx; i < d.size(); ++i) d[i] *= kRescaleBy;
      above *= kRescaleBy;
      current *= kRescaleBy;
    }
  }
  return d;
}

inline int miller_start(int n, double x) {
  const int base = std::max(n, static_cast<int>(std::ceil(x)));
  int m = base + 40 + static_cast<int>(std::ceil(10.0 * std::cbrt(x)));
  return m + (m % 2);
}

// Normalized J_0..J_{n_max} plus Y_0, Y_1 for kTinyArgument <= x < 25.
inline std::vector<double> miller_normalized(int n_max, double x, double* y0,
                                             double* y1) {
  const int m = miller_start(std::max(n_max, 1), x);
  std::vector<double> j = downward_sequence(m, 0, x);

  double squares = j[0] * j[0];
  double even_sum = j[0];
  for (int k = 1; k <= m; ++k) {
    squares += 2.0 * j[k] * j[k];
    if (k % 2 == 0) even_sum += 2.0 * j[k];
  }
  // Squares fix the magnitude; J_0 + 2 sum J_2k = 1 fixes the sign.
  double scale = 1.0 / std::sqrt(squares);
  if (even_sum < 0.0) scale = -scale;
  for (double& v : j) v *= scale;

  if (y0 != nullptr || y1 != nullptr) {
    const double log_term = std::log(0.5 * x) + std::numbers::egamma;
    double s0 = 0.0;
    double s1 = 0.0;
    for (int k = 1; 2 * k + 1 <= m; ++k) {
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      s0 += sign * j[2 * k] / k;
      s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k;
    }
    const double two_over_pi = 2.0 / std::numbers::pi;
    if (y0 != nullptr) *y0 = two_over_pi * (log_term * j[0] - 2.0 * s0);
    if (y1 != nullptr) *y1 = -two_over_pi * (j[0] / x - log_term * j[1] - s1);
  }
  j.resize(static_cast<std::size_t>(n_max) + 1);
  return j;
}

// Hankel asymptotic expansion of J_n, Y_n (n = 0 or 1) for x >= 25.
inline void asymptotic(int n, double x, double* jn, double* yn) {
  const double mu = 4.0 * n * n;
  const double eight_x = 8.0 * x;
  double p = 1.0;
  double q = 0.0;
  double term = 1.0;
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (k * eight_x);
    const double magnitude = std::abs(term);
    if (magnitude > previous) break;
    previous = magnitude;
    const double sign = (k % 4 == 1 || k % 4 == 0) ? 1.0 : -1.0;
    if (k % 2 == 1) {
      q += sign * term;
    } else {
      p += sign * term;
    }
    if (magnitude < 1e-18) break;
  }
  // chi = x - (n/2 + 1/4) pi, expanded so the large argument is reduced by libm.
  const double phase = (0.5 * n + 0.25) * std::numbers::pi;
  const double cx = std::cos(x);
  const double sx = std::sin(x);
  const double cp = std::cos(phase);
  const double sp = std::sin(phase);
  const double cos_chi = cx * cp + sx * sp;
  const double sin_chi = sx * cp - cx * sp;
  const double amplitude = std::sqrt(2.0 / (std::numbers::pi * x));
  if (jn != nullptr) *jn = amplitude * (p * cos_chi - q * sin_chi);
  if (yn != nullptr) *yn = amplitude * (p * sin_chi + q * cos_chi);
}

inline OrderZeroOne order_zero_one(double x) {
  OrderZeroOne r{};
  if (x < kTinyArgument) {
    const double h = 0.5 * x;
    const double log_term = std::log(h) + std::numbers::egamma;
    r.j0 = 1.0 - h * h;
    r.j1 = h * (1.0 - 0.5 * h * h);
    r.y0 = (2.0 / std::numbers::pi) * (log_term * r.j0 + h * h);
    r.y1 = -2.0 / (std::numbers::pi * x) + (2.0 / std::numbers::pi) * std::log(h) * r.j1 -
           (h / std::numbers::pi) * (1.0 - 2.0 * std::numbers::egamma);
  } else if (x < kAsymptoticArgument) {
    auto j = miller_normalized(1, x, &r.y0, &r.y1);
    r.j0 = j[0];
    r.j1 = j[1];
  } else {
    asymptotic(0, x, &r.j0, &r.y0);
    asymptotic(1, x, &r.j1, &r.y1);
  }
  return r;
}

inline void check_finite(double v, const char* what, int n, double x) {
  if (!std::isfinite(v)) {
    throw DomainError(std::string(what) + "(" + std::to_string(n) + ", " + std::to_string(x) +
                      ") overflows double precision");
  }
}

}  // namespace detail

/// J_0(x)..J_{n_max}(x). Requires x >= 0 finite, 0 <= n_max <= kMaxOrder.
inline std::vector<double> bessel_j_sequence(int n_max, double x) {
  detail::check_order(n_max);
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw DomainError("bessel_j requires a finite argument x >= 0, got " + std::to_string(x));
  }
  std::vector<double> j(static_cast<std::size_t>(n_max) + 1, 0.0);
  if (x == 0.0) {
    j[0] = 1.0;
    return j;
  }
  if (x < detail::kTinyArgument) {
    const double h = 0.5 * x;
    const double log_h = std::log(h);
    for (int n = 0; n <= n_max; ++n) {
      const double lead = std::exp(n * log_h - std::lgamma(n + 1.0));
      j[n] = lead * (1.0 - h * h / (n + 1.0));
    }
    return j;
  }
  if (x < detail::kAsymptoticArgument) {
    return detail::miller_normalized(n_max, x, nullptr, nullptr);
  }

  detail::asymptotic(0, x, &j[0], nullptr);
  if (n_max == 0) return j;
  detail::asymptotic(1, x, &j[1], nullptr);

  // Upward recurrence is stable while the order stays below the argument.
  const int turning = std::max(2, static_cast<int>(std::floor(x)));  // x >= 25 here
  const int upward_top = std::min(n_max, turning);
  for (int k = 1; k < upward_top; ++k) j[k + 1] = (2.0 * k / x) * j[k] - j[k - 1];
  if (n_max <= turning) return j;

  // Above the turning point: downward recurrence, matched on two overlapping
  // orders so a zero of J at the seam cannot spoil the scale.
  const int start = detail::miller_start(n_max, x);
  const int stop = turning - 1;
  std::vector<double> d = detail::downward_sequence(start, stop, x);
  const double a0 = j[stop];
  const double a1 = j[turning];
  const double scale = (a0 * d[0] + a1 * d[1]) / (d[0] * d[0] + d[1] * d[1]);
  for (int k = turning + 1; k <= n_max; ++k) j[k] = scale * d[k - stop];
  return j;
}

/// Y_0(x)..Y_{n_max}(x). Requires x > 0 finite. Throws DomainError when the
/// result overflows (large order at small argument).
inline std::vector<double> bessel_y_sequence(int n_max, double x) {
  detail::check_order(n_max);
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("bessel_y requires a finite argument x > 0, got " + std::to_string(x));
  }
  const auto low = detail::order_zero_one(x);
  std::vector<double> y(static_cast<std::size_t>(n_max) + 1, 0.0);
  y[0] = low.y0;
  if (n_max >= 1) y[1] = low.y1;
  for (int k = 1; k < n_max; ++k) {
    y[k + 1] = (2.0 * k / x) * y[k] - y[k - 1];
    detail::check_finite(y[k + 1], "bessel_y", k + 1, x);
  }
  return y;
}

/// Bessel function of the first kind J_n(x), n >= 0, x >= 0.
inline double bessel_j(int n, double x) {
  detail::check_order(n);
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw DomainError("bessel_j requires a finite argument x >= 0, got " + std::to_string(x));
  }
  if (n <= 1 && x > 0.0) {
    const auto low = detail::order_zero_one(x);
    return n == 0 ? low.j0 : low.j1;
  }
  return bessel_j_sequence(n, x)[static_cast<std::size_t>(n)];
}

/// Bessel function of the second kind Y_n(x), n >= 0, x > 0.
inline double bessel_y(int n, double x) {
  detail::check_order(n);
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("bessel_y requires a finite argument x > 0, got " + std::to_string(x));
  }
  if (n <= 1) {
    const auto low = detail::order_zero_one(x);
    return n == 0 ? low.y0 : low.y1;
  }
  return bessel_y_sequence(n, x)[static_cast<std::size_t>(n)];
}

/// H_n^(1)(x) = J_n(x) + i Y_n(x).
inline ComplexScalar hankel1(int n, double x) { return {bessel_j(n, x), bessel_y(n, x)}; }

}  // namespace mscat::specfun
