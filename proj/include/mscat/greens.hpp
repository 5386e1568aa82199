#pragma once

// Discretized Green's operators.
//
//   G : grid -> grid       (Gv)_i = sum_j K(r_i - r_j) v_j, applied as a
//                          circular convolution on a zero-padded 2n x 2n lattice
//   S : grid -> receivers  S[m, i] = g(r_m - r_i) * pixel_area, stored dense
//
// Off-diagonal kernel entries use the midpoint rule g(dr) * pixel_area; the
// diagonal integrates g over the square pixel.

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mscat/errors.hpp"
#include "mscat/fft.hpp"
#include "mscat/green_function.hpp"
#include "mscat/parallel.hpp"
#include "mscat/scene.hpp"

namespace mscat {

namespace detail {

// Adaptive Simpson on a smooth complex integrand.
template <typename F>
cplx adaptive_simpson(const F& f, double a, double b, cplx fa, cplx fm, cplx fb, cplx whole, double tol,
                      int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const cplx flm = f(lm);
  const cplx frm = f(rm);
  const cplx left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const cplx right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const cplx delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
cplx integrate(const F& f, double a, double b, double tol) {
  const cplx fa = f(a);
  const cplx fb = f(b);
  const cplx fm = f(0.5 * (a + b));
  const cplx whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace detail

/// Integral of g over the square [-h/2, h/2]^2 centered on the singularity.
///
/// In polar coordinates the radial part has a closed form,
///   int_0^R H0(k rho) rho drho = R H1(k R)/k + 2i/(pi k^2),
/// so only the smooth angular integral over one of the eight symmetric
/// triangles (0 <= phi <= pi/4, rho <= (h/2)/cos phi) is done numerically.
inline cplx pixel_self_term(double pixel_m, double k_b) {
  const double k = k_b;
  auto radial = [k](double r) {
    const cplx inner = r * specfun::hankel1(1, k * r) / k + cplx(0.0, 2.0 / (std::numbers::pi * k * k));
    return cplx(0.0, 0.25) * inner;
  };
  const double half = 0.5 * pixel_m;
  auto angular = [&](double phi) { return radial(half / std::cos(phi)); };
  const double scale = std::abs(radial(half));
  return 8.0 * detail::integrate(angular, 0.0, 0.25 * std::numbers::pi, 1e-14 * scale);
}

enum class Sampling { kOk, kMarginal, kUnderResolved };

/// Pixel pitch against the background wavelength: <= lambda_b/4 ok,
/// (lambda_b/4, lambda_b/2] marginal, above lambda_b/2 rejected.
inline Sampling check_sampling(const Grid& grid, const Medium& medium) {
  const double ratio = grid.pixel_m() / medium.lambda_b();
  if (ratio <= 0.25) return Sampling::kOk;
  if (ratio <= 0.5) return Sampling::kMarginal;
  return Sampling::kUnderResolved;
}

/// The domain-to-domain operator G. Immutable after construction; apply()
/// allocates its own workspace so concurrent calls are safe.
class DomainOperator {
 public:
  DomainOperator(const Grid& grid, const Medium& medium, int threads = 1)
      : grid_(grid), medium_(medium), side_(2 * grid.n()) {
    const Sampling s = check_sampling(grid, medium);
    if (s == Sampling::kUnderResolved) {
      throw ConfigError("grid under-resolved: pixel " + std::to_string(grid.pixel_m()) +
                        " m exceeds half the background wavelength " + std::to_string(medium.lambda_b()));
    }
    if (s == Sampling::kMarginal) {
      warning_ = "pixel pitch " + std::to_string(grid.pixel_m()) + " m exceeds lambda_b/4; discretization error will be large";
    }
    self_term_ = pixel_self_term(grid.pixel_m(), medium.k_b());

    // Radial symmetry: K(dx, dy) depends on (|dx|, |dy|) unordered.
    const int n = grid.n();
    std::vector<cplx> quadrant(static_cast<std::size_t>(n) * n);
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t row) {
      const int a = static_cast<int>(row);
      for (int b = a; b < n; ++b) {
        const cplx v = kernel_value(a, b);
        quadrant[static_cast<std::size_t>(a) * n + b] = v;
        quadrant[static_cast<std::size_t>(b) * n + a] = v;
      }
    });

    kernel_.assign(static_cast<std::size_t>(side_) * side_, cplx{});
    for (int dy = -(n - 1); dy <= n - 1; ++dy) {
      for (int dx = -(n - 1); dx <= n - 1; ++dx) {
        kernel_[lattice_index(dx, dy)] = quadrant[static_cast<std::size_t>(std::abs(dy)) * n + std::abs(dx)];
      }
    }
    fft_ = std::make_shared<const Fft2d>(side_);
    spectrum_ = kernel_;
    fft_->forward(spectrum_);
    const double inv = 1.0 / (static_cast<double>(side_) * side_);
    for (auto& c : spectrum_) c *= inv;
  }

  const Grid& grid() const { return grid_; }
  const Medium& medium() const { return medium_; }
  cplx self_term() const { return self_term_; }
  const std::optional<std::string>& sampling_warning() const { return warning_; }

  /// Matrix entry G[i, j] for a pixel offset (dx, dy) = (ix_i - ix_j, iy_i - iy_j).
  cplx kernel_value(int dx, int dy) const {
    if (dx == 0 && dy == 0) return self_term_;
    const double h = grid_.pixel_m();
    return green2d(dx * h, dy * h, medium_.k_b()) * grid_.pixel_area();
  }

  /// Circulant embedding of the kernel, (2n) x (2n), row-major by lag y.
  const std::vector<cplx>& embedded_kernel() const { return kernel_; }
  cplx embedded_at(int dx, int dy) const { return kernel_[lattice_index(dx, dy)]; }

  std::vector<cplx> apply(std::span<const cplx> v) const {
    const int n = grid_.n();
    if (v.size() != grid_.pixels()) {
      throw ValidationError("apply_G: vector has " + std::to_string(v.size()) + " entries, grid has " +
                            std::to_string(grid_.pixels()));
    }
    std::vector<cplx> work(static_cast<std::size_t>(side_) * side_, cplx{});
    for (int iy = 0; iy < n; ++iy) {
      for (int ix = 0; ix < n; ++ix) {
        work[static_cast<std::size_t>(iy) * side_ + ix] = v[static_cast<std::size_t>(iy) * n + ix];
      }
    }
    fft_->forward(work);
    for (std::size_t i = 0; i < work.size(); ++i) work[i] *= spectrum_[i];
    fft_->backward(work);
    std::vector<cplx> out(grid_.pixels());
    for (int iy = 0; iy < n; ++iy) {
      for (int ix = 0; ix < n; ++ix) {
        out[static_cast<std::size_t>(iy) * n + ix] = work[static_cast<std::size_t>(iy) * side_ + ix];
      }
    }
    return out;
  }

 private:
  std::size_t lattice_index(int dx, int dy) const {
    const int x = (dx + side_) % side_;
    const int y = (dy + side_) % side_;
    return static_cast<std::size_t>(y) * side_ + x;
  }

  Grid grid_;
  Medium medium_;
  int side_;
  cplx self_term_;
  std::optional<std::string> warning_;
  std::vector<cplx> kernel_;
  std::vector<cplx> spectrum_;  // FFT of kernel_, pre-divided by side^2
  std::shared_ptr<const Fft2d> fft_;
};

inline std::vector<cplx> apply_G(const DomainOperator& op, std::span<const cplx> v) { return op.apply(v); }

inline ComplexField apply_G(const DomainOperator& op, const ComplexField& v) {
  if (!(v.grid == op.grid())) throw ValidationError("apply_G: field lives on a different grid");
  return {op.grid(), op.apply(v.values)};
}

/// Dense grid-to-receiver operator S (M x N, row-major).
class SensorOperator {
 public:
  SensorOperator(const Grid& grid, const Medium& medium, const ReceiverRing& receivers, int threads = 1)
      : grid_(grid), receivers_(receivers), rows_(static_cast<std::size_t>(receivers.count)), cols_(grid.pixels()) {
    entries_.resize(rows_ * cols_);
    const double area = grid.pixel_area();
    const double k_b = medium.k_b();
    parallel_for(rows_, threads, [&](std::size_t m) {
      const Point r = receivers_.position(static_cast<int>(m));
      for (std::size_t i = 0; i < cols_; ++i) {
        const Point c = grid_.center(i);
        entries_[m * cols_ + i] = green2d(r[0] - c[0], r[1] - c[1], k_b) * area;
      }
    });
  }

  const Grid& grid() const { return grid_; }
  const ReceiverRing& receivers() const { return receivers_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  cplx entry(std::size_t m, std::size_t i) const { return entries_[m * cols_ + i]; }
  std::span<const cplx> row(std::size_t m) const { return {entries_.data() + m * cols_, cols_}; }

  std::vector<cplx> apply(std::span<const cplx> v) const {
    if (v.size() != cols_) throw ValidationError("apply_S: vector length does not match the grid");
    std::vector<cplx> y(rows_);
    for (std::size_t m = 0; m < rows_; ++m) {
      const cplx* s = entries_.data() + m * cols_;
      cplx acc{};
      for (std::size_t i = 0; i < cols_; ++i) acc += s[i] * v[i];
      y[m] = acc;
    }
    return y;
  }

  std::vector<cplx> apply_adjoint(std::span<const cplx> y) const {
    if (y.size() != rows_) throw ValidationError("apply_S_adjoint: vector length does not match the receivers");
    std::vector<cplx> w(cols_, cplx{});
    for (std::size_t m = 0; m < rows_; ++m) {
      const cplx* s = entries_.data() + m * cols_;
      const cplx ym = y[m];
      for (std::size_t i = 0; i < cols_; ++i) w[i] += std::conj(s[i]) * ym;
    }
    return w;
  }

 private:
  Grid grid_;
  ReceiverRing receivers_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<cplx> entries_;
};

inline std::vector<cplx> apply_S(const SensorOperator& op, std::span<const cplx> v) { return op.apply(v); }

inline std::vector<cplx> apply_S_adjoint(const SensorOperator& op, std::span<const cplx> y) {
  return op.apply_adjoint(y);
}

}  // namespace mscat
