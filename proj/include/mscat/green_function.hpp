#pragma once

#include <cmath>
#include <complex>

#include "mscat/errors.hpp"
#include "mscat/specfun.hpp"

namespace mscat {

using cplx = std::complex<double>;

/// Free-space 2D Helmholtz Green's function g(r) = (i/4) H0^(1)(k_b |r|),
/// the outgoing solution of (laplacian + k_b^2) g = -delta.
inline cplx green2d(double dx, double dy, double k_b) {
  const double r = std::hypot(dx, dy);
  if (!(r > 0.0)) {
    throw SingularityError("green2d evaluated at zero displacement; use the pixel self term");
  }
  return cplx(0.0, 0.25) * specfun::hankel1(0, k_b * r);
}

}  // namespace mscat
