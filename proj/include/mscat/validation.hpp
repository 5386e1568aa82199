#pragma once

// Solver-versus-analytic comparison on a dielectric cylinder under plane-wave
// illumination: relative l2 error of the scattered field at the receivers.

#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mscat/forward.hpp"
#include "mscat/greens.hpp"
#include "mscat/oracle.hpp"
#include "mscat/scene.hpp"

namespace mscat {

struct CylinderCase {
  double radius_m = 0.03;
  double eps_c = 1.02;
  double eps_b = 1.0;
  double lambda_m = 0.0084;
  double size_m = 0.072;
  int receivers = 360;
  double receiver_radius_m = 1.6;
  double incidence_angle = 0.0;
  std::vector<int> grids{32, 64, 128};
  SolverSettings solver{1e-8, 2000, SolverMethod::kBiCGStab};
};

struct CylinderResult {
  int n = 0;
  double relative_error = 0.0;
  SolveReport report;
  double seconds = 0.0;
  std::optional<std::string> warning;
};

/// Scattered field at the receivers from the discrete solver, S(u .* x).
inline std::vector<cplx> solver_scattered_field(const CylinderCase& c, int n, SolveReport* report = nullptr,
                                                std::optional<std::string>* warning = nullptr, int threads = 1) {
  const Grid grid(n, c.size_m);
  const Medium medium(c.eps_b, c.lambda_m);
  ReceiverRing rx;
  rx.count = c.receivers;
  rx.radius_m = c.receiver_radius_m;
  const DomainOperator G(grid, medium, threads);
  if (warning != nullptr) *warning = G.sampling_warning();
  const SensorOperator S(grid, medium, rx, threads);
  const Potential x = potential_cylinder(grid, medium, c.radius_m, c.eps_c);
  // A transmitter on the far side of the origin sends the plane wave along incidence_angle.
  const Point source{-std::cos(c.incidence_angle), -std::sin(c.incidence_angle)};
  const ComplexField u_in = incident_field(source, SourceMode::kPlaneWave, grid, medium);
  auto [u, rep] = solve_total_field(x, u_in, G, c.solver);
  if (report != nullptr) *report = rep;
  return measure(u, x, S);
}

inline std::vector<cplx> analytic_scattered_field(const CylinderCase& c) {
  const Medium medium(c.eps_b, c.lambda_m);
  ReceiverRing rx;
  rx.count = c.receivers;
  rx.radius_m = c.receiver_radius_m;
  const auto sol = oracle::mie_solution(c.radius_m, c.eps_c, medium);
  const auto points = rx.positions();
  return oracle::mie_scattered_field(sol, points, c.incidence_angle);
}

inline double relative_l2(std::span<const cplx> estimate, std::span<const cplx> reference) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    num += std::norm(estimate[i] - reference[i]);
    den += std::norm(reference[i]);
  }
  return std::sqrt(num / den);
}

/// Runs every grid in c.grids. Throws ValidationError when the cylinder has no
/// contrast (both fields vanish and the relative error is undefined).
inline std::vector<CylinderResult> validate_cylinder(const CylinderCase& c, int threads = 1) {
  if (c.eps_c == c.eps_b) throw ValidationError("cylinder has no contrast; nothing to compare");
  const auto reference = analytic_scattered_field(c);
  std::vector<CylinderResult> out;
  for (int n : c.grids) {
    const auto start = std::chrono::steady_clock::now();
    CylinderResult r;
    r.n = n;
    const auto field = solver_scattered_field(c, n, &r.report, &r.warning, threads);
    r.relative_error = relative_l2(field, reference);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back(r);
  }
  return out;
}

}  // namespace mscat
