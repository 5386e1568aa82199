#pragma once

// Backprojection w = sum_k diag(conj(u_in,k)) S^H y_k, the linearized (Born)
// least-squares baseline, and reconstruction-quality metrics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mscat/errors.hpp"
#include "mscat/forward.hpp"
#include "mscat/greens.hpp"
#include "mscat/parallel.hpp"
#include "mscat/scene.hpp"

namespace mscat {

struct Backprojection {
  Grid grid;
  std::vector<cplx> w;
};

/// Contributions of the K transmissions are formed independently and summed
/// pairwise, so the result does not depend on the number of threads.
inline Backprojection backproject(const MeasurementSet& ms, const std::vector<ComplexField>& incident,
                                  const SensorOperator& S, int threads = 1) {
  if (static_cast<std::size_t>(ms.k_count) != incident.size()) {
    throw ValidationError("backproject: " + std::to_string(ms.k_count) + " transmissions but " +
                          std::to_string(incident.size()) + " incident fields");
  }
  if (static_cast<std::size_t>(ms.m_count) != S.rows()) {
    throw ValidationError("backproject: " + std::to_string(ms.m_count) + " receivers in data, " +
                          std::to_string(S.rows()) + " in the sensor operator");
  }
  if (ms.y.size() != static_cast<std::size_t>(ms.k_count) * ms.m_count) {
    throw ValidationError("backproject: measurement array size does not match K x M");
  }
  const std::size_t N = S.cols();
  std::vector<std::vector<cplx>> parts(incident.size());
  parallel_for(incident.size(), threads, [&](std::size_t k) {
    if (incident[k].values.size() != N) throw ValidationError("backproject: incident field size mismatch");
    std::vector<cplx> t = S.apply_adjoint(ms.row(static_cast<int>(k)));
    for (std::size_t i = 0; i < N; ++i) t[i] *= std::conj(incident[k].values[i]);
    parts[k] = std::move(t);
  });
  Backprojection out{S.grid(), {}};
  if (parts.empty()) {
    out.w.assign(N, cplx{});
    return out;
  }
  out.w = pairwise_reduce(std::move(parts), [](const std::vector<cplx>& a, const std::vector<cplx>& b) {
    std::vector<cplx> sum(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) sum[i] = a[i] + b[i];
    return sum;
  });
  return out;
}

namespace detail {

// H x = Re(sum_k conj(u_k) .* S^H S (u_k .* x)) for real x (no Tikhonov term).
inline std::vector<double> born_normal_apply(const SensorOperator& S, const std::vector<ComplexField>& incident,
                                             std::span<const double> x, int threads) {
  const std::size_t N = x.size();
  std::vector<std::vector<double>> parts(incident.size());
  parallel_for(incident.size(), threads, [&](std::size_t k) {
    const auto& u = incident[k].values;
    std::vector<cplx> ux(N);
    for (std::size_t i = 0; i < N; ++i) ux[i] = u[i] * x[i];
    const std::vector<cplx> back = S.apply_adjoint(S.apply(ux));
    std::vector<double> part(N);
    for (std::size_t i = 0; i < N; ++i) part[i] = std::real(std::conj(u[i]) * back[i]);
    parts[k] = std::move(part);
  });
  return pairwise_reduce(std::move(parts), [](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> sum(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) sum[i] = a[i] + b[i];
    return sum;
  });
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

/// Real Born normal operator H = Re(sum_k diag(conj u_k) S^H S diag(u_k)).
/// Up to kDensePixels pixels it is assembled once as Re((S^H S) .* (U^H U)),
/// where row k of U is u_k; above that it is applied matrix-free.
class BornNormal {
 public:
  static constexpr std::size_t kDensePixels = 2500;

  BornNormal(const SensorOperator& S, const std::vector<ComplexField>& incident, int threads)
      : S_(S), incident_(incident), threads_(threads) {
    const std::size_t N = S.cols();
    for (const auto& u : incident) {
      if (u.values.size() != N) throw ValidationError("born normal operator: incident field size mismatch");
    }
    if (N > kDensePixels) return;
    const auto M = static_cast<Eigen::Index>(S.rows());
    const auto n = static_cast<Eigen::Index>(N);
    Eigen::MatrixXcd s(M, n);
    for (Eigen::Index r = 0; r < M; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) s(r, c) = S.entry(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    }
    Eigen::MatrixXcd u(static_cast<Eigen::Index>(incident.size()), n);
    for (std::size_t k = 0; k < incident.size(); ++k) {
      for (Eigen::Index c = 0; c < n; ++c) u(static_cast<Eigen::Index>(k), c) = incident[k].values[c];
    }
    const Eigen::MatrixXcd a = s.adjoint() * s;
    const Eigen::MatrixXcd cc = u.adjoint() * u;
    dense_ = a.cwiseProduct(cc).real();
  }

  bool dense() const { return dense_.size() > 0; }

  std::vector<double> apply(std::span<const double> x) const {
    if (!dense()) return born_normal_apply(S_, incident_, x, threads_);
    const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::VectorXd hv = dense_ * v;
    return {hv.data(), hv.data() + hv.size()};
  }

 private:
  const SensorOperator& S_;
  const std::vector<ComplexField>& incident_;
  int threads_;
  Eigen::MatrixXd dense_;
};

}  // namespace detail

/// Largest eigenvalue of the real Born normal operator, by power iteration
/// from a constant start vector.
inline double born_normal_norm(const SensorOperator& S, const std::vector<ComplexField>& incident, int iterations = 50,
                               int threads = 1) {
  const detail::BornNormal H(S, incident, threads);
  const std::size_t N = S.cols();
  std::vector<double> v(N, 1.0 / std::sqrt(static_cast<double>(N)));
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> hv = H.apply(v);
    const double norm = std::sqrt(detail::dot(hv, hv));
    if (norm == 0.0) return 0.0;
    lambda = norm;
    for (std::size_t i = 0; i < N; ++i) v[i] = hv[i] / norm;
  }
  return lambda;
}

struct BornReconstruction {
  Potential estimate;
  int iterations = 0;
  /// Objective sum_k ||y_k - S diag(u_k) x||^2 + tau ||x||^2 after each iteration,
  /// starting with x = 0.
  std::vector<double> objective;
};

/// Minimizes sum_k ||y_k - S diag(u_in,k) x||^2 + tau ||x||^2 over real x by
/// conjugate gradients on the real normal equations
///   (Re sum_k P_k S diag(u_k) + tau I) x = Re(w),
/// whose right-hand side is the backprojection. Stops after `iters`
/// iterations or when the gradient norm falls below 1e-8 of its initial
/// value. With tau = 0 and a rank-deficient system the iterates stay in the
/// range of the operator, approaching the minimum-norm solution.
inline BornReconstruction born_reconstruct(const MeasurementSet& ms, const std::vector<ComplexField>& incident,
                                           const SensorOperator& S, double tau, int iters, int threads = 1) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ValidationError("born_reconstruct: tau must be >= 0");
  if (iters < 0) throw ValidationError("born_reconstruct: iteration count must be >= 0");
  const Backprojection bp = backproject(ms, incident, S, threads);
  const std::size_t N = bp.w.size();
  std::vector<double> b(N);
  for (std::size_t i = 0; i < N; ++i) b[i] = std::real(bp.w[i]);

  const detail::BornNormal H(S, incident, threads);
  const double y_sq = ms.frobenius_sq();
  std::vector<double> x(N, 0.0);
  std::vector<double> r = b;
  std::vector<double> p = r;
  double rr = detail::dot(r, r);
  const double stop = 1e-8 * std::sqrt(rr);

  BornReconstruction out;
  out.objective.push_back(y_sq);
  int it = 0;
  while (it < iters && std::sqrt(rr) > stop && rr > 0.0) {
    std::vector<double> hp = H.apply(p);
    for (std::size_t i = 0; i < N; ++i) hp[i] += tau * p[i];
    const double php = detail::dot(p, hp);
    if (!(php > 0.0)) break;
    const double alpha = rr / php;
    for (std::size_t i = 0; i < N; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * hp[i];
    }
    const double rr_new = detail::dot(r, r);
    if (!std::isfinite(rr_new)) throw SolverError("born_reconstruct: non-finite residual");
    for (std::size_t i = 0; i < N; ++i) p[i] = r[i] + (rr_new / rr) * p[i];
    rr = rr_new;
    ++it;
    // J(x) = ||y||^2 - 2 x.b + x.Hx and Hx = b - r.
    out.objective.push_back(y_sq - detail::dot(x, b) - detail::dot(x, r));
  }
  out.iterations = it;
  out.estimate = Potential{S.grid(), std::move(x), 0.0};
  return out;
}

inline constexpr double kSnrCapDb = 300.0;

/// 10 log10(||x||^2 / ||x - a xhat||^2) with the least-squares scale
/// a = <xhat, x> / ||xhat||^2 (a = 0 for xhat = 0), capped at 300 dB.
inline double recon_snr(std::span<const double> estimate, std::span<const double> reference) {
  if (estimate.size() != reference.size()) throw ValidationError("recon_snr: arrays differ in size");
  const double ref_sq = detail::dot(reference, reference);
  if (!(ref_sq > 0.0)) throw DomainError("recon_snr: reference is identically zero");
  const double est_sq = detail::dot(estimate, estimate);
  const double a = est_sq > 0.0 ? detail::dot(estimate, reference) / est_sq : 0.0;
  double err_sq = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - a * estimate[i];
    err_sq += d * d;
  }
  if (err_sq == 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, 10.0 * std::log10(ref_sq / err_sq));
}

/// 10 log10(||x||^2 / ||x - xhat||^2) without scale fitting, capped at 300 dB.
inline double plain_snr(std::span<const double> estimate, std::span<const double> reference) {
  if (estimate.size() != reference.size()) throw ValidationError("plain_snr: arrays differ in size");
  const double ref_sq = detail::dot(reference, reference);
  if (!(ref_sq > 0.0)) throw DomainError("plain_snr: reference is identically zero");
  double err_sq = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - estimate[i];
    err_sq += d * d;
  }
  if (err_sq == 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, 10.0 * std::log10(ref_sq / err_sq));
}

}  // namespace mscat
