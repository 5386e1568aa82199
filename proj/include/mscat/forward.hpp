#pragma once

// Forward model: total field from u = u_in + G(u .* x), measurements
// y = S(u .* x), and calibrated measurement noise.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mscat/errors.hpp"
#include "mscat/greens.hpp"
#include "mscat/krylov.hpp"
#include "mscat/parallel.hpp"
#include "mscat/random.hpp"
#include "mscat/scene.hpp"

namespace mscat {

enum class SolverMethod { kBiCGStab, kCGNR };

inline std::string to_string(SolverMethod m) { return m == SolverMethod::kBiCGStab ? "bicgstab" : "cgnr"; }

inline SolverMethod solver_method_from_string(const std::string& s) {
  if (s == "bicgstab") return SolverMethod::kBiCGStab;
  if (s == "cgnr") return SolverMethod::kCGNR;
  throw ConfigError("solver.method must be \"bicgstab\" or \"cgnr\", got \"" + s + "\"");
}

struct SolverSettings {
  double tol = 1e-6;
  int max_iter = 1000;
  SolverMethod method = SolverMethod::kBiCGStab;

  void validate() const {
    if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("solver.tol must lie in (0, 1)");
    if (max_iter < 1) throw ConfigError("solver.max_iter must be >= 1");
  }
};

inline void to_json(nlohmann::json& j, const SolverSettings& s) {
  j = nlohmann::json{{"tol", s.tol}, {"max_iter", s.max_iter}, {"method", to_string(s.method)}};
}

inline void from_json(const nlohmann::json& j, SolverSettings& s) {
  s = SolverSettings{};
  try {
    s.tol = j.value("tol", s.tol);
    s.max_iter = j.value("max_iter", s.max_iter);
    s.method = solver_method_from_string(j.value("method", std::string("bicgstab")));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("solver settings: ") + e.what());
  }
  s.validate();
}

struct SolveReport {
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
};

struct NoiseInfo {
  std::optional<double> snr_db;
  double sigma = 0.0;  // per-component standard deviation, E|e_i|^2 = sigma^2
  std::uint64_t seed = 0;
};

/// Scattered-field samples for K transmissions x M receivers, row k holding
/// transmission k (source angle 2*pi*k/K).
struct MeasurementSet {
  int k_count = 0;
  int m_count = 0;
  std::vector<cplx> y;
  NoiseInfo noise;
  std::uint64_t scene_hash = 0;
  std::vector<SolveReport> reports;

  std::span<const cplx> row(int k) const {
    return {y.data() + static_cast<std::size_t>(k) * m_count, static_cast<std::size_t>(m_count)};
  }
  double frobenius_sq() const {
    double acc = 0.0;
    for (const cplx& v : y) acc += std::norm(v);
    return acc;
  }
};

/// Operators and incident fields for one scene, built once and shared by
/// every simulation on that scene.
class ForwardModel {
 public:
  explicit ForwardModel(const SceneConfig& scene, int threads = 1)
      : scene_((scene.validate(), scene)),
        domain_(scene.grid, scene.medium, threads),
        sensor_(scene.grid, scene.medium, scene.receivers, threads),
        incident_(incident_fields(scene)),
        hash_(scene_hash(scene)) {}

  const SceneConfig& scene() const { return scene_; }
  const DomainOperator& domain() const { return domain_; }
  const SensorOperator& sensor() const { return sensor_; }
  const std::vector<ComplexField>& incident() const { return incident_; }
  std::uint64_t hash() const { return hash_; }

 private:
  SceneConfig scene_;
  DomainOperator domain_;
  SensorOperator sensor_;
  std::vector<ComplexField> incident_;
  std::uint64_t hash_;
};

/// Solves (I - G diag(x)) u = u_in matrix-free, starting from u = u_in.
/// On non-convergence the best iterate is returned with converged = false.
inline std::pair<ComplexField, SolveReport> solve_total_field(const Potential& x, const ComplexField& u_in,
                                                              const DomainOperator& G, const SolverSettings& s) {
  s.validate();
  if (!(x.grid == G.grid()) || !(u_in.grid == G.grid()) || x.values.size() != u_in.values.size()) {
    throw ValidationError("solve_total_field: potential, incident field and operator grids differ");
  }
  const std::size_t n = x.values.size();
  auto apply_a = [&](std::span<const cplx> u) {
    std::vector<cplx> xu(n);
    for (std::size_t i = 0; i < n; ++i) xu[i] = x.values[i] * u[i];
    std::vector<cplx> gxu = G.apply(xu);
    for (std::size_t i = 0; i < n; ++i) gxu[i] = u[i] - gxu[i];
    return gxu;
  };
  // G is complex symmetric, so A^H v = v - x .* conj(G conj(v)).
  auto apply_a_adjoint = [&](std::span<const cplx> v) {
    std::vector<cplx> cv(n);
    for (std::size_t i = 0; i < n; ++i) cv[i] = std::conj(v[i]);
    std::vector<cplx> g = G.apply(cv);
    for (std::size_t i = 0; i < n; ++i) g[i] = v[i] - x.values[i] * std::conj(g[i]);
    return g;
  };

  std::vector<cplx> u = u_in.values;
  krylov::Result r = s.method == SolverMethod::kBiCGStab
                         ? krylov::bicgstab(apply_a, u_in.values, u, s.tol, s.max_iter)
                         : krylov::cgnr(apply_a, apply_a_adjoint, u_in.values, u, s.tol, s.max_iter);
  return {ComplexField{G.grid(), std::move(u)}, SolveReport{r.iterations, r.relative_residual, r.converged}};
}

/// Noiseless measurements S(u .* x).
inline std::vector<cplx> measure(const ComplexField& u, const Potential& x, const SensorOperator& S) {
  if (u.values.size() != x.values.size() || u.values.size() != S.cols()) {
    throw ValidationError("measure: field, potential and sensor operator sizes differ");
  }
  std::vector<cplx> ux(u.values.size());
  for (std::size_t i = 0; i < ux.size(); ++i) ux[i] = u.values[i] * x.values[i];
  return S.apply(ux);
}

/// One total-field solve and measurement per transmitter, in source-angle
/// order. Throws SolverError naming every transmission that failed to converge.
inline MeasurementSet simulate_transmissions(const ForwardModel& model, const Potential& x,
                                             const SolverSettings& s, int threads = 1) {
  const int K = model.scene().sources.count;
  const int M = model.scene().receivers.count;
  if (!(x.grid == model.scene().grid)) throw ValidationError("simulate_transmissions: potential grid mismatch");
  MeasurementSet ms;
  ms.k_count = K;
  ms.m_count = M;
  ms.scene_hash = model.hash();
  ms.y.assign(static_cast<std::size_t>(K) * M, cplx{});
  ms.reports.resize(static_cast<std::size_t>(K));
  parallel_for(static_cast<std::size_t>(K), threads, [&](std::size_t k) {
    auto [u, report] = solve_total_field(x, model.incident()[k], model.domain(), s);
    ms.reports[k] = report;
    const std::vector<cplx> yk = measure(u, x, model.sensor());
    std::copy(yk.begin(), yk.end(), ms.y.begin() + static_cast<std::ptrdiff_t>(k * M));
  });
  std::string failed;
  for (int k = 0; k < K; ++k) {
    if (!ms.reports[static_cast<std::size_t>(k)].converged) {
      failed += (failed.empty() ? "" : ", ") + std::to_string(k) + " (residual " +
                std::to_string(ms.reports[static_cast<std::size_t>(k)].final_residual) + ")";
    }
  }
  if (!failed.empty()) throw SolverError("total-field solve did not converge for transmissions " + failed);
  return ms;
}

/// First-order (Born) measurements S(u_in .* x); no solve.
inline MeasurementSet born_measure(const ForwardModel& model, const Potential& x) {
  const int K = model.scene().sources.count;
  const int M = model.scene().receivers.count;
  if (!(x.grid == model.scene().grid)) throw ValidationError("born_measure: potential grid mismatch");
  MeasurementSet ms;
  ms.k_count = K;
  ms.m_count = M;
  ms.scene_hash = model.hash();
  ms.y.resize(static_cast<std::size_t>(K) * M);
  for (int k = 0; k < K; ++k) {
    const auto yk = measure(model.incident()[static_cast<std::size_t>(k)], x, model.sensor());
    std::copy(yk.begin(), yk.end(), ms.y.begin() + static_cast<std::ptrdiff_t>(k) * M);
  }
  return ms;
}

/// Noise variance for a requested input SNR, 10 log10(||y||^2 / ||e||^2),
/// normalized over the whole stacked set.
inline double noise_sigma(double frobenius_sq, std::size_t count, double snr_db) {
  return std::sqrt(frobenius_sq / (static_cast<double>(count) * std::pow(10.0, snr_db / 10.0)));
}

/// Adds i.i.d. circular complex Gaussian noise with E|e_i|^2 = sigma^2. Row k
/// draws from the counter stream keyed by mix_keys({seed, k}).
inline MeasurementSet add_noise(const MeasurementSet& ms, double snr_db, std::uint64_t seed) {
  if (ms.noise.sigma != 0.0 || ms.noise.snr_db.has_value()) {
    throw UsageError("measurement set is already noisy; noise can only be added once");
  }
  if (!std::isfinite(snr_db)) throw ValidationError("snr_db must be finite");
  const double energy = ms.frobenius_sq();
  if (!(energy > 0.0)) throw ValidationError("cannot calibrate noise against an all-zero measurement set");
  MeasurementSet out = ms;
  const double sigma = noise_sigma(energy, ms.y.size(), snr_db);
  const double component = sigma / std::sqrt(2.0);
  for (int k = 0; k < ms.k_count; ++k) {
    CounterStream stream(mix_keys({seed, static_cast<std::uint64_t>(k)}));
    for (int m = 0; m < ms.m_count; ++m) {
      const auto [re, im] = stream.next_normal_pair();
      out.y[static_cast<std::size_t>(k) * ms.m_count + m] += cplx(component * re, component * im);
    }
  }
  out.noise = NoiseInfo{snr_db, sigma, seed};
  return out;
}

}  // namespace mscat
