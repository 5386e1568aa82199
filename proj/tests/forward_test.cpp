#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mscat/errors.hpp"
#include "mscat/forward.hpp"
#include "mscat/green_function.hpp"
#include "mscat/harness.hpp"
#include "mscat/oracle.hpp"

using namespace mscat;

namespace {

double norm2(std::span<const cplx> v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return std::sqrt(s);
}

double relative_diff(std::span<const cplx> a, std::span<const cplx> b) {
  std::vector<cplx> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return norm2(d) / norm2(b);
}

Potential random_potential(const Grid& g, const Medium& m, double f_max, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> img(g.pixels());
  for (auto& v : img) v = u(rng);
  return potential_from_image(g, img, f_max, m);
}

Potential phantom_potential(const SceneConfig& s, double f_max) {
  return potential_from_image(s.grid, phantom_image(s.grid.n(), 0, 0), f_max, s.medium);
}

MeasurementSet synthetic_set(int K, int M, double scale) {
  MeasurementSet ms;
  ms.k_count = K;
  ms.m_count = M;
  ms.y.resize(static_cast<std::size_t>(K) * M);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> d;
  for (auto& v : ms.y) v = scale * cplx(d(rng), d(rng));
  return ms;
}

double empirical_snr_db(const MeasurementSet& clean, const MeasurementSet& noisy) {
  double signal = 0.0;
  double noise = 0.0;
  for (std::size_t i = 0; i < clean.y.size(); ++i) {
    signal += std::norm(clean.y[i]);
    noise += std::norm(noisy.y[i] - clean.y[i]);
  }
  return 10.0 * std::log10(signal / noise);
}

}  // namespace

TEST(SolveTotalField, ZeroPotentialReturnsIncidentField) {
  const Grid g(16, 0.02);
  const Medium m(1.0, 0.0084);
  const DomainOperator G(g, m);
  const Potential x{g, std::vector<double>(g.pixels(), 0.0), 0.0};
  const auto u_in = incident_field({1.6, 0.0}, SourceMode::kPointSource, g, m);
  const auto [u, report] = solve_total_field(x, u_in, G, SolverSettings{});
  EXPECT_EQ(u.values, u_in.values);
  EXPECT_EQ(report.iterations, 0);
  EXPECT_TRUE(report.converged);
}

TEST(SolveTotalField, MatchesDenseDirectSolve) {
  const Grid g(16, 0.02);
  const Medium m(1.0, 0.0084);
  const DomainOperator G(g, m);
  std::mt19937_64 rng(101);
  for (SolverMethod method : {SolverMethod::kBiCGStab, SolverMethod::kCGNR}) {
    const SolverSettings s{1e-8, 2000, method};
    for (int trial = 0; trial < 10; ++trial) {
      const Potential x = random_potential(g, m, 5e-2, rng);
      const double angle = 0.6 * trial;
      const auto u_in = incident_field({1.6 * std::cos(angle), 1.6 * std::sin(angle)}, SourceMode::kPointSource, g, m);
      const auto [u, report] = solve_total_field(x, u_in, G, s);
      ASSERT_TRUE(report.converged);
      const auto dense = oracle::dense_total_field(x, u_in, G);
      EXPECT_LE(relative_diff(u.values, dense.values), 10.0 * s.tol) << to_string(method) << " trial " << trial;
    }
  }
}

TEST(SolveTotalField, ResidualIsReverifiable) {
  const Grid g(24, 0.03);
  const Medium m(1.0, 0.0084);
  const DomainOperator G(g, m);
  std::mt19937_64 rng(5);
  const Potential x = random_potential(g, m, 1e-1, rng);
  const auto u_in = incident_field({0.0, -1.6}, SourceMode::kPointSource, g, m);
  const SolverSettings s{1e-7, 1000, SolverMethod::kBiCGStab};
  const auto [u, report] = solve_total_field(x, u_in, G, s);
  ASSERT_TRUE(report.converged);
  std::vector<cplx> ux(u.values.size());
  for (std::size_t i = 0; i < ux.size(); ++i) ux[i] = u.values[i] * x.values[i];
  const auto gux = G.apply(ux);
  std::vector<cplx> r(ux.size());
  for (std::size_t i = 0; i < ux.size(); ++i) r[i] = u.values[i] - u_in.values[i] - gux[i];
  const double residual = norm2(r) / norm2(u_in.values);
  EXPECT_LE(residual, s.tol);
  EXPECT_NEAR(residual, report.final_residual, 1e-3 * s.tol);
}

TEST(SolveTotalField, NonConvergenceReturnsFlag) {
  const Grid g(16, 0.02);
  const Medium m(1.0, 0.0084);
  const DomainOperator G(g, m);
  std::mt19937_64 rng(8);
  const Potential x = random_potential(g, m, 1.0, rng);
  const auto u_in = incident_field({1.6, 0.0}, SourceMode::kPointSource, g, m);
  const auto [u, report] = solve_total_field(x, u_in, G, SolverSettings{1e-12, 1, SolverMethod::kBiCGStab});
  EXPECT_FALSE(report.converged);
  EXPECT_GT(report.final_residual, 1e-12);
  EXPECT_EQ(u.values.size(), g.pixels());
}

TEST(SolverSettings, ValidationAndJson) {
  const SolverSettings s{1e-7, 50, SolverMethod::kCGNR};
  const nlohmann::json j = s;
  const auto back = j.get<SolverSettings>();
  EXPECT_EQ(back.tol, 1e-7);
  EXPECT_EQ(back.max_iter, 50);
  EXPECT_EQ(back.method, SolverMethod::kCGNR);
  EXPECT_THROW((SolverSettings{1.0, 10, SolverMethod::kBiCGStab}.validate()), ConfigError);
  EXPECT_THROW((SolverSettings{1e-6, 0, SolverMethod::kBiCGStab}.validate()), ConfigError);
  EXPECT_THROW(solver_method_from_string("gmres"), ConfigError);
}

TEST(Measure, ZeroInputsAndSinglePixel) {
  const Grid g(4, 0.005);
  const Medium m(1.0, 0.0084);
  ReceiverRing rx;
  rx.count = 6;
  rx.radius_m = 1.6;
  const SensorOperator S(g, m, rx);
  const auto u_in = incident_field({1.6, 0.0}, SourceMode::kPointSource, g, m);
  Potential x{g, std::vector<double>(g.pixels(), 0.0), 0.0};
  for (const auto& v : measure(u_in, x, S)) EXPECT_EQ(v, cplx{});
  x.values[5] = 300.0;
  const ComplexField zero{g, std::vector<cplx>(g.pixels())};
  for (const auto& v : measure(zero, x, S)) EXPECT_EQ(v, cplx{});
  const auto y = measure(u_in, x, S);
  const auto c = g.center(std::size_t{5});
  for (int r = 0; r < 6; ++r) {
    const auto p = rx.position(r);
    const cplx expected = green2d(p[0] - c[0], p[1] - c[1], m.k_b()) * g.pixel_area() * u_in.values[5] * 300.0;
    EXPECT_LE(std::abs(y[r] - expected), 1e-14 * std::abs(expected));
  }
  const Potential wrong{Grid(5, 0.005), std::vector<double>(25, 0.0), 0.0};
  EXPECT_THROW(measure(u_in, wrong, S), ValidationError);
}

TEST(SimulateTransmissions, SingleTransmissionMatchesPipeline) {
  auto scene = presets::desk_scene(1);
  scene.grid = Grid(16, 0.0225);
  const ForwardModel model(scene);
  std::mt19937_64 rng(2);
  const Potential x = random_potential(scene.grid, scene.medium, 1e-2, rng);
  const SolverSettings s;
  const auto ms = simulate_transmissions(model, x, s);
  const auto [u, report] = solve_total_field(x, model.incident()[0], model.domain(), s);
  const auto y = measure(u, x, model.sensor());
  ASSERT_EQ(ms.y.size(), y.size());
  EXPECT_EQ(ms.y, y);
  EXPECT_EQ(ms.scene_hash, scene_hash(scene));
  EXPECT_EQ(ms.reports.size(), 1u);
}

TEST(SimulateTransmissions, ZeroPotentialGivesZeroData) {
  auto scene = presets::desk_scene(4);
  const ForwardModel model(scene);
  const Potential x{scene.grid, std::vector<double>(scene.grid.pixels(), 0.0), 0.0};
  const auto ms = simulate_transmissions(model, x, SolverSettings{});
  EXPECT_EQ(ms.frobenius_sq(), 0.0);
  EXPECT_THROW(add_noise(ms, 20.0, 1), ValidationError);
}

TEST(SimulateTransmissions, CylinderRowNormsAreRotationInvariant) {
  // Sources at multiples of 90 degrees: the rasterized disk shares the square
  // lattice's quarter-turn symmetry, so every row is a receiver permutation.
  auto scene = presets::desk_scene(4);
  const ForwardModel model(scene);
  const Potential x = potential_cylinder(scene.grid, scene.medium, 0.015, 1.05);
  const auto ms = simulate_transmissions(model, x, SolverSettings{1e-10, 1000, SolverMethod::kBiCGStab});
  const double first = norm2(ms.row(0));
  for (int k = 1; k < 4; ++k) EXPECT_NEAR(norm2(ms.row(k)) / first, 1.0, 1e-8) << "k=" << k;
}

TEST(SimulateTransmissions, ThreadCountDoesNotChangeBits) {
  auto scene = presets::desk_scene(6);
  const ForwardModel model(scene);
  const Potential x = phantom_potential(scene, 1e-2);
  const auto a = simulate_transmissions(model, x, SolverSettings{}, 1);
  const auto b = simulate_transmissions(model, x, SolverSettings{}, 4);
  EXPECT_EQ(a.y, b.y);
}

TEST(SimulateTransmissions, FailureListsTransmissions) {
  auto scene = presets::desk_scene(3);
  const ForwardModel model(scene);
  const Potential x = phantom_potential(scene, 1e-1);
  try {
    simulate_transmissions(model, x, SolverSettings{1e-14, 1, SolverMethod::kBiCGStab});
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("0 (residual"), std::string::npos);
    EXPECT_NE(what.find("2 (residual"), std::string::npos);
  }
}

TEST(BornMeasure, LinearInPotential) {
  const auto scene = presets::desk_scene(5);
  const ForwardModel model(scene);
  const Potential x = phantom_potential(scene, 1e-3);
  Potential scaled = x;
  for (auto& v : scaled.values) v *= 7.5;
  const auto a = born_measure(model, x);
  const auto b = born_measure(model, scaled);
  std::vector<cplx> expected(a.y.size());
  for (std::size_t i = 0; i < a.y.size(); ++i) expected[i] = 7.5 * a.y[i];
  EXPECT_LE(relative_diff(b.y, expected), 1e-12);
  const Potential zero{scene.grid, std::vector<double>(scene.grid.pixels(), 0.0), 0.0};
  EXPECT_EQ(born_measure(model, zero).frobenius_sq(), 0.0);
}

TEST(BornMeasure, DeviationScalesWithContrast) {
  const auto scene = presets::desk_scene(40);
  const ForwardModel model(scene);
  const SolverSettings s{1e-10, 1000, SolverMethod::kBiCGStab};
  std::vector<double> deviation;
  for (double f : {1e-4, 1e-3, 1e-2, 1e-1}) {
    const Potential x = phantom_potential(scene, f);
    const auto full = simulate_transmissions(model, x, s);
    const auto born = born_measure(model, x);
    deviation.push_back(relative_diff(born.y, full.y));
  }
  const double ratio = deviation[0] / deviation[1];
  EXPECT_NEAR(ratio, 0.1, 0.03);
  for (std::size_t i = 1; i < deviation.size(); ++i) EXPECT_GE(deviation[i], deviation[i - 1]);
}

TEST(AddNoise, VarianceFromSnrDefinition) {
  // ||y||^2 = 100 and 20 dB give E||e||^2 = 1.
  EXPECT_NEAR(noise_sigma(100.0, 50, 20.0) * noise_sigma(100.0, 50, 20.0) * 50, 1.0, 1e-14);
  auto ms = synthetic_set(100, 1000, 1.0);
  const double scale = std::sqrt(100.0 / ms.frobenius_sq());
  for (auto& v : ms.y) v *= scale;
  const auto noisy = add_noise(ms, 20.0, 4);
  double e = 0.0;
  for (std::size_t i = 0; i < ms.y.size(); ++i) e += std::norm(noisy.y[i] - ms.y[i]);
  EXPECT_NEAR(e, 1.0, 0.02);
  EXPECT_EQ(noisy.noise.snr_db, 20.0);
  EXPECT_EQ(noisy.noise.seed, 4u);
  EXPECT_NEAR(noisy.noise.sigma, std::sqrt(1.0 / 1e5), 1e-15);
}

TEST(AddNoise, CalibratedAtRequestedSnr) {
  const auto ms = synthetic_set(40, 360, 3.0);
  for (double s : {5.0, 20.0, 35.0}) {
    const auto noisy = add_noise(ms, s, 99);
    EXPECT_NEAR(empirical_snr_db(ms, noisy), s, 0.1);
  }
}

TEST(AddNoise, CalibratedOverIndependentReplications) {
  const auto ms = synthetic_set(2, 8, 0.5);
  for (double s : {5.0, 20.0, 35.0}) {
    double noise = 0.0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
      const auto noisy = add_noise(ms, s, seed);
      for (std::size_t i = 0; i < ms.y.size(); ++i) noise += std::norm(noisy.y[i] - ms.y[i]);
    }
    EXPECT_NEAR(10.0 * std::log10(10000.0 * ms.frobenius_sq() / noise), s, 0.1) << "s=" << s;
  }
}

TEST(AddNoise, HugeSnrLeavesDataUnchanged) {
  const auto ms = synthetic_set(4, 10, 1.0);
  const auto noisy = add_noise(ms, 300.0, 1);
  EXPECT_LT(relative_diff(noisy.y, ms.y), 1e-14);
}

TEST(AddNoise, WhiteCircularComponents) {
  const auto ms = synthetic_set(100, 1000, 1.0);
  const auto noisy = add_noise(ms, 10.0, 12345);
  const double sigma = noisy.noise.sigma;
  double rr = 0.0;
  double ii = 0.0;
  double ri = 0.0;
  const double count = static_cast<double>(ms.y.size());
  for (std::size_t i = 0; i < ms.y.size(); ++i) {
    const cplx e = noisy.y[i] - ms.y[i];
    rr += e.real() * e.real();
    ii += e.imag() * e.imag();
    ri += e.real() * e.imag();
  }
  rr /= count;
  ii /= count;
  ri /= count;
  EXPECT_NEAR(rr / (sigma * sigma / 2.0), 1.0, 0.05);
  EXPECT_NEAR(ii / (sigma * sigma / 2.0), 1.0, 0.05);
  EXPECT_LT(std::abs(ri) / std::sqrt(rr * ii), 0.01);
  // Neighbouring samples are uncorrelated.
  double lag = 0.0;
  for (std::size_t i = 1; i < ms.y.size(); ++i) {
    lag += std::real(std::conj(noisy.y[i] - ms.y[i]) * (noisy.y[i - 1] - ms.y[i - 1]));
  }
  EXPECT_LT(std::abs(lag / count) / (rr + ii), 0.01);
}

TEST(AddNoise, DeterministicAndOneShot) {
  const auto ms = synthetic_set(8, 20, 1.0);
  const auto a = add_noise(ms, 15.0, 77);
  const auto b = add_noise(ms, 15.0, 77);
  const auto c = add_noise(ms, 15.0, 78);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.y, c.y);
  EXPECT_THROW(add_noise(a, 15.0, 1), UsageError);
}
