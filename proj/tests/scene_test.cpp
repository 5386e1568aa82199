#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "mscat/errors.hpp"
#include "mscat/scene.hpp"

using namespace mscat;

TEST(Grid, CentersAreSymmetricAboutOrigin) {
  for (int n : {2, 7, 32}) {
    const Grid g(n, 0.18);
    double sx = 0.0;
    double sy = 0.0;
    for (const auto& c : g.centers()) {
      sx += c[0];
      sy += c[1];
    }
    EXPECT_NEAR(sx, 0.0, 1e-12);
    EXPECT_NEAR(sy, 0.0, 1e-12);
    EXPECT_NEAR(g.center(0, 0)[0], -g.center(n - 1, n - 1)[0], 1e-15);
    EXPECT_DOUBLE_EQ(g.pixel_m() * n, 0.18);
  }
}

TEST(Grid, RowMajorIndexing) {
  const Grid g(5, 1.0);
  // i = iy * n + ix
  EXPECT_EQ(g.center(std::size_t{7})[0], g.center(2, 1)[0]);
  EXPECT_EQ(g.center(std::size_t{7})[1], g.center(2, 1)[1]);
  EXPECT_NEAR(g.center(0, 0)[0], -0.4, 1e-15);
}

TEST(Grid, RejectsDegenerateShapes) {
  EXPECT_THROW(Grid(1, 0.1), ConfigError);
  EXPECT_THROW(Grid(8, 0.0), ConfigError);
  EXPECT_THROW(Grid(8, -1.0), ConfigError);
  EXPECT_THROW(Medium(0.0, 0.01), ConfigError);
  EXPECT_THROW(Medium(1.0, 0.0), ConfigError);
}

TEST(Medium, Wavenumbers) {
  const Medium m(2.25, 0.0084);
  EXPECT_DOUBLE_EQ(m.k(), 2.0 * std::numbers::pi / 0.0084);
  EXPECT_DOUBLE_EQ(m.k_b(), m.k() * 1.5);
  EXPECT_DOUBLE_EQ(m.lambda_b(), 0.0084 / 1.5);
}

TEST(Potential, ZeroImageGivesZeroPotential) {
  const Grid g(8, 0.02);
  const std::vector<double> img(g.pixels(), 0.0);
  const auto p = potential_from_image(g, img, 1e-2, Medium(1.0, 0.0084));
  for (double v : p.values) EXPECT_EQ(v, 0.0);
}

TEST(Potential, PeakValueForUnitImage) {
  const Grid g(8, 0.02);
  std::vector<double> img(g.pixels(), 0.25);
  img[11] = 1.0;
  const auto p = potential_from_image(g, img, 1e-2, Medium(1.0, 0.0084));
  const double k = 2.0 * std::numbers::pi / 0.0084;
  EXPECT_NEAR(p.values[11], 5.59501e3, 0.01);
  EXPECT_DOUBLE_EQ(p.values[11], k * k * 1e-2);
  EXPECT_DOUBLE_EQ(p.values[0], 0.25 * k * k * 1e-2);
  EXPECT_EQ(p.f_max, 1e-2);
}

TEST(Potential, RejectsOutOfRangeImages) {
  const Grid g(4, 0.02);
  const Medium m(1.0, 0.0084);
  std::vector<double> img(g.pixels(), 0.5);
  img[3] = 1.5;
  EXPECT_THROW(potential_from_image(g, img, 1e-2, m), ValidationError);
  img[3] = -0.1;
  EXPECT_THROW(potential_from_image(g, img, 1e-2, m), ValidationError);
  EXPECT_THROW(potential_from_image(g, std::vector<double>(5, 0.0), 1e-2, m), ValidationError);
}

TEST(Cylinder, PixelCountByEnumeration) {
  const Grid g(64, 0.18);
  const Medium m(1.0, 0.0084);
  const auto p = potential_cylinder(g, m, 0.03, 1.02);
  int inside = 0;
  for (double v : p.values) inside += v > 0.0 ? 1 : 0;
  int expected = 0;
  const double h = 0.18 / 64;
  for (int iy = 0; iy < 64; ++iy) {
    for (int ix = 0; ix < 64; ++ix) {
      const double x = (ix + 0.5) * h - 0.09;
      const double y = (iy + 0.5) * h - 0.09;
      if (x * x + y * y <= 0.03 * 0.03) ++expected;
    }
  }
  EXPECT_EQ(inside, expected);
  EXPECT_EQ(inside, 360);
  EXPECT_NEAR(inside, std::numbers::pi * std::pow(0.03 / h, 2), 40.0);
  const double k = m.k();
  for (double v : p.values) {
    if (v > 0.0) {
      EXPECT_DOUBLE_EQ(v, k * k * (1.02 - 1.0));
    }
  }
}

TEST(Cylinder, NoContrastAndBadRadius) {
  const Grid g(16, 0.18);
  const Medium m(1.0, 0.0084);
  for (double v : potential_cylinder(g, m, 0.03, 1.0).values) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(potential_cylinder(g, m, 0.18, 1.02), ValidationError);
  EXPECT_THROW(potential_cylinder(g, m, 0.03, 0.9), ValidationError);
}

TEST(IncidentField, PlaneWaveIsUnitAtOrigin) {
  // Odd grid puts a pixel center exactly on the origin.
  const Grid g(5, 0.01);
  const Medium m(1.0, 0.0084);
  const auto u = incident_field({1.6, 0.0}, SourceMode::kPlaneWave, g, m);
  const cplx center = u.values[12];
  EXPECT_EQ(center, cplx(1.0, 0.0));
  for (const auto& v : u.values) EXPECT_NEAR(std::abs(v), 1.0, 1e-14);
  // Travels toward -x: phase exp(-i k_b x).
  const double x0 = g.center(0, 2)[0];
  EXPECT_NEAR(std::arg(u.values[10] * std::exp(cplx(0.0, m.k_b() * x0))), 0.0, 1e-12);
}

TEST(IncidentField, PointSourceAtUnitElectricalDistance) {
  const Medium m(1.0, 2.0 * std::numbers::pi);  // k_b = 1
  const Grid g(3, 0.3);
  // Pixel (1, 1) sits at the origin; a source at distance 1 gives k_b d = 1.
  const auto u = incident_field({1.0, 0.0}, SourceMode::kPointSource, g, m);
  EXPECT_NEAR(u.values[4].real(), -0.0220642411, 1e-8);
  EXPECT_NEAR(u.values[4].imag(), 0.1912994217, 1e-8);
}

TEST(IncidentField, RotatingSourcePermutesSamples) {
  // A quarter-turn of the source maps the field onto the rotated lattice.
  const Grid g(6, 0.03);
  const Medium m(1.0, 0.0084);
  const auto a = incident_field({1.6, 0.0}, SourceMode::kPointSource, g, m);
  const auto b = incident_field({0.0, 1.6}, SourceMode::kPointSource, g, m);
  const int n = g.n();
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      // (x, y) -> (-y, x)
      const int rx = n - 1 - iy;
      const int ry = ix;
      EXPECT_NEAR(std::abs(a.values[iy * n + ix] - b.values[ry * n + rx]), 0.0, 1e-14);
    }
  }
}

TEST(IncidentFields, OnePerSourceInAngleOrder) {
  auto s = presets::desk_scene(8);
  s.sources.mode = SourceMode::kPlaneWave;
  const auto fields = incident_fields(s);
  ASSERT_EQ(fields.size(), 8u);
  for (int k = 0; k < 8; ++k) {
    const auto ref = incident_field(s.sources.position(k), SourceMode::kPlaneWave, s.grid, s.medium);
    EXPECT_EQ(fields[k].values, ref.values);
  }
  EXPECT_NEAR(s.sources.angle(2), std::numbers::pi / 2.0, 1e-15);
}

TEST(SceneConfig, JsonRoundTripAndHash) {
  const auto s = presets::desk_scene(20);
  const nlohmann::json j = s;
  EXPECT_EQ(j.at("grid").at("n"), 32);
  EXPECT_EQ(j.at("sources").at("mode"), "point_source");
  const auto back = j.get<SceneConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_EQ(scene_hash(back), scene_hash(s));
  auto other = s;
  other.sources.count = 21;
  EXPECT_NE(scene_hash(other), scene_hash(s));
}

TEST(SceneConfig, RejectsRingsInsideTheGrid) {
  auto j = nlohmann::json(presets::desk_scene());
  j["receivers"]["radius_m"] = 0.01;
  EXPECT_THROW(j.get<SceneConfig>(), ConfigError);
  j = nlohmann::json(presets::desk_scene());
  j["sources"]["mode"] = "laser";
  EXPECT_THROW(j.get<SceneConfig>(), ConfigError);
  j = nlohmann::json(presets::desk_scene());
  j.erase("medium");
  EXPECT_THROW(j.get<SceneConfig>(), ConfigError);
}

TEST(Presets, Geometry) {
  const auto full = presets::full_scene();
  EXPECT_EQ(full.grid.n(), 128);
  EXPECT_DOUBLE_EQ(full.grid.size_m(), 0.18);
  EXPECT_DOUBLE_EQ(full.medium.lambda_m(), 0.0084);
  EXPECT_EQ(full.receivers.count, 360);
  EXPECT_EQ(full.sources.count, 40);
  EXPECT_DOUBLE_EQ(full.sources.radius_m, 1.6);
  const auto desk = presets::desk_scene();
  EXPECT_EQ(desk.grid.n(), 32);
  EXPECT_DOUBLE_EQ(desk.grid.pixel_m(), full.grid.pixel_m());
}
