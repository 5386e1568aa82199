#pragma once

// Physical configuration: pixel grid, background medium, transmitter and
// receiver rings, scattering potentials and incident fields.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "mscat/errors.hpp"
#include "mscat/green_function.hpp"
#include "mscat/random.hpp"

namespace mscat {

using Point = std::array<double, 2>;

/// Square n x n lattice of pixel centers, origin at the domain center.
/// Pixel index i = iy * n + ix; x grows with ix, y with iy.
class Grid {
 public:
  Grid() = default;
  Grid(int n, double size_m) : n_(n), size_m_(size_m) {
    if (n < 2) throw ConfigError("grid.n must be >= 2, got " + std::to_string(n));
    if (!(size_m > 0.0) || !std::isfinite(size_m)) {
      throw ConfigError("grid.size_m must be positive and finite");
    }
  }

  int n() const { return n_; }
  std::size_t pixels() const { return static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_); }
  double size_m() const { return size_m_; }
  double pixel_m() const { return size_m_ / n_; }
  double pixel_area() const { return pixel_m() * pixel_m(); }

  double coordinate(int index) const { return (index - 0.5 * (n_ - 1)) * pixel_m(); }
  Point center(int ix, int iy) const { return {coordinate(ix), coordinate(iy)}; }
  Point center(std::size_t i) const {
    return center(static_cast<int>(i % static_cast<std::size_t>(n_)),
                  static_cast<int>(i / static_cast<std::size_t>(n_)));
  }
  std::vector<Point> centers() const {
    std::vector<Point> out(pixels());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = center(i);
    return out;
  }

  bool operator==(const Grid&) const = default;

 private:
  int n_ = 2;
  double size_m_ = 1.0;
};

class Medium {
 public:
  Medium() = default;
  Medium(double eps_b, double lambda_m) : eps_b_(eps_b), lambda_m_(lambda_m) {
    if (!(eps_b > 0.0)) throw ConfigError("medium.eps_b must be > 0");
    if (!(lambda_m > 0.0)) throw ConfigError("medium.lambda_m must be > 0");
  }

  double eps_b() const { return eps_b_; }
  double lambda_m() const { return lambda_m_; }
  /// Vacuum wavenumber 2*pi/lambda.
  double k() const { return 2.0 * std::numbers::pi / lambda_m_; }
  /// Background wavenumber k*sqrt(eps_b).
  double k_b() const { return k() * std::sqrt(eps_b_); }
  double lambda_b() const { return lambda_m_ / std::sqrt(eps_b_); }

  bool operator==(const Medium&) const = default;

 private:
  double eps_b_ = 1.0;
  double lambda_m_ = 1.0;
};

enum class SourceMode { kPointSource, kPlaneWave };

inline std::string to_string(SourceMode mode) {
  return mode == SourceMode::kPointSource ? "point_source" : "plane_wave";
}

inline SourceMode source_mode_from_string(const std::string& s) {
  if (s == "point_source") return SourceMode::kPointSource;
  if (s == "plane_wave") return SourceMode::kPlaneWave;
  throw ConfigError("sources.mode must be \"point_source\" or \"plane_wave\", got \"" + s + "\"");
}

/// `count` points uniformly on a circle, the first at angle 0, counter-clockwise.
struct Ring {
  int count = 1;
  double radius_m = 1.0;

  double angle(int index) const { return 2.0 * std::numbers::pi * index / count; }
  Point position(int index) const {
    const double a = angle(index);
    return {radius_m * std::cos(a), radius_m * std::sin(a)};
  }
  std::vector<Point> positions() const {
    std::vector<Point> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = position(i);
    return out;
  }
};

struct SourceRing : Ring {
  SourceMode mode = SourceMode::kPointSource;
};

struct ReceiverRing : Ring {};

struct ComplexField {
  Grid grid;
  std::vector<cplx> values;
};

struct Potential {
  Grid grid;
  std::vector<double> values;  // 1/m^2
  double f_max = 0.0;
};

struct SceneConfig {
  Grid grid;
  Medium medium;
  SourceRing sources;
  ReceiverRing receivers;

  void validate() const {
    const double half_diagonal = grid.size_m() / std::sqrt(2.0);
    if (sources.count < 1) throw ConfigError("sources.count must be >= 1");
    if (receivers.count < 1) throw ConfigError("receivers.count must be >= 1");
    if (!(sources.radius_m > half_diagonal)) {
      throw ConfigError("sources.radius_m must place every source outside the grid");
    }
    if (!(receivers.radius_m > half_diagonal)) {
      throw ConfigError("receivers.radius_m must place every receiver outside the grid");
    }
  }
};

inline void to_json(nlohmann::json& j, const SceneConfig& s) {
  j = nlohmann::json{
      {"grid", {{"n", s.grid.n()}, {"size_m", s.grid.size_m()}}},
      {"medium", {{"eps_b", s.medium.eps_b()}, {"lambda_m", s.medium.lambda_m()}}},
      {"sources",
       {{"count", s.sources.count}, {"radius_m", s.sources.radius_m}, {"mode", to_string(s.sources.mode)}}},
      {"receivers", {{"count", s.receivers.count}, {"radius_m", s.receivers.radius_m}}},
  };
}

inline void from_json(const nlohmann::json& j, SceneConfig& s) {
  try {
    const auto& g = j.at("grid");
    const auto& m = j.at("medium");
    const auto& src = j.at("sources");
    const auto& rcv = j.at("receivers");
    s.grid = Grid(g.at("n").get<int>(), g.at("size_m").get<double>());
    s.medium = Medium(m.at("eps_b").get<double>(), m.at("lambda_m").get<double>());
    s.sources.count = src.at("count").get<int>();
    s.sources.radius_m = src.at("radius_m").get<double>();
    s.sources.mode = source_mode_from_string(src.value("mode", std::string("point_source")));
    s.receivers.count = rcv.at("count").get<int>();
    s.receivers.radius_m = rcv.at("radius_m").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scene config: ") + e.what());
  }
  s.validate();
}

/// Stable digest of the scene, stored with every measurement set.
inline std::uint64_t scene_hash(const SceneConfig& s) {
  return fnv1a64(nlohmann::json(s).dump());
}

namespace presets {

/// Full-scale geometry: 18 cm domain on 128 x 128, lambda 0.84 cm in air,
/// sources and 360 receivers on a 1.6 m ring.
inline SceneConfig full_scene(int transmissions = 40) {
  SceneConfig s;
  s.grid = Grid(128, 0.18);
  s.medium = Medium(1.0, 0.0084);
  s.sources.count = transmissions;
  s.sources.radius_m = 1.6;
  s.sources.mode = SourceMode::kPointSource;
  s.receivers.count = 360;
  s.receivers.radius_m = 1.6;
  return s;
}

/// Desk-scale geometry: same pixel pitch and wavelength, 32 x 32 over 4.5 cm.
inline SceneConfig desk_scene(int transmissions = 40) {
  SceneConfig s = full_scene(transmissions);
  s.grid = Grid(32, 0.045);
  return s;
}

}  // namespace presets

/// x = k^2 eps_b f_max img, i.e. eps(r) = eps_b (1 + f_max img(r)).
inline Potential potential_from_image(const Grid& grid, std::span<const double> img, double f_max,
                                      const Medium& medium) {
  if (img.size() != grid.pixels()) {
    throw ValidationError("image has " + std::to_string(img.size()) + " pixels, grid needs " +
                          std::to_string(grid.pixels()));
  }
  if (!(f_max > 0.0) || !std::isfinite(f_max)) throw ValidationError("f_max must be positive");
  const double scale = medium.k() * medium.k() * medium.eps_b() * f_max;
  Potential p{grid, std::vector<double>(img.size()), f_max};
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (!(img[i] >= 0.0 && img[i] <= 1.0)) {
      throw ValidationError("image value " + std::to_string(img[i]) + " at pixel " + std::to_string(i) +
                            " is outside [0, 1]");
    }
    p.values[i] = scale * img[i];
  }
  return p;
}

/// Homogeneous disk of permittivity eps_c centered at the origin; pixels whose
/// centers lie within radius_m get k^2 (eps_c - eps_b).
inline Potential potential_cylinder(const Grid& grid, const Medium& medium, double radius_m, double eps_c) {
  if (!(radius_m > 0.0) || !(radius_m < 0.5 * grid.size_m())) {
    throw ValidationError("cylinder radius must lie in (0, size_m/2)");
  }
  if (!(eps_c >= medium.eps_b())) throw ValidationError("cylinder permittivity must be >= eps_b");
  const double contrast = medium.k() * medium.k() * (eps_c - medium.eps_b());
  Potential p{grid, std::vector<double>(grid.pixels(), 0.0), (eps_c - medium.eps_b()) / medium.eps_b()};
  for (std::size_t i = 0; i < grid.pixels(); ++i) {
    const auto c = grid.center(i);
    if (std::hypot(c[0], c[1]) <= radius_m) p.values[i] = contrast;
  }
  return p;
}

/// Incident field of the transmitter at `source` sampled at every pixel center.
/// Point sources radiate g(r - r_s); plane waves travel from the source
/// direction toward the origin with unit amplitude at the origin.
inline ComplexField incident_field(const Point& source, SourceMode mode, const Grid& grid, const Medium& medium) {
  ComplexField u{grid, std::vector<cplx>(grid.pixels())};
  const double k_b = medium.k_b();
  if (mode == SourceMode::kPlaneWave) {
    const double norm = std::hypot(source[0], source[1]);
    if (!(norm > 0.0)) throw ValidationError("plane-wave source direction undefined at the origin");
    const double dx = -source[0] / norm;
    const double dy = -source[1] / norm;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
      const auto c = grid.center(i);
      u.values[i] = std::polar(1.0, k_b * (dx * c[0] + dy * c[1]));
    }
    return u;
  }
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    const auto c = grid.center(i);
    u.values[i] = green2d(c[0] - source[0], c[1] - source[1], k_b);
  }
  return u;
}

inline std::vector<ComplexField> incident_fields(const SceneConfig& scene) {
  std::vector<ComplexField> out;
  out.reserve(static_cast<std::size_t>(scene.sources.count));
  for (int k = 0; k < scene.sources.count; ++k) {
    out.push_back(incident_field(scene.sources.position(k), scene.sources.mode, scene.grid, scene.medium));
  }
  return out;
}

}  // namespace mscat
