#pragma once

// Robustness-sweep datasets: (potential, measurements, backprojection)
// triples over a contrast, transmission-count or input-SNR sweep, with a JSON
// manifest recording every sample, seed and solver outcome.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mscat/errors.hpp"
#include "mscat/forward.hpp"
#include "mscat/inverse.hpp"
#include "mscat/parallel.hpp"
#include "mscat/pgm.hpp"
#include "mscat/random.hpp"
#include "mscat/scene.hpp"
#include "mscat/tensor_io.hpp"

namespace mscat {

inline constexpr std::string_view kVersion = "mscat 1.0.0";

enum class SweepAxis { kContrast, kTransmissions, kInputSnr };

inline std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kContrast: return "contrast";
    case SweepAxis::kTransmissions: return "transmissions";
    case SweepAxis::kInputSnr: return "input_snr";
  }
  return "";
}

/// Values of the axes that are not being swept.
struct SweepDefaults {
  double f_max = 1e-2;
  int transmissions = 40;
  std::optional<double> input_snr_db = 25.0;  // nullopt: noiseless
};

inline SweepDefaults sweep_defaults() { return {}; }

struct SplitCounts {
  int train = 0;
  int val = 0;
  int test = 0;
  int total() const { return train + val + test; }
};

struct ImageSource {
  std::optional<std::filesystem::path> directory;  // nullopt: builtin phantoms
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  SceneConfig scene;
  SweepAxis axis = SweepAxis::kContrast;
  std::vector<double> values;
  SweepDefaults fixed;
  SplitCounts counts;
  ImageSource images;
  std::uint64_t base_seed = 0;
  SolverSettings solver;

  void validate() const {
    scene.validate();
    solver.validate();
    if (values.empty()) throw ConfigError("sweep list must not be empty");
    if (counts.train < 0 || counts.val < 0 || counts.test < 0) throw ConfigError("split counts must be >= 0");
    for (double v : values) {
      if (!std::isfinite(v)) throw ConfigError("sweep values must be finite");
      if (axis == SweepAxis::kContrast && !(v > 0.0)) throw ConfigError("contrast values must be > 0");
      if (axis == SweepAxis::kTransmissions && (v < 1.0 || v != std::floor(v))) {
        throw ConfigError("transmission counts must be positive integers");
      }
    }
    if (!(fixed.f_max > 0.0)) throw ConfigError("fixed.f_max must be > 0");
    if (fixed.transmissions < 1) throw ConfigError("fixed.transmissions must be >= 1");
  }

  /// Scene, contrast and SNR in effect for sweep index `s`.
  SceneConfig scene_for(std::size_t s) const {
    SceneConfig out = scene;
    out.sources.count = axis == SweepAxis::kTransmissions ? static_cast<int>(values[s]) : fixed.transmissions;
    return out;
  }
  double f_max_for(std::size_t s) const { return axis == SweepAxis::kContrast ? values[s] : fixed.f_max; }
  std::optional<double> snr_for(std::size_t s) const {
    return axis == SweepAxis::kInputSnr ? std::optional<double>(values[s]) : fixed.input_snr_db;
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  nlohmann::json fixed{{"f_max", c.fixed.f_max}, {"transmissions", c.fixed.transmissions}};
  fixed["input_snr_db"] = c.fixed.input_snr_db ? nlohmann::json(*c.fixed.input_snr_db) : nlohmann::json(nullptr);
  nlohmann::json images = c.images.directory ? nlohmann::json{{"directory", c.images.directory->string()}}
                                             : nlohmann::json{{"builtin", "phantom"}};
  images["seed"] = c.images.seed;
  j = nlohmann::json{
      {"scene", c.scene},
      {"sweep", {{to_string(c.axis), c.values}}},
      {"fixed", fixed},
      {"counts", {{"train", c.counts.train}, {"val", c.counts.val}, {"test", c.counts.test}}},
      {"image_source", images},
      {"base_seed", c.base_seed},
      {"solver", c.solver},
  };
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  try {
    c.scene = j.at("scene").get<SceneConfig>();
    const auto& sweep = j.at("sweep");
    if (!sweep.is_object() || sweep.size() != 1) {
      throw ConfigError("sweep must hold exactly one of contrast, transmissions, input_snr");
    }
    const std::string key = sweep.begin().key();
    if (key == "contrast") {
      c.axis = SweepAxis::kContrast;
    } else if (key == "transmissions") {
      c.axis = SweepAxis::kTransmissions;
    } else if (key == "input_snr") {
      c.axis = SweepAxis::kInputSnr;
    } else {
      throw ConfigError("unknown sweep axis \"" + key + "\"");
    }
    c.values = sweep.begin().value().get<std::vector<double>>();
    if (j.contains("fixed")) {
      const auto& f = j.at("fixed");
      c.fixed.f_max = f.value("f_max", c.fixed.f_max);
      c.fixed.transmissions = f.value("transmissions", c.fixed.transmissions);
      if (f.contains("input_snr_db")) {
        c.fixed.input_snr_db =
            f.at("input_snr_db").is_null() ? std::nullopt : std::optional<double>(f.at("input_snr_db").get<double>());
      }
    }
    const auto& counts = j.at("counts");
    c.counts = {counts.value("train", 0), counts.value("val", 0), counts.value("test", 0)};
    if (j.contains("image_source")) {
      const auto& src = j.at("image_source");
      if (src.contains("directory")) c.images.directory = src.at("directory").get<std::string>();
      c.images.seed = src.value("seed", std::uint64_t{0});
    }
    c.base_seed = j.value("base_seed", std::uint64_t{0});
    if (j.contains("solver")) c.solver = j.at("solver").get<SolverSettings>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.validate();
}

namespace presets {

inline const std::vector<double> kContrastSweep{1e-1, 1e-2, 1e-3, 1e-4};
inline const std::vector<double> kTransmissionSweep{10, 20, 30, 40, 50, 60, 70, 80};
inline const std::vector<double> kInputSnrSweep{5, 15, 25, 35};
inline const std::vector<double> kExtremeNoise{5};

/// 16 x 16 smoke-test dataset: 4 samples, one contrast.
inline ExperimentConfig tiny_experiment() {
  ExperimentConfig c;
  c.scene = desk_scene(8);
  c.scene.grid = Grid(16, 0.0225);
  c.axis = SweepAxis::kContrast;
  c.values = {1e-2};
  c.fixed.transmissions = 8;
  c.counts = {2, 1, 1};
  c.base_seed = 1;
  return c;
}

inline ExperimentConfig desk_experiment(SweepAxis axis) {
  ExperimentConfig c;
  c.scene = desk_scene(sweep_defaults().transmissions);
  c.axis = axis;
  c.values = axis == SweepAxis::kContrast        ? kContrastSweep
             : axis == SweepAxis::kTransmissions ? kTransmissionSweep
                                                 : kInputSnrSweep;
  c.counts = {500, 24, 24};
  c.base_seed = 1;
  return c;
}

inline ExperimentConfig full_experiment(SweepAxis axis) {
  ExperimentConfig c = desk_experiment(axis);
  c.scene = full_scene(sweep_defaults().transmissions);
  c.counts = {1500, 24, 24};
  return c;
}

}  // namespace presets

/// Smooth random phantom in [0, 1] with maximum exactly 1: a sum of 3 to 6
/// ellipses with raised-cosine edges inside the inscribed disk.
inline std::vector<double> phantom_image(int n, std::uint64_t seed, std::uint64_t index) {
  CounterStream rng(mix_keys({seed, index, 0x70686E74ULL}));
  const int blobs = 3 + static_cast<int>(rng.next_u64() % 4);
  std::vector<double> img(static_cast<std::size_t>(n) * n, 0.0);
  for (int b = 0; b < blobs; ++b) {
    const double r0 = 0.55 * std::sqrt(rng.next_open_unit());
    const double t0 = 2.0 * std::numbers::pi * rng.next_open_unit();
    const double cx = r0 * std::cos(t0);
    const double cy = r0 * std::sin(t0);
    const double ax = 0.12 + 0.28 * rng.next_open_unit();
    const double ay = 0.12 + 0.28 * rng.next_open_unit();
    const double rot = std::numbers::pi * rng.next_open_unit();
    const double amp = 0.3 + 0.7 * rng.next_open_unit();
    const double c = std::cos(rot);
    const double s = std::sin(rot);
    for (int iy = 0; iy < n; ++iy) {
      for (int ix = 0; ix < n; ++ix) {
        const double x = (2.0 * ix + 1.0) / n - 1.0 - cx;
        const double y = (2.0 * iy + 1.0) / n - 1.0 - cy;
        const double u = (c * x + s * y) / ax;
        const double v = (-s * x + c * y) / ay;
        const double rho = std::sqrt(u * u + v * v);
        if (rho < 1.0) img[static_cast<std::size_t>(iy) * n + ix] += amp * 0.5 * (1.0 + std::cos(std::numbers::pi * rho));
      }
    }
  }
  const double peak = *std::max_element(img.begin(), img.end());
  if (peak > 0.0) {
    for (double& v : img) v = std::min(1.0, v / peak);
  }
  return img;
}

struct SampleRecord {
  int id = 0;
  std::string split;
  double sweep_value = 0.0;
  std::size_t sweep_index = 0;
  std::uint64_t seed = 0;
  std::string x_path, y_path, w_path;
  int iterations = 0;
  double residual = 0.0;
  double noise_sigma = 0.0;
  bool excluded = false;
  std::string reason;
};

struct DatasetManifest {
  nlohmann::json config;
  std::string version;
  std::vector<SampleRecord> samples;

  nlohmann::json to_json() const {
    nlohmann::json samples_json = nlohmann::json::array();
    for (const auto& s : samples) {
      nlohmann::json r{{"id", s.id},
                       {"split", s.split},
                       {"sweep_value", s.sweep_value},
                       {"seed", s.seed},
                       {"solver", {{"iterations", s.iterations}, {"residual", s.residual}}},
                       {"noise_sigma", s.noise_sigma},
                       {"excluded", s.excluded},
                       {"reason", s.reason}};
      for (const auto& [key, path] : {std::pair{"x_path", &s.x_path}, {"y_path", &s.y_path}, {"w_path", &s.w_path}}) {
        r[key] = s.excluded ? nlohmann::json(nullptr) : nlohmann::json(*path);
      }
      samples_json.push_back(std::move(r));
    }
    return {{"config", config},
            {"version", version},
            {"generator", std::string(kGeneratorName)},
            {"defaults", config.value("fixed", nlohmann::json::object())},
            {"samples", samples_json}};
  }

  static DatasetManifest from_json(const nlohmann::json& j) {
    DatasetManifest m;
    try {
      m.config = j.at("config");
      m.version = j.at("version").get<std::string>();
      for (const auto& r : j.at("samples")) {
        SampleRecord s;
        s.id = r.at("id").get<int>();
        s.split = r.at("split").get<std::string>();
        s.sweep_value = r.at("sweep_value").get<double>();
        s.seed = r.at("seed").get<std::uint64_t>();
        s.excluded = r.at("excluded").get<bool>();
        s.reason = r.value("reason", std::string());
        s.iterations = r.at("solver").at("iterations").get<int>();
        s.residual = r.at("solver").at("residual").get<double>();
        s.noise_sigma = r.value("noise_sigma", 0.0);
        if (!s.excluded) {
          s.x_path = r.at("x_path").get<std::string>();
          s.y_path = r.at("y_path").get<std::string>();
          s.w_path = r.at("w_path").get<std::string>();
        }
        m.samples.push_back(std::move(s));
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("manifest: ") + e.what(), 0);
    }
    return m;
  }
};

inline std::string format_sweep_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string format_sample_id(int id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05d", id);
  return buf;
}

/// Per-sample noise seed, splitmix-mixed from (base_seed, sample_id, sweep_index).
inline std::uint64_t sample_seed(std::uint64_t base_seed, int sample_id, std::size_t sweep_index) {
  return mix_keys({base_seed, static_cast<std::uint64_t>(sample_id), static_cast<std::uint64_t>(sweep_index)});
}

namespace detail {

inline std::vector<std::filesystem::path> select_images(const ExperimentConfig& cfg) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(*cfg.images.directory, ec)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".pgm" || ext == ".PGM")) files.push_back(e.path());
  }
  if (ec) throw IoError("cannot list image directory " + cfg.images.directory->string() + ": " + ec.message());
  std::sort(files.begin(), files.end());
  const auto needed = static_cast<std::size_t>(cfg.counts.total());
  if (files.size() < needed) {
    throw ConfigError("image directory holds " + std::to_string(files.size()) + " graymaps, " +
                      std::to_string(needed) + " needed");
  }
  // Fisher-Yates on the sorted list; the first `needed` entries are disjoint draws.
  CounterStream rng(mix_keys({cfg.images.seed, 0x73687566ULL}));
  for (std::size_t i = files.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(files[i - 1], files[j]);
  }
  files.resize(needed);
  return files;
}

}  // namespace detail

/// Generates the dataset under out_dir and writes out_dir/manifest.json.
/// Output is a function of the config alone: the thread count only changes
/// scheduling. Noiseless measurements do not depend on base_seed.
inline DatasetManifest generate_dataset(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                        int threads = 1) {
  cfg.validate();
  if (cfg.counts.total() == 0) throw ConfigError("dataset has no samples (all split counts are 0)");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<std::pair<int, std::string>> ids;
  for (int i = 0; i < cfg.counts.train; ++i) ids.emplace_back(static_cast<int>(ids.size()), "train");
  for (int i = 0; i < cfg.counts.val; ++i) ids.emplace_back(static_cast<int>(ids.size()), "val");
  for (int i = 0; i < cfg.counts.test; ++i) ids.emplace_back(static_cast<int>(ids.size()), "test");
  for (const char* split : {"train", "val", "test"}) {
    fs::create_directories(out_dir / split, ec);
    if (ec) throw IoError("cannot create split directory: " + ec.message());
  }

  std::vector<fs::path> image_files;
  if (cfg.images.directory) image_files = detail::select_images(cfg);

  // One forward model per distinct scene (only the transmission sweep varies it).
  std::map<int, std::shared_ptr<const ForwardModel>> models;
  for (std::size_t s = 0; s < cfg.values.size(); ++s) {
    const SceneConfig scene = cfg.scene_for(s);
    if (!models.count(scene.sources.count)) {
      models[scene.sources.count] = std::make_shared<const ForwardModel>(scene, threads);
    }
  }

  const std::size_t sweeps = cfg.values.size();
  std::vector<SampleRecord> records(ids.size() * sweeps);
  const int n = cfg.scene.grid.n();
  parallel_for(records.size(), threads, [&](std::size_t item) {
    const std::size_t sample = item / sweeps;
    const std::size_t s = item % sweeps;
    SampleRecord& rec = records[item];
    rec.id = ids[sample].first;
    rec.split = ids[sample].second;
    rec.sweep_value = cfg.values[s];
    rec.sweep_index = s;
    rec.seed = sample_seed(cfg.base_seed, rec.id, s);
    const std::string stem = rec.split + "/" + format_sample_id(rec.id) + "_" + format_sweep_value(rec.sweep_value);
    std::vector<double> img;
    try {
      img = cfg.images.directory ? resample_square(read_pgm(image_files[sample]), n)
                                 : phantom_image(n, cfg.images.seed, static_cast<std::uint64_t>(rec.id));
    } catch (const IoError& e) {
      rec.excluded = true;
      rec.reason = std::string("image: ") + e.what();
      return;
    }
    const ForwardModel& model = *models.at(cfg.scene_for(s).sources.count);
    const Potential x = potential_from_image(cfg.scene.grid, img, cfg.f_max_for(s), cfg.scene.medium);
    MeasurementSet ms;
    try {
      ms = simulate_transmissions(model, x, cfg.solver);
    } catch (const SolverError& e) {
      rec.excluded = true;
      rec.reason = std::string("solver: ") + e.what();
      return;
    }
    for (const auto& r : ms.reports) {
      rec.iterations = std::max(rec.iterations, r.iterations);
      rec.residual = std::max(rec.residual, r.final_residual);
    }
    if (const auto snr = cfg.snr_for(s)) {
      try {
        ms = add_noise(ms, *snr, rec.seed);
      } catch (const ValidationError& e) {
        // A blank image scatters nothing, so there is no signal to calibrate against.
        rec.excluded = true;
        rec.reason = std::string("noise: ") + e.what();
        return;
      }
    }
    rec.noise_sigma = ms.noise.sigma;
    const Backprojection bp = backproject(ms, model.incident(), model.sensor());

    const std::vector<std::uint64_t> grid_dims{static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(n)};
    const std::vector<std::uint64_t> y_dims{static_cast<std::uint64_t>(ms.k_count),
                                            static_cast<std::uint64_t>(ms.m_count)};
    rec.x_path = stem + ".x.sctn";
    rec.y_path = stem + ".y.sctn";
    rec.w_path = stem + ".w.sctn";
    write_tensor(out_dir / rec.x_path, make_tensor(grid_dims, std::span<const double>(x.values)));
    write_tensor(out_dir / rec.y_path, make_tensor(y_dims, std::span<const cplx>(ms.y)));
    write_tensor(out_dir / rec.w_path, make_tensor(grid_dims, std::span<const cplx>(bp.w)));
  });

  std::size_t included = 0;
  for (const auto& r : records) included += r.excluded ? 0 : 1;
  if (included == 0) throw SolverError("dataset generation produced no usable samples");

  DatasetManifest manifest;
  manifest.config = cfg;
  manifest.version = std::string(kVersion);
  manifest.samples = std::move(records);
  write_text_atomic(out_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  return manifest;
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what(), 0);
  }
  return DatasetManifest::from_json(j);
}

}  // namespace mscat
