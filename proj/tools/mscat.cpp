// mscat: command-line front end for simulation, backprojection, validation,
// dataset generation, baseline reconstruction and metrics.
//
// Exit codes: 0 ok, 2 configuration/usage, 3 solver, 4 I/O, 5 validation.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mscat/errors.hpp"
#include "mscat/forward.hpp"
#include "mscat/harness.hpp"
#include "mscat/inverse.hpp"
#include "mscat/pgm.hpp"
#include "mscat/scene.hpp"
#include "mscat/tensor_io.hpp"
#include "mscat/validation.hpp"

namespace fs = std::filesystem;
using namespace mscat;

namespace {

nlohmann::json load_json(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

SolverSettings solver_from(const nlohmann::json& j) {
  return j.contains("solver") ? j.at("solver").get<SolverSettings>() : SolverSettings{};
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse " + what + " from \"" + s + "\"");
  }
}

/// builtin:zero | builtin:cylinder:<radius_m>:<eps_c> |
/// builtin:phantom:<index>:<f_max>[:<seed>] | path to a real [n, n] SCTN tensor (1/m^2).
Potential load_potential(const std::string& source, const SceneConfig& scene) {
  const Grid& grid = scene.grid;
  if (source.rfind("builtin:", 0) == 0) {
    const auto parts = split(source.substr(8), ':');
    if (parts.empty()) throw ConfigError("empty builtin potential");
    if (parts[0] == "zero" && parts.size() == 1) return Potential{grid, std::vector<double>(grid.pixels(), 0.0), 0.0};
    if (parts[0] == "cylinder" && parts.size() == 3) {
      return potential_cylinder(grid, scene.medium, parse_double(parts[1], "radius"), parse_double(parts[2], "eps_c"));
    }
    if (parts[0] == "phantom" && (parts.size() == 3 || parts.size() == 4)) {
      const auto index = static_cast<std::uint64_t>(parse_double(parts[1], "phantom index"));
      const auto seed = parts.size() == 4 ? static_cast<std::uint64_t>(parse_double(parts[3], "seed")) : 0;
      const auto img = phantom_image(grid.n(), seed, index);
      return potential_from_image(grid, img, parse_double(parts[2], "f_max"), scene.medium);
    }
    throw ConfigError("unknown builtin potential \"" + source + "\"");
  }
  const Tensor t = read_tensor(source);
  if (t.dims.size() != 2 || t.dims[0] != static_cast<std::uint64_t>(grid.n()) || t.dims[1] != t.dims[0]) {
    throw ValidationError("potential tensor must have dims [" + std::to_string(grid.n()) + ", " +
                          std::to_string(grid.n()) + "]");
  }
  return Potential{grid, real_values(t), 0.0};
}

MeasurementSet load_measurements(const fs::path& path, const SceneConfig& scene) {
  const Tensor t = read_tensor(path);
  const auto K = static_cast<std::uint64_t>(scene.sources.count);
  const auto M = static_cast<std::uint64_t>(scene.receivers.count);
  if (t.dims.size() != 2 || t.dims[0] != K || t.dims[1] != M) {
    std::string got;
    for (auto d : t.dims) got += (got.empty() ? "" : ", ") + std::to_string(d);
    throw ValidationError("measurements have dims [" + got + "], config expects [" + std::to_string(K) + ", " +
                          std::to_string(M) + "]");
  }
  MeasurementSet ms;
  ms.k_count = static_cast<int>(K);
  ms.m_count = static_cast<int>(M);
  ms.y = complex_values(t);
  ms.scene_hash = scene_hash(scene);
  return ms;
}

std::vector<double> load_real(const fs::path& path) { return real_values(read_tensor(path)); }

void write_grid_pgms(const std::vector<cplx>& w, int n, const fs::path& out, std::vector<fs::path>& artifacts) {
  std::vector<double> re(w.size()), im(w.size()), ab(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    re[i] = w[i].real();
    im[i] = w[i].imag();
    ab[i] = std::abs(w[i]);
  }
  for (const auto& [name, data] : {std::pair{"w_re.pgm", &re}, {"w_im.pgm", &im}, {"w_abs.pgm", &ab}}) {
    render_pgm(*data, n, n, out / name);
    artifacts.push_back(out / name);
  }
}

void print_artifacts(const std::vector<fs::path>& artifacts) {
  for (const auto& p : artifacts) std::cout << "wrote " << p.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mscat: 2D multiple-scattering simulation, backprojection and datasets"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 1;
  app.add_option("--threads", threads, "Maximum worker threads")->check(CLI::PositiveNumber);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Solve the forward model for every transmitter and write y.sctn");
  std::string sim_config, sim_potential, sim_out;
  std::optional<double> sim_snr;
  std::uint64_t sim_seed = 0;
  bool sim_born = false;
  sim->add_option("--config", sim_config, "Scene config JSON (optional \"solver\" block)")->required();
  sim->add_option("--potential", sim_potential,
                  "SCTN real [n,n] potential in 1/m^2, or builtin:zero, builtin:cylinder:<radius_m>:<eps_c>, "
                  "builtin:phantom:<index>:<f_max>[:<seed>]")
      ->required();
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->add_option("--snr", sim_snr, "Input SNR in dB for additive noise");
  sim->add_option("--seed", sim_seed, "Noise seed");
  sim->add_flag("--born", sim_born, "First-order (Born) measurements instead of the full model");

  // backproject
  auto* bp = app.add_subcommand("backproject", "Backproject measurements to the image domain (w.sctn)");
  std::string bp_config, bp_meas, bp_out;
  bool bp_pgm = false;
  bp->add_option("--config", bp_config, "Scene config JSON")->required();
  bp->add_option("--measurements", bp_meas, "Measurements SCTN [K, M] complex")->required();
  bp->add_option("--out", bp_out, "Output directory")->required();
  bp->add_flag("--pgm", bp_pgm, "Also write Re(w), Im(w), |w| as PGM images");

  // validate
  auto* val = app.add_subcommand("validate", "Compare the solver against the analytic cylinder solution");
  std::string val_preset = "cylinder";
  CylinderCase cyl;
  double val_tol = 0.05;
  std::vector<int> val_grids;
  val->add_option("--preset", val_preset, "Validation preset")->check(CLI::IsMember({"cylinder"}));
  val->add_option("--grid", val_grids, "Grid sizes (repeatable; default 32 64 128)");
  val->add_option("--radius", cyl.radius_m, "Cylinder radius (m)");
  val->add_option("--eps-c", cyl.eps_c, "Cylinder relative permittivity");
  val->add_option("--eps-b", cyl.eps_b, "Background relative permittivity");
  val->add_option("--lambda", cyl.lambda_m, "Wavelength (m)");
  val->add_option("--size", cyl.size_m, "Domain side length (m)");
  val->add_option("--receivers", cyl.receivers, "Receiver count");
  val->add_option("--receiver-radius", cyl.receiver_radius_m, "Receiver ring radius (m)");
  val->add_option("--angle", cyl.incidence_angle, "Plane-wave incidence angle (rad)");
  val->add_option("--solver-tol", cyl.solver.tol, "Relative residual target of the solver");
  val->add_option("--tol", val_tol, "Pass threshold on the finest-grid relative error");

  // dataset
  auto* ds = app.add_subcommand("dataset", "Generate a sweep dataset with manifest");
  std::string ds_config, ds_out;
  ds->add_option("--config", ds_config, "Experiment config JSON")->required();
  ds->add_option("--out", ds_out, "Output directory")->required();

  // metrics
  auto* met = app.add_subcommand("metrics", "Reconstruction SNR of an estimate against a reference");
  std::string met_est, met_ref;
  met->add_option("--estimate", met_est, "Estimate SCTN (real)")->required();
  met->add_option("--reference", met_ref, "Reference SCTN (real)")->required();

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "Linearized (Born) least-squares reconstruction");
  std::string rec_method = "born", rec_config, rec_meas, rec_out, rec_reference;
  std::optional<double> rec_tau, rec_tau_rel;
  int rec_iters = 200;
  bool rec_pgm = false;
  rec->add_option("--method", rec_method, "Reconstruction method")->check(CLI::IsMember({"born"}));
  rec->add_option("--config", rec_config, "Scene config JSON")->required();
  rec->add_option("--measurements", rec_meas, "Measurements SCTN [K, M] complex")->required();
  rec->add_option("--out", rec_out, "Output directory")->required();
  rec->add_option("--tau", rec_tau, "Absolute Tikhonov weight");
  rec->add_option("--tau-rel", rec_tau_rel, "Tikhonov weight relative to the normal-operator norm");
  rec->add_option("--iters", rec_iters, "Conjugate-gradient iterations");
  rec->add_option("--reference", rec_reference, "Ground-truth potential SCTN; prints metrics");
  rec->add_flag("--pgm", rec_pgm, "Also write the estimate as PGM");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Baseline reconstruction SNR per sweep value, as CSV");
  std::string ev_manifest, ev_split = "test", ev_method = "backprojection", ev_csv;
  double ev_tau_rel = 1e-6;
  int ev_iters = 200;
  ev->add_option("--manifest", ev_manifest, "Dataset manifest.json")->required();
  ev->add_option("--split", ev_split, "Split to evaluate")->check(CLI::IsMember({"train", "val", "test"}));
  ev->add_option("--method", ev_method, "backprojection (best of Re w, |w|) or born")
      ->check(CLI::IsMember({"backprojection", "born"}));
  ev->add_option("--csv", ev_csv, "Output CSV path")->required();
  ev->add_option("--tau-rel", ev_tau_rel, "Born Tikhonov weight relative to the normal-operator norm");
  ev->add_option("--iters", ev_iters, "Born conjugate-gradient iterations");

  // preset
  auto* pre = app.add_subcommand("preset", "Print a built-in config as JSON");
  std::string pre_name;
  pre->add_option("--name", pre_name, "Preset name")
      ->required()
      ->check(CLI::IsMember({"scene-desk", "scene-full", "tiny", "desk-contrast", "desk-transmissions", "desk-snr",
                             "desk-extreme-noise", "full-contrast", "full-transmissions", "full-snr"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_codes::kConfig;
  }

  std::vector<fs::path> artifacts;
  try {
    if (*sim) {
      const auto cfg_json = load_json(sim_config);
      const auto scene = cfg_json.get<SceneConfig>();
      const auto settings = solver_from(cfg_json);
      const ForwardModel model(scene, threads);
      if (const auto& w = model.domain().sampling_warning()) std::cerr << "warning: " << *w << "\n";
      const Potential x = load_potential(sim_potential, scene);
      MeasurementSet ms;
      if (sim_born) {
        ms = born_measure(model, x);
      } else {
        ms = simulate_transmissions(model, x, settings, threads);
      }
      for (std::size_t k = 0; k < ms.reports.size(); ++k) {
        const auto& r = ms.reports[k];
        std::cout << "transmission " << k << ": iterations " << r.iterations << ", residual " << r.final_residual
                  << (r.converged ? "" : " (not converged)") << "\n";
      }
      if (sim_snr) ms = add_noise(ms, *sim_snr, sim_seed);
      ensure_dir(sim_out);
      const fs::path out(sim_out);
      const std::vector<std::uint64_t> dims{static_cast<std::uint64_t>(ms.k_count),
                                            static_cast<std::uint64_t>(ms.m_count)};
      write_tensor(out / "y.sctn", make_tensor(dims, std::span<const cplx>(ms.y)));
      const auto n = static_cast<std::uint64_t>(scene.grid.n());
      write_tensor(out / "x.sctn", make_tensor(std::vector<std::uint64_t>{n, n}, std::span<const double>(x.values)));
      nlohmann::json solver = nlohmann::json::array();
      for (std::size_t k = 0; k < ms.reports.size(); ++k) {
        solver.push_back({{"transmission", k},
                          {"iterations", ms.reports[k].iterations},
                          {"residual", ms.reports[k].final_residual},
                          {"converged", ms.reports[k].converged}});
      }
      nlohmann::json sidecar{
          {"k_count", ms.k_count},
          {"m_count", ms.m_count},
          {"scene_hash", hex64(ms.scene_hash)},
          {"model", sim_born ? "born" : "full"},
          {"noise",
           {{"snr_db", ms.noise.snr_db ? nlohmann::json(*ms.noise.snr_db) : nlohmann::json(nullptr)},
            {"sigma", ms.noise.sigma},
            {"sigma2", ms.noise.sigma * ms.noise.sigma},
            {"seed", ms.noise.seed},
            {"generator", std::string(kGeneratorName)}}},
          {"solver", solver},
          {"scene", scene},
      };
      write_text_atomic(out / "y.json", sidecar.dump(2) + "\n");
      artifacts = {out / "y.sctn", out / "y.json", out / "x.sctn"};
    } else if (*bp) {
      const auto scene = load_json(bp_config).get<SceneConfig>();
      const MeasurementSet ms = load_measurements(bp_meas, scene);
      const SensorOperator S(scene.grid, scene.medium, scene.receivers, threads);
      const Backprojection w = backproject(ms, incident_fields(scene), S, threads);
      ensure_dir(bp_out);
      const fs::path out(bp_out);
      const auto n = static_cast<std::uint64_t>(scene.grid.n());
      write_tensor(out / "w.sctn", make_tensor(std::vector<std::uint64_t>{n, n}, std::span<const cplx>(w.w)));
      artifacts.push_back(out / "w.sctn");
      if (bp_pgm) write_grid_pgms(w.w, scene.grid.n(), out, artifacts);
    } else if (*val) {
      if (!val_grids.empty()) cyl.grids = val_grids;
      if (cyl.eps_c == cyl.eps_b) {
        std::cout << "notice: eps_c equals eps_b; both scattered fields vanish, comparison skipped (error 0)\n";
        return exit_codes::kOk;
      }
      std::cout << "grid  rel_l2_error  iterations  residual  seconds\n";
      const auto results = validate_cylinder(cyl, threads);
      bool monotone = true;
      for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        std::printf("%4d  %12.6e  %10d  %8.2e  %7.2f\n", r.n, r.relative_error, r.report.iterations,
                    r.report.final_residual, r.seconds);
        if (r.warning) std::cout << "      warning: " << *r.warning << "\n";
        if (i > 0 && !(r.relative_error < results[i - 1].relative_error)) monotone = false;
      }
      const double final_error = results.back().relative_error;
      if (!monotone || !(final_error <= val_tol)) {
        std::cout << "FAIL: " << (monotone ? "" : "errors not strictly decreasing; ")
                  << "final error " << final_error << " vs threshold " << val_tol << "\n";
        return exit_codes::kValidation;
      }
      std::cout << "PASS: errors strictly decreasing, final " << final_error << " <= " << val_tol << "\n";
    } else if (*ds) {
      const auto cfg = load_json(ds_config).get<ExperimentConfig>();
      const auto manifest = generate_dataset(cfg, ds_out, threads);
      std::size_t excluded = 0;
      for (const auto& s : manifest.samples) {
        if (s.excluded) {
          ++excluded;
          std::cerr << "excluded sample " << s.id << " (" << s.sweep_value << "): " << s.reason << "\n";
        }
      }
      std::cout << "samples: " << manifest.samples.size() << ", excluded: " << excluded << "\n";
      artifacts.push_back(fs::path(ds_out) / "manifest.json");
    } else if (*met) {
      const auto est = load_real(met_est);
      const auto ref = load_real(met_ref);
      std::cout << "scale_optimal_snr_db " << fixed2(recon_snr(est, ref)) << "\n";
      std::cout << "plain_snr_db " << fixed2(plain_snr(est, ref)) << "\n";
    } else if (*rec) {
      const auto scene = load_json(rec_config).get<SceneConfig>();
      const MeasurementSet ms = load_measurements(rec_meas, scene);
      const SensorOperator S(scene.grid, scene.medium, scene.receivers, threads);
      const auto incident = incident_fields(scene);
      double tau = 0.0;
      if (rec_tau && rec_tau_rel) throw ConfigError("give either --tau or --tau-rel, not both");
      if (rec_tau) tau = *rec_tau;
      if (rec_tau_rel) tau = *rec_tau_rel * born_normal_norm(S, incident, 50, threads);
      const auto result = born_reconstruct(ms, incident, S, tau, rec_iters, threads);
      ensure_dir(rec_out);
      const fs::path out(rec_out);
      const auto n = static_cast<std::uint64_t>(scene.grid.n());
      write_tensor(out / "x_hat.sctn",
                   make_tensor(std::vector<std::uint64_t>{n, n}, std::span<const double>(result.estimate.values)));
      artifacts.push_back(out / "x_hat.sctn");
      if (rec_pgm) {
        render_pgm(result.estimate.values, scene.grid.n(), scene.grid.n(), out / "x_hat.pgm");
        artifacts.push_back(out / "x_hat.pgm");
      }
      std::cout << "tau " << tau << ", iterations " << result.iterations << ", objective "
                << result.objective.back() << "\n";
      if (!rec_reference.empty()) {
        const auto ref = load_real(rec_reference);
        std::cout << "scale_optimal_snr_db " << fixed2(recon_snr(result.estimate.values, ref)) << "\n";
        std::cout << "plain_snr_db " << fixed2(plain_snr(result.estimate.values, ref)) << "\n";
      }
    } else if (*ev) {
      const fs::path manifest_path(ev_manifest);
      const fs::path root = manifest_path.parent_path();
      const auto manifest = read_manifest(manifest_path);
      const auto cfg = manifest.config.get<ExperimentConfig>();
      std::map<double, std::vector<double>> scores;
      std::map<int, std::pair<SensorOperator, std::vector<ComplexField>>> ops;
      std::map<int, double> norms;
      for (const auto& s : manifest.samples) {
        if (s.excluded || s.split != ev_split) continue;
        const auto x = load_real(root / s.x_path);
        double snr = 0.0;
        if (ev_method == "backprojection") {
          const auto w = complex_values(read_tensor(root / s.w_path));
          std::vector<double> re(w.size()), ab(w.size());
          for (std::size_t i = 0; i < w.size(); ++i) {
            re[i] = w[i].real();
            ab[i] = std::abs(w[i]);
          }
          snr = std::max(recon_snr(re, x), recon_snr(ab, x));
        } else {
          const auto it = std::find(cfg.values.begin(), cfg.values.end(), s.sweep_value);
          const SceneConfig scene = cfg.scene_for(static_cast<std::size_t>(it - cfg.values.begin()));
          const int K = scene.sources.count;
          if (!ops.count(K)) {
            ops.emplace(K, std::pair{SensorOperator(scene.grid, scene.medium, scene.receivers, threads),
                                     incident_fields(scene)});
            norms[K] = born_normal_norm(ops.at(K).first, ops.at(K).second, 50, threads);
          }
          const MeasurementSet ms = load_measurements(root / s.y_path, scene);
          const auto& [S, incident] = ops.at(K);
          const auto r = born_reconstruct(ms, incident, S, ev_tau_rel * norms.at(K), ev_iters, threads);
          snr = recon_snr(r.estimate.values, x);
        }
        scores[s.sweep_value].push_back(snr);
      }
      if (scores.empty()) throw ValidationError("split \"" + ev_split + "\" has no usable samples");
      std::ostringstream csv;
      csv << "sweep_value,mean_snr_db,std_snr_db\n";
      for (const auto& [value, list] : scores) {
        double mean = 0.0;
        for (double v : list) mean += v;
        mean /= static_cast<double>(list.size());
        double var = 0.0;
        for (double v : list) var += (v - mean) * (v - mean);
        const double sd = list.size() > 1 ? std::sqrt(var / static_cast<double>(list.size() - 1)) : 0.0;
        csv << format_sweep_value(value) << "," << fixed2(mean) << "," << fixed2(sd) << "\n";
        std::cout << format_sweep_value(value) << ": " << fixed2(mean) << " +/- " << fixed2(sd) << " dB ("
                  << list.size() << " samples)\n";
      }
      write_text_atomic(ev_csv, csv.str());
      artifacts.push_back(ev_csv);
    } else if (*pre) {
      const std::map<std::string, std::function<nlohmann::json()>> builders{
          {"scene-desk", [] { return nlohmann::json(presets::desk_scene()); }},
          {"scene-full", [] { return nlohmann::json(presets::full_scene()); }},
          {"tiny", [] { return nlohmann::json(presets::tiny_experiment()); }},
          {"desk-contrast", [] { return nlohmann::json(presets::desk_experiment(SweepAxis::kContrast)); }},
          {"desk-transmissions", [] { return nlohmann::json(presets::desk_experiment(SweepAxis::kTransmissions)); }},
          {"desk-snr", [] { return nlohmann::json(presets::desk_experiment(SweepAxis::kInputSnr)); }},
          {"desk-extreme-noise",
           [] {
             auto c = presets::desk_experiment(SweepAxis::kInputSnr);
             c.values = presets::kExtremeNoise;
             return nlohmann::json(c);
           }},
          {"full-contrast", [] { return nlohmann::json(presets::full_experiment(SweepAxis::kContrast)); }},
          {"full-transmissions", [] { return nlohmann::json(presets::full_experiment(SweepAxis::kTransmissions)); }},
          {"full-snr", [] { return nlohmann::json(presets::full_experiment(SweepAxis::kInputSnr)); }},
      };
      const nlohmann::json j = builders.at(pre_name)();
      std::cout << j.dump(2) << "\n";
    }
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return exit_codes::kSolver;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return exit_codes::kIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_codes::kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_codes::kConfig;
  }
  print_artifacts(artifacts);
  return exit_codes::kOk;
}
