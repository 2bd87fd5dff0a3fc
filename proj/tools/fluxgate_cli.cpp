// fluxgate: command-line driver for spectra, single gates, optimizations and scans.
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fluxgate/config.hpp"
#include "fluxgate/diagnostics.hpp"
#include "fluxgate/errors.hpp"
#include "fluxgate/gate.hpp"
#include "fluxgate/io.hpp"
#include "fluxgate/optimizer.hpp"
#include "fluxgate/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fluxgate;

namespace {

constexpr int kExitUnconverged = 2;
constexpr int kExitUsage = 64;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::string out_dir;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  bool strict = false;
};

struct Run {
  RunConfig config;
  fs::path out;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
};

int resolve_threads(const Common& c, int fallback) {
  if (c.threads > 0) return c.threads;
  if (const char* env = std::getenv("FLUXGATE_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1) throw UsageError("FLUXGATE_THREADS must be a positive integer");
    return static_cast<int>(n);
  }
  return fallback;
}

Run prepare(const Common& c) {
  Run run;
  run.config = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  if (c.seed) run.config.seed = *c.seed;
  run.config.threads = resolve_threads(c, run.config.threads);
  if (!c.out_dir.empty()) run.config.output_dir = c.out_dir;
  run.config.validate();
  run.out = run.config.output_dir;
  std::error_code ec;
  fs::create_directories(run.out, ec);
  if (ec) throw IoError("cannot create output directory " + run.out.string() + ": " + ec.message());
  set_warnings_fatal(c.strict);
  return run;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string csv(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

json manifest(const std::string& command, const Run& run, size_t points, const json& failures) {
  return {{"command", command},
          {"config", config_to_json(run.config)},
          {"seed", run.config.seed},
          {"version", kVersion},
          {"wall_time_s", seconds_since(run.started)},
          {"points", points},
          {"failures", failures}};
}

// Writes the manifest and, when points failed, a machine-readable summary.
int finish(const std::string& command, const Run& run, size_t points, const json& failures) {
  write_text_file(run.out / "manifest.json", dump(manifest(command, run, points, failures)));
  if (failures.empty()) return 0;
  const json summary = {{"command", command}, {"points", points}, {"failed", failures.size()},
                        {"failures", failures}};
  write_text_file(run.out / "failures.json", dump(summary));
  std::cout << summary.dump() << '\n';
  return kExitUnconverged;
}

// Point files make long runs resumable: finished points are loaded, not recomputed.
fs::path point_file(const Run& run, const std::string& prefix, size_t i) {
  std::ostringstream name;
  name << prefix << '_' << std::setw(4) << std::setfill('0') << i << ".json";
  return run.out / "points" / name.str();
}

std::optional<json> load_point(const fs::path& path, const json& key) {
  if (!fs::exists(path)) return std::nullopt;
  json j = json::parse(read_text_file(path));
  if (j.at("key") != key) return std::nullopt;  // computed for different inputs
  return j;
}

void store_point(const fs::path& path, const json& key, json payload) {
  fs::create_directories(path.parent_path());
  payload["key"] = key;
  write_text_file(path, dump(payload));
}

json point_key(const Run& run, const json& extra) {
  json k = config_to_json(run.config);
  k.erase("output_dir");
  k.erase("threads");
  k["point"] = extra;
  return k;
}

void progress(size_t i, size_t n, const std::string& what) {
  std::cerr << '[' << (i + 1) << '/' << n << "] " << what << '\n';
}

int cmd_spectrum(const Common& c, std::optional<LinearRange> phi) {
  Run run = prepare(c);
  const DirectoryLock lock(run.out);
  const LinearRange range = phi ? *phi : run.config.spectrum_phi_over_pi;
  std::vector<double> grid;
  try {
    grid = range.values();
  } catch (const InvalidArgument&) {
    throw UsageError("empty flux range");
  }
  const TwoQubitSystem sys = build_system(run.config.system());
  const SpectrumSweep sweep = sweep_spectrum(sys, run.config.qubit_b, run.config.osc_dim, grid);
  write_text_file(run.out / "spectrum.csv", csv([&](std::ostream& os) { write_spectrum_csv(os, sweep); }));
  try {
    const LevelCrossing cross = find_level_crossing(sys);
    std::cerr << "crossing at delta_phi = " << cross.delta_phi_star / kPi
              << " pi, splitting = " << cross.splitting * 1e3 << " MHz\n";
  } catch (const std::exception& e) {
    std::cerr << "no |01>-|10> crossing: " << e.what() << '\n';
  }
  return finish("spectrum", run, grid.size(), json::array());
}

json gate_json(const TwoQubitSystem& sys, const GateEvaluation& ev) {
  const double g = effective_coupling(sys);
  const double omega_min = std::min(sys.qubit_a.frequency(), sys.qubit_b.frequency());
  const AdiabaticityReport adiabatic = validate_adiabaticity(ev.pulse, g, omega_min);
  json j = to_json(ev.report);
  j["pulse"] = to_json(ev.pulse);
  j["duration_ns"] = ev.pulse.duration();
  j["coherent_error"] = ev.coherent_error();
  j["non_entangling"] = ev.report.entangling_power < 1e-3;
  j["leakage_per_state"] = ev.propagation.leakage_per_state;
  j["unitarity_defect"] = ev.propagation.unitarity_defect;
  j["z_angles_rad"] = ev.calibrated.z_angles;
  j["block_leakage"] = ev.calibrated.block_leakage;
  j["adiabaticity"] = to_string(adiabatic.verdict);
  if (ev.fidelity_drift) j["fidelity_drift"] = *ev.fidelity_drift;
  j["u_sim"] = to_json(ComplexMatrix(ev.propagation.u_sim));
  return j;
}

int cmd_gate(const Common& c, bool trajectories) {
  Run run = prepare(c);
  const DirectoryLock lock(run.out);
  const TwoQubitSystem sys = build_system(run.config.system());
  const PulseParams pulse = run.config.pulse();
  const IntegratorOptions opts = run.config.integrator();
  const GateEvaluation ev = evaluate_gate(sys, pulse, opts);
  json report = gate_json(sys, ev);
  json relaxed = json::array();
  for (double t1 : run.config.t1_us) {
    const GateEvaluation r = evaluate_gate(sys, pulse, opts, Relaxation::both(t1, run.config.convention()));
    relaxed.push_back({{"t1_us", t1}, {"f_p", *r.report.f_p}, {"f_g", *r.report.f_g},
                       {"chi_trace", r.chi_sim->trace()}});
    std::ostringstream name;
    name << "chi_t1_" << t1 << "us.json";
    write_text_file(run.out / name.str(),
                    dump({{"t1_us", t1}, {"chi_sim", to_json(ComplexMatrix(r.chi_sim->m))},
                          {"chi_ideal", to_json(ComplexMatrix(r.chi_ideal->m))}}));
    if (relaxed.size() == 1) {
      report["f_p"] = *r.report.f_p;
      report["f_g"] = *r.report.f_g;
    }
  }
  report["relaxation"] = relaxed;
  write_text_file(run.out / "report.json", dump(report));
  if (trajectories)
    for (const ProductLabel label : {ProductLabel{0, 1}, ProductLabel{1, 0}}) {
      const auto points =
          instantaneous_trajectory(sys, pulse, label, run.config.trajectory_dt_out_ns, opts);
      std::ostringstream name;
      name << "trajectory_" << label.first << label.second << ".csv";
      write_text_file(run.out / name.str(), csv([&](std::ostream& os) { write_trajectory_csv(os, points); }));
    }
  std::cout << to_json(ev.report).dump() << '\n';
  return finish("gate", run, 1, json::array());
}

int cmd_trajectory(const Common& c) {
  Run run = prepare(c);
  const DirectoryLock lock(run.out);
  const TwoQubitSystem sys = build_system(run.config.system());
  const ProductLabel label = run.config.trajectory_label();
  const auto points = instantaneous_trajectory(sys, run.config.pulse(), label,
                                               run.config.trajectory_dt_out_ns, run.config.integrator());
  write_text_file(run.out / ("trajectory_" + run.config.trajectory_initial + ".csv"),
                  csv([&](std::ostream& os) { write_trajectory_csv(os, points); }));
  return finish("trajectory", run, points.size(), json::array());
}

int cmd_optimize(const Common& c) {
  Run run = prepare(c);
  const DirectoryLock lock(run.out);
  const TwoQubitSystem sys = build_system(run.config.system());
  OptimizationSpec spec = run.config.optimization();
  spec.warm_starts.push_back(run.config.pulse());
  const OptimizationResult r = optimize_pulse(sys, spec);
  json out = to_json(r.report);
  out["pulse"] = to_json(r.pulse);
  out["duration_ns"] = r.pulse.duration();
  out["error"] = r.error;
  out["objective"] = to_string(spec.objective);
  out["converged"] = r.converged;
  out["evaluations"] = r.evaluations;
  write_text_file(run.out / "optimize.json", dump(out));
  std::cout << out.dump() << '\n';
  json failures = json::array();
  if (!r.converged) failures.push_back({{"index", 0}, {"pulse", to_json(r.pulse)}, {"error", r.error}});
  return finish("optimize", run, 1, failures);
}

int cmd_scan(const Common& c) {
  Run run = prepare(c);
  const DirectoryLock lock(run.out);
  const TwoQubitSystem sys = build_system(run.config.system());
  const std::vector<double> values = run.config.scan_delta_phi_over_pi.values();
  const OptimizationSpec base = run.config.optimization();
  ScanResult result;
  result.axes.push_back({"delta_phi", {}});
  std::optional<PulseParams> previous = run.config.pulse();
  json failures = json::array();
  for (size_t i = 0; i < values.size(); ++i) {
    const double dphi = values[i] * kPi;
    result.axes[0].values.push_back(dphi);
    const fs::path file = point_file(run, "scan", i);
    const json key = point_key(run, {{"index", i}, {"delta_phi_over_pi", values[i]}});
    ScanPoint point;
    if (const auto stored = load_point(file, key)) {
      point = scan_point_from_json(stored->at("point"));
    } else {
      OptimizationSpec spec = base;
      spec.delta_phi = ParameterRange::pinned(dphi);
      spec.seed = base.seed + i;
      if (previous) spec.warm_starts.push_back(*previous);
      point = to_scan_point(optimize_pulse(sys, spec));
      store_point(file, key, {{"point", to_json(point)}});
    }
    previous = point.pulse;
    result.points.push_back(point);
    std::ostringstream what;
    what << "delta_phi = " << values[i] << " pi: error " << point.error << ", duration "
         << point.duration << " ns" << (point.converged ? "" : " (not converged)");
    progress(i, values.size(), what.str());
    if (!point.converged) failures.push_back({{"index", i}, {"delta_phi_over_pi", values[i]}});
  }
  write_text_file(run.out / "scan.csv", csv([&](std::ostream& os) { write_scan_csv(os, result); }));
  return finish("scan", run, values.size(), failures);
}

int cmd_scan2d(const Common& c) {
  Run run = prepare(c);
  const DirectoryLock lock(run.out);
  const TwoQubitSystem sys = build_system(run.config.system());
  const std::vector<double> rows = run.config.scan2d_delta_phi_over_pi.values();
  const std::vector<double> t_p = run.config.scan2d_t_p_ns.values();
  ScanResult result;
  result.axes = {{"delta_phi", {}}, {"t_p", t_p}};
  for (size_t i = 0; i < rows.size(); ++i) {
    const double dphi = rows[i] * kPi;
    result.axes[0].values.push_back(dphi);
    const fs::path file = point_file(run, "scan2d_row", i);
    const json key = point_key(run, {{"row", i}, {"delta_phi_over_pi", rows[i]}});
    std::vector<ScanPoint> row;
    if (const auto stored = load_point(file, key)) {
      for (const auto& p : stored->at("points")) row.push_back(scan_point_from_json(p));
    } else {
      row = scan_2d(sys, {dphi}, t_p, run.config.t_r_ns, run.config.a_env, run.config.integrator(),
                    run.config.threads)
                .points;
      json stored_points = json::array();
      for (const auto& p : row) stored_points.push_back(to_json(p));
      store_point(file, key, {{"points", stored_points}});
    }
    double best = 1.0;
    for (const auto& p : row) best = std::min(best, p.error);
    std::ostringstream what;
    what << "delta_phi = " << rows[i] << " pi: best error " << best;
    progress(i, rows.size(), what.str());
    result.points.insert(result.points.end(), row.begin(), row.end());
  }
  write_text_file(run.out / "scan2d.csv", csv([&](std::ostream& os) { write_scan_csv(os, result); }));
  return finish("scan2d", run, result.points.size(), json::array());
}

int cmd_noise(const Common& c) {
  Run run = prepare(c);
  const DirectoryLock lock(run.out);
  const TwoQubitSystem sys = build_system(run.config.system());
  const NoiseLineKind kind = noise_line_kind_from_string(run.config.noise_line);
  std::vector<double> offsets = kind == NoiseLineKind::VaryDeltaPhi
                                    ? run.config.noise_offsets_over_pi.values()
                                    : run.config.noise_offsets_ns.values();
  if (kind == NoiseLineKind::VaryDeltaPhi)
    for (double& o : offsets) o *= kPi;
  NoiseCurves curves;
  curves.kind = kind;
  curves.anchor = run.config.pulse();
  curves.offsets = offsets;
  curves.t1_us = run.config.t1_us;
  curves.relaxed_error.assign(curves.t1_us.size(), {});
  for (size_t i = 0; i < offsets.size(); ++i) {
    const fs::path file = point_file(run, "noise", i);
    const json key = point_key(run, {{"index", i}, {"offset", offsets[i]}});
    json stored;
    if (const auto s = load_point(file, key)) {
      stored = *s;
    } else {
      const NoiseCurves one = noise_sensitivity(sys, kind, curves.anchor, {offsets[i]}, curves.t1_us,
                                                run.config.convention(), run.config.integrator(),
                                                run.config.threads);
      json relaxed = json::array();
      for (const auto& r : one.relaxed_error) relaxed.push_back(r.front());
      stored = {{"unitary_error", one.unitary_error.front()}, {"relaxed_error", relaxed}};
      store_point(file, key, stored);
    }
    curves.unitary_error.push_back(stored.at("unitary_error").get<double>());
    for (size_t k = 0; k < curves.t1_us.size(); ++k)
      curves.relaxed_error[k].push_back(stored.at("relaxed_error").at(k).get<double>());
    std::ostringstream what;
    what << "offset " << offsets[i] << ": unitary error " << curves.unitary_error.back();
    progress(i, offsets.size(), what.str());
  }
  write_text_file(run.out / "noise.csv", csv([&](std::ostream& os) { write_noise_csv(os, curves); }));
  return finish("noise", run, offsets.size(), json::array());
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  sub->add_option("--out", c.out_dir, "output directory (overrides output_dir)");
  sub->add_option("--threads", c.threads, "worker threads (fallback: FLUXGATE_THREADS)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", c.seed, "random seed (overrides seed)");
  sub->add_flag("--strict", c.strict, "treat numerical warnings as errors");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fast flux gate on two coupled fluxoniums"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Common common;

  auto* spectrum = app.add_subcommand("spectrum", "single- and two-qubit levels versus flux");
  std::vector<double> phi_range;
  spectrum->add_option("--phi", phi_range, "START STOP POINTS, flux in units of pi")->expected(3);
  auto* gate = app.add_subcommand("gate", "simulate and score the configured pulse");
  bool trajectories = false;
  gate->add_flag("--trajectories", trajectories, "also export Bloch trajectories of |01> and |10>");
  auto* optimize = app.add_subcommand("optimize", "optimize the pulse at the configured detuning");
  auto* scan = app.add_subcommand("scan", "optimized error and duration versus detuning");
  auto* scan2d = app.add_subcommand("scan2d", "error map over detuning and plateau time");
  auto* noise = app.add_subcommand("noise", "error along a miscalibration line, with relaxation");
  auto* trajectory = app.add_subcommand("trajectory", "Bloch trajectory in the instantaneous basis");
  for (auto* sub : {spectrum, gate, optimize, scan, scan2d, noise, trajectory}) add_common(sub, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*spectrum) {
      std::optional<LinearRange> range;
      if (!phi_range.empty()) range = LinearRange{phi_range[0], phi_range[1], static_cast<int>(phi_range[2])};
      return cmd_spectrum(common, range);
    }
    if (*gate) return cmd_gate(common, trajectories);
    if (*optimize) return cmd_optimize(common);
    if (*scan) return cmd_scan(common);
    if (*scan2d) return cmd_scan2d(common);
    if (*noise) return cmd_noise(common);
    if (*trajectory) return cmd_trajectory(common);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}
