#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fluxgate/coupled_system.hpp"
#include "fluxgate/evolution.hpp"
#include "fluxgate/gate.hpp"
#include "fluxgate/nelder_mead.hpp"
#include "fluxgate/pulse.hpp"

namespace fluxgate {

enum class Objective { CoherentError, GateErrorLindblad };
std::string to_string(Objective o);
Objective objective_from_string(const std::string& s);

// A pulse parameter is either pinned at `value` or free within [lower, upper].
struct ParameterRange {
  bool fixed = false;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;

  static ParameterRange pinned(double v) { return {true, v, v, v}; }
  static ParameterRange free(double lo, double hi) { return {false, 0.5 * (lo + hi), lo, hi}; }
  bool operator==(const ParameterRange&) const = default;
};

struct OptimizationSpec {
  ParameterRange t_r = ParameterRange::free(2.0, 15.0);
  ParameterRange t_p = ParameterRange::free(0.0, 40.0);
  ParameterRange a_env = ParameterRange::free(4.0, 40.0);
  ParameterRange delta_phi = ParameterRange::pinned(0.0705 * kPi);
  Objective objective = Objective::CoherentError;
  std::optional<Relaxation> relaxation;  // required by GateErrorLindblad
  int restarts = 8;
  int candidates = 96;  // random points sampled to seed the restarts
  std::uint64_t seed = 1;
  // Errors below the floor count as equal; among them shorter pulses win.
  double error_floor = 1e-7;
  NelderMeadOptions simplex{300, 1e-10, 1e-6, 0.1};
  IntegratorOptions search_integrator{IntegratorMethod::PiecewiseExponential, 0.01, 1e-12, 1e-12, false};
  IntegratorOptions final_integrator{};
  std::vector<PulseParams> warm_starts;
  int threads = 1;

  void validate() const;
};

struct OptimizationResult {
  PulseParams pulse;
  FidelityReport report;
  double error = 0.0;      // objective error of `pulse` under the final integrator
  double objective = 0.0;  // floored, duration-penalized search value of `pulse`
  bool converged = false;
  int evaluations = 0;
  std::vector<double> evaluated_objectives;  // every search evaluation, in order
};

/// Search value: max(error, floor) plus a duration term smaller than the floor.
double search_objective(double error, double duration, double floor);

// Error of one pulse under the given objective (1 when the gate phases are undefined).
double pulse_error(const TwoQubitSystem& sys, const PulseParams& pulse, Objective objective,
                   const std::optional<Relaxation>& relaxation, const IntegratorOptions& opts);

/// Multi-start bounded Nelder-Mead over the free pulse parameters.
OptimizationResult optimize_pulse(const TwoQubitSystem& sys, const OptimizationSpec& spec);

struct ScanPoint {
  PulseParams pulse;
  double error = 0.0;
  double duration = 0.0;
  double zeta = 0.0;
  double leakage = 0.0;
  bool converged = true;
};

struct ScanAxis {
  std::string name;
  std::vector<double> values;
};

/// Points are stored row-major over the axes (last axis fastest).
struct ScanResult {
  std::vector<ScanAxis> axes;
  std::vector<ScanPoint> points;

  bool all_converged() const;
};

ScanPoint to_scan_point(const OptimizationResult& r);

using ScanProgress = std::function<void(std::size_t index, const ScanPoint& point)>;

/// One optimization per detuning; each point is warm-started from its predecessor.
ScanResult scan_detuning(const TwoQubitSystem& sys, const std::vector<double>& delta_phi_values,
                         const OptimizationSpec& spec, const ScanProgress& progress = {});

/// Single propagations on a (delta_phi, t_p) grid at fixed t_r and A.
ScanResult scan_2d(const TwoQubitSystem& sys, const std::vector<double>& delta_phi_values,
                   const std::vector<double>& t_p_values, double t_r, double a_env,
                   const IntegratorOptions& opts = {}, int threads = 1);

enum class NoiseLineKind { VaryDeltaPhi, VaryPlateau };
std::string to_string(NoiseLineKind k);
NoiseLineKind noise_line_kind_from_string(const std::string& s);

struct NoiseCurves {
  NoiseLineKind kind = NoiseLineKind::VaryDeltaPhi;
  PulseParams anchor;
  std::vector<double> offsets;          // rad or ns, added to the varied parameter
  std::vector<double> unitary_error;    // coherent error
  std::vector<double> t1_us;
  std::vector<std::vector<double>> relaxed_error;  // [t1 index][offset index], 1 - F_g
};

/// Quasi-static miscalibration: error along a line through an anchor pulse,
/// without and with relaxation for each T1 in t1_us.
NoiseCurves noise_sensitivity(const TwoQubitSystem& sys, NoiseLineKind kind, const PulseParams& anchor,
                              const std::vector<double>& offsets, const std::vector<double>& t1_us,
                              DissipatorConvention convention = DissipatorConvention::Standard,
                              const IntegratorOptions& opts = {}, int threads = 1);

/// Width on the offset axis of the contiguous region around the minimum where
/// error <= threshold (edges linearly interpolated); 0 if the minimum is above it.
double valley_width(const std::vector<double>& offsets, const std::vector<double>& error,
                    double threshold);

}  // namespace fluxgate
