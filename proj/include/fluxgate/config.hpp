#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fluxgate/coupled_system.hpp"
#include "fluxgate/evolution.hpp"
#include "fluxgate/optimizer.hpp"
#include "fluxgate/pulse.hpp"

namespace fluxgate {

// Inclusive linear grid.
struct LinearRange {
  double start = 0.0;
  double stop = 0.0;
  int points = 0;

  std::vector<double> values() const;  // throws InvalidArgument when empty
  bool operator==(const LinearRange&) const = default;
};

struct BoundConfig {
  bool fixed = false;
  double value = 0.0;  // when fixed
  double lower = 0.0;
  double upper = 0.0;
  bool operator==(const BoundConfig&) const = default;
};

/// Run configuration in user units (key names carry the unit). Conversion to
/// module types happens in the accessors so that serialization round-trips exactly.
struct RunConfig {
  CircuitParams qubit_a = reference_qubit_a();
  CircuitParams qubit_b = reference_qubit_b();
  double j_c_ghz = kReferenceCouplingGhz;
  int osc_dim = kDefaultOscillatorDim;
  int n_levels = kDefaultQubitLevels;

  // pulse
  double t_r_ns = 7.05;
  double t_p_ns = 7.30;
  double a_env = 16.741;
  double delta_phi_over_pi = 0.0705;

  // integrator
  std::string method = "piecewise-exponential";
  double max_step_ns = 0.005;
  double rel_tol = 1e-12;
  double abs_tol = 1e-12;
  bool convergence_check = false;

  // optimizer
  std::string objective = "coherent_error";
  int restarts = 8;
  int candidates = 96;
  int max_evals = 300;
  double f_tol = 1e-10;
  double x_tol = 1e-6;
  double error_floor = 1e-7;
  double search_max_step_ns = 0.01;
  BoundConfig bound_t_r_ns{false, 0.0, 2.0, 15.0};
  BoundConfig bound_t_p_ns{false, 0.0, 0.0, 40.0};
  BoundConfig bound_a_env{false, 0.0, 4.0, 40.0};
  BoundConfig bound_delta_phi_over_pi{true, 0.0705, 0.0, 0.0};

  // spectrum sweep
  LinearRange spectrum_phi_over_pi{1.0, 1.2, 201};
  // detuning scan
  LinearRange scan_delta_phi_over_pi{0.063, 0.079, 9};
  // 2D map at the pulse block's t_r and A
  LinearRange scan2d_delta_phi_over_pi{0.064, 0.078, 40};
  LinearRange scan2d_t_p_ns{0.0, 30.0, 40};
  // noise line through the pulse block
  std::string noise_line = "vary_delta_phi";
  LinearRange noise_offsets_over_pi{-0.002, 0.002, 41};
  LinearRange noise_offsets_ns{-1.0, 1.0, 41};
  // trajectory
  std::string trajectory_initial = "01";
  double trajectory_dt_out_ns = 0.02;

  std::vector<double> t1_us;
  std::string dissipator = "standard";
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  int threads = 1;

  bool operator==(const RunConfig&) const = default;

  // Throws ConfigError when the values do not form valid module-level types.
  void validate() const;

  SystemConfig system() const;
  PulseParams pulse() const;
  IntegratorOptions integrator() const;
  OptimizationSpec optimization() const;
  DissipatorConvention convention() const;
  ProductLabel trajectory_label() const;
};

RunConfig config_from_json(const nlohmann::json& j);  // strict: unknown keys are rejected
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);

}  // namespace fluxgate
