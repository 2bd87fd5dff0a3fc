#pragma once

#include <string>
#include <vector>

namespace fluxgate {

/// Flat-top Gaussian flux pulse on qubit B: Gaussian ramps of total length
/// t_r (t_r / 2 up, t_r / 2 down) around a plateau of length t_p at pi + delta_phi.
struct PulseParams {
  double t_r = 0.0;         // ns
  double t_p = 0.0;         // ns
  double a_env = 0.0;       // dimensionless envelope A
  double delta_phi = 0.0;   // rad, may be negative

  double duration() const { return t_r + t_p; }
  // C = 1 / (exp(A/4) - 1)
  double normalization() const;
  void validate() const;
  bool operator==(const PulseParams&) const = default;
};

/// Flux at time t (ns). Outside [0, t_r + t_p] the idle value pi is
/// returned, or OutOfRangeError is thrown when strict is set.
double flux_at(const PulseParams& pulse, double t, bool strict = false);

enum class AdiabaticityVerdict { Strict, Loose, Fail };

std::string to_string(AdiabaticityVerdict v);

/// Rates compared in g/hbar << 1/t_r << min(omega_A, omega_B), all in rad/ns
/// except the ramp rate 1/t_r (1/ns). "Strict" requires a factor-3 margin on
/// both sides, "Loose" only the plain ordering.
struct AdiabaticityReport {
  AdiabaticityVerdict verdict = AdiabaticityVerdict::Fail;
  double coupling_rate = 0.0;
  double ramp_rate = 0.0;
  double min_qubit_rate = 0.0;
};

// g in GHz (E/h), omega_min in GHz (ordinary frequency).
AdiabaticityReport validate_adiabaticity(const PulseParams& pulse, double g, double omega_min);

struct PulseSamples {
  std::vector<double> times;
  std::vector<double> flux;
};

/// Uniform grid over [0, t_r + t_p] with both end points; the last step is
/// shortened to land on the end time.
PulseSamples sample(const PulseParams& pulse, double dt);

}  // namespace fluxgate
