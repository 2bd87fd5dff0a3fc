#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "fluxgate/fluxonium.hpp"
#include "fluxgate/types.hpp"

namespace fluxgate {

enum class FluxTarget { QubitA, QubitB };

/// Two capacitively coupled fluxoniums in the sweet-spot product basis
/// |k>_A |l>_B (index k * n_b + l). Qubit A is parked at pi; the flux of
/// qubit B enters through
///   H(phi) = h_pi - E_J,B (1 + cos phi) c_ctrl - E_J,B sin(phi) s_ctrl.
/// The model has no charge offsets, so all blocks are real symmetric.
struct TwoQubitSystem {
  TruncatedQubit qubit_a;
  TruncatedQubit qubit_b;
  double j_c = 0.0;
  int dim = 0;
  RealMatrix h_pi;
  RealMatrix c_ctrl;
  RealMatrix s_ctrl;

  int n_a() const { return qubit_a.n_levels; }
  int n_b() const { return qubit_b.n_levels; }
  int index(int k, int l) const { return k * n_b() + l; }
  double e_j_b() const { return qubit_b.params.e_j; }

  RealMatrix hamiltonian(double phi) const;
};

TwoQubitSystem assemble(const TruncatedQubit& qubit_a, const TruncatedQubit& qubit_b, double j_c,
                        FluxTarget target = FluxTarget::QubitB);

struct SystemConfig {
  CircuitParams qubit_a = reference_qubit_a();
  CircuitParams qubit_b = reference_qubit_b();
  double j_c = kReferenceCouplingGhz;
  int osc_dim = kDefaultOscillatorDim;
  int n_levels = kDefaultQubitLevels;
};

// Builds both truncated qubits at the sweet spot and assembles the system.
TwoQubitSystem build_system(const SystemConfig& config = {});

using ProductLabel = std::pair<int, int>;

/// Assignment of product labels (k, l) to eigenstate indices.
struct DressedLabels {
  std::map<ProductLabel, int> index;
  std::map<ProductLabel, double> overlap;
  bool ambiguous = false;

  int state(int k, int l) const { return index.at({k, l}); }
};

struct DressedSpectrum {
  double phi = kPi;
  RealVector energies;   // ascending, GHz
  RealMatrix states;     // columns are eigenvectors in the product basis
  DressedLabels labels;

  double energy(int k, int l) const { return energies(labels.state(k, l)); }
  Eigen::VectorXd vector(int k, int l) const { return states.col(labels.state(k, l)); }
};

/// Eigensystem of H(phi) labelled by maximum overlap with the bare product states.
DressedSpectrum dressed_spectrum(const TwoQubitSystem& sys, double phi);

/// Carries dressed labels along a flux path by continuity of eigenvectors.
/// Eigenvector signs are also carried so that tracked states vary smoothly.
class LabelTracker {
 public:
  explicit LabelTracker(const TwoQubitSystem& sys, double phi_start = kPi);

  const DressedSpectrum& current() const { return current_; }
  // Diagonalizes at phi and re-labels against the previous point.
  const DressedSpectrum& advance(double phi);
  // Advances in steps no larger than max_step until phi is reached.
  const DressedSpectrum& advance_to(double phi, double max_step = 1e-3 * kPi);
  // Smallest overlap between a tracked eigenvector and its predecessor in the last step.
  double last_min_overlap() const { return last_min_overlap_; }

 private:
  const TwoQubitSystem* sys_;
  DressedSpectrum current_;
  double last_min_overlap_ = 1.0;
};

// Spectrum at phi with labels carried adiabatically from the sweet spot.
DressedSpectrum tracked_spectrum(const TwoQubitSystem& sys, double phi,
                                 double max_step = 1e-3 * kPi);

struct LevelCrossing {
  double delta_phi_star = 0.0;  // radians, signed detuning from pi
  double splitting = 0.0;       // GHz
};

enum class CrossingSide { Above, Below };

/// Locates the minimum of |E10 - E01| with adiabatic labels on
/// (pi, 3pi/2) (or its mirror below pi) by a tracked scan followed by
/// golden-section refinement to `tolerance` radians.
LevelCrossing find_level_crossing(const TwoQubitSystem& sys,
                                  CrossingSide side = CrossingSide::Above,
                                  double tolerance = 1e-6);

/// Analytic projection onto the sweet-spot computational subspace.
struct TwoLevelModel {
  double omega_phi = 0.0;   // GHz
  double a_phi = 0.0;       // GHz
  double g = 0.0;           // GHz
  double delta_phi = 0.0;   // GHz
  double theta_mix = 0.0;   // rad
  cplx lambda_amp{0.0, 0.0};
};

// g = J_C <0|n_A|1> <0|n_B|1>.
double effective_coupling(const TwoQubitSystem& sys);

TwoLevelModel two_level_model(const TruncatedQubit& qubit_b, double omega_a, double g, double phi);
TwoLevelModel two_level_model(const TwoQubitSystem& sys, double phi);

/// E11 - E10 - E01 + E00 at phi, with labels tracked from the sweet spot.
double static_zz(const TwoQubitSystem& sys, double phi);

/// Flux sweep of single-qubit frequencies and labelled two-qubit levels.
struct SpectrumSweep {
  std::vector<double> phi_over_pi;
  std::vector<double> omega_a;
  std::vector<double> omega_b;
  std::vector<ProductLabel> labels;
  std::vector<std::vector<double>> levels;  // [point][label]
};

SpectrumSweep sweep_spectrum(const TwoQubitSystem& sys, const CircuitParams& qubit_b_params,
                             int osc_dim, const std::vector<double>& phi_over_pi);

void write_spectrum_csv(std::ostream& os, const SpectrumSweep& sweep);

}  // namespace fluxgate
