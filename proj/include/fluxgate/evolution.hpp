#pragma once

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fluxgate/coupled_system.hpp"
#include "fluxgate/pulse.hpp"
#include "fluxgate/types.hpp"

namespace fluxgate {

enum class IntegratorMethod { PiecewiseExponential, AdaptiveRk };

std::string to_string(IntegratorMethod m);
IntegratorMethod integrator_method_from_string(const std::string& s);

/// PiecewiseExponential uses a fourth-order commutator-free Magnus step on
/// the ramps (steps aligned with the pulse segments) and one exact
/// exponential across the plateau. AdaptiveRk is a Dormand-Prince 5(4)
/// integrator with the given tolerances, used as an independent cross-check.
struct IntegratorOptions {
  IntegratorMethod method = IntegratorMethod::PiecewiseExponential;
  double max_step = 0.005;  // ns
  double rel_tol = 1e-12;
  double abs_tol = 1e-12;
  bool convergence_check = false;

  void validate(const PulseParams& pulse) const;
  bool operator==(const IntegratorOptions&) const = default;
};

/// Time-ordered propagator of H(phi(t)) for one pulse.
class Propagator {
 public:
  Propagator(const TwoQubitSystem& sys, const PulseParams& pulse, IntegratorOptions opts = {});

  // state <- U(t1, t0) state, for 0 <= t0 <= t1. Columns are independent states.
  void apply(double t0, double t1, ComplexMatrix& state) const;
  ComplexMatrix unitary(double t0, double t1) const;

  const TwoQubitSystem& system() const { return *sys_; }
  const PulseParams& pulse() const { return pulse_; }
  const IntegratorOptions& options() const { return opts_; }

  // exp(-i 2pi H dt) for a time-independent Hamiltonian.
  static ComplexMatrix exact_step(const RealMatrix& h, double dt);

  // Smooth pieces of [t0, t1]; `constant` marks plateau or idle pieces.
  struct Piece {
    double begin;
    double end;
    bool constant;
  };
  std::vector<Piece> pieces(double t0, double t1) const;

  // Unitary of one fourth-order Magnus step on [t, t + h].
  ComplexMatrix magnus_step(double t, double h) const;

 private:
  void apply_exponential(double t0, double t1, ComplexMatrix& state) const;
  void apply_rk(double t0, double t1, ComplexMatrix& state) const;

  const TwoQubitSystem* sys_;
  PulseParams pulse_;
  IntegratorOptions opts_;
};

// Dressed computational states |00>, |01>, |10>, |11> at pi as columns (dim x 4).
RealMatrix computational_basis(const TwoQubitSystem& sys);

struct PropagatorResult {
  ComplexMatrix u_full;
  Matrix4c u_sim;
  std::array<double, 4> leakage_per_state{};
  double unitarity_defect = 0.0;
  // Filled when IntegratorOptions::convergence_check is set.
  std::optional<Matrix4c> u_sim_half_step;
  std::optional<double> step_drift;
};

/// Solves i dU/dt = 2pi H(t) U with U(0) = I over the whole pulse and
/// projects onto the dressed computational subspace at pi.
PropagatorResult propagate_unitary(const TwoQubitSystem& sys, const PulseParams& pulse,
                                   const IntegratorOptions& opts = {});

enum class DissipatorConvention { Standard, Doubled };

std::string to_string(DissipatorConvention c);
DissipatorConvention dissipator_convention_from_string(const std::string& s);

/// Energy relaxation of both qubits at their sweet-spot levels,
/// c = |0><1| / sqrt(T1). Standard: D[c] rho = c rho c^dag - {c^dag c, rho}/2
/// (lifetime T1). Doubled: the same dissipator with an extra factor 2.
struct Relaxation {
  double t1_a_us = std::numeric_limits<double>::infinity();
  double t1_b_us = std::numeric_limits<double>::infinity();
  DissipatorConvention convention = DissipatorConvention::Standard;

  static Relaxation both(double t1_us,
                         DissipatorConvention c = DissipatorConvention::Standard) {
    return {t1_us, t1_us, c};
  }
  // Decay rates in 1/ns.
  double rate_a() const;
  double rate_b() const;
  void validate() const;
};

/// Evolves a physical density matrix (Hermitian, unit trace, PSD) in the
/// full product space through the pulse under the Lindblad equation.
ComplexMatrix propagate_lindblad(const TwoQubitSystem& sys, const PulseParams& pulse,
                                 const Relaxation& relax, const ComplexMatrix& rho0,
                                 const IntegratorOptions& opts = {});

/// Same dynamics applied to arbitrary operators (the map is linear); no
/// physicality checks. Used for process tomography.
std::vector<ComplexMatrix> propagate_lindblad_batch(const TwoQubitSystem& sys,
                                                    const PulseParams& pulse,
                                                    const Relaxation& relax,
                                                    std::vector<ComplexMatrix> operators,
                                                    const IntegratorOptions& opts = {});

using Matrix16c = Eigen::Matrix<cplx, 16, 16>;

/// Process matrix in the two-qubit Pauli basis sigma_a (x) sigma_b,
/// index 4a + b with {I, X, Y, Z}; a unitary channel has unit trace.
struct ChiMatrix {
  Matrix16c m = Matrix16c::Zero();
  double trace() const { return m.trace().real(); }
};

using OperatorChannel = std::function<Matrix4c(const Matrix4c&)>;
using BasisOutputs = std::array<Matrix4c, 16>;  // [4 i + j] = channel(|i><j|)

ChiMatrix process_tomography(const OperatorChannel& channel);
ChiMatrix chi_from_outputs(const BasisOutputs& outputs);
ChiMatrix chi_of_unitary(const Matrix4c& u);
Matrix4c pauli_product(int a, int b);

/// Lindblad channel restricted to the computational subspace: inputs are
/// embedded with the dressed states at pi and outputs projected back.
BasisOutputs lindblad_basis_outputs(const TwoQubitSystem& sys, const PulseParams& pulse,
                                    const Relaxation& relax, const IntegratorOptions& opts = {});

struct TrajectoryPoint {
  double t = 0.0;
  double pop_01 = 0.0;
  double pop_10 = 0.0;
  double bloch_x = 0.0;
  double bloch_y = 0.0;
  double bloch_z = 0.0;
  double residual = 0.0;
};

/// Follows a dressed computational state through the pulse and records it
/// in the instantaneous {|01>_phi(t), |10>_phi(t)} basis (north pole |01>).
std::vector<TrajectoryPoint> instantaneous_trajectory(const TwoQubitSystem& sys,
                                                      const PulseParams& pulse,
                                                      ProductLabel initial, double dt_out = 0.02,
                                                      const IntegratorOptions& opts = {});

}  // namespace fluxgate
