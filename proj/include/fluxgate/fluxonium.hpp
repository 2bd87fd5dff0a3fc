#pragma once

#include "fluxgate/types.hpp"

namespace fluxgate {

inline constexpr int kDefaultOscillatorDim = 40;
inline constexpr int kDefaultQubitLevels = 5;

/// Circuit energies of one fluxonium (all E/h in GHz) and the reduced
/// external flux in radians. The sweet spot is phi_ext = pi.
struct CircuitParams {
  double e_c = 0.0;
  double e_l = 0.0;
  double e_j = 0.0;
  double phi_ext = kPi;

  void validate() const;
  bool operator==(const CircuitParams&) const = default;
};

// Reference hardware parameters of the two-qubit device.
CircuitParams reference_qubit_a();
CircuitParams reference_qubit_b();
inline constexpr double kReferenceCouplingGhz = 0.3;

/// Harmonic-oscillator representation of the flux and charge operators,
/// built from the E_J = 0 part of the fluxonium Hamiltonian.
struct OscillatorRep {
  int dim = 0;
  double e_c = 0.0;
  double e_l = 0.0;
  double phi_zpf = 0.0;
  double n_zpf = 0.0;
  ComplexMatrix phi_op;
  ComplexMatrix n_op;
  ComplexMatrix cos_op;
  ComplexMatrix sin_op;
};

/// phi = phi_zpf (a + a^dag), n = i n_zpf (a^dag - a), with
/// phi_zpf = (2 E_C / E_L)^(1/4) and n_zpf = (E_L / 32 E_C)^(1/4).
/// cos(phi) and sin(phi) are exact matrix functions of the truncated phi.
OscillatorRep build_oscillator_rep(const CircuitParams& params, int dim = kDefaultOscillatorDim);

/// H = 4 E_C n^2 + E_L phi^2 / 2 - E_J [cos(phi) cos(flux) + sin(phi) sin(flux)].
ComplexMatrix hamiltonian_at_flux(const OscillatorRep& rep, const CircuitParams& params, double phi);

/// Lowest levels of a fluxonium at a fixed flux, with operator matrix
/// elements in that eigenbasis. Energies are referenced to the ground state.
struct TruncatedQubit {
  int n_levels = 0;
  RealVector energies;
  ComplexMatrix n_elems;
  ComplexMatrix cos_elems;
  ComplexMatrix sin_elems;
  // Eigenvectors in the oscillator basis (dim x n_levels).
  ComplexMatrix vectors;
  CircuitParams params;

  double frequency() const { return energies(1) - energies(0); }
};

TruncatedQubit diagonalize_and_truncate(const OscillatorRep& rep, const CircuitParams& params,
                                        double phi, int n_levels = kDefaultQubitLevels);

// Full ascending spectrum of the oscillator-basis Hamiltonian, not shifted.
RealVector spectrum_at_flux(const OscillatorRep& rep, const CircuitParams& params, double phi);

double qubit_frequency(const CircuitParams& params, double phi,
                       int dim = kDefaultOscillatorDim);

// Applies the phase convention used throughout: in each column the
// largest-magnitude component is made real and positive (lowest index wins ties).
void fix_eigenvector_phases(ComplexMatrix& vectors);

}  // namespace fluxgate
