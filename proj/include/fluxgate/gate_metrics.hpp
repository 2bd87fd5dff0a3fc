#pragma once

#include <array>
#include <optional>

#include "fluxgate/evolution.hpp"
#include "fluxgate/types.hpp"

namespace fluxgate {

// Excitation-preserving gate family in the basis |00>, |01>, |10>, |11>:
// diag phases exp(-i zeta/2) on |00>, |11> and a rotation by theta in {|01>, |10>}.
struct IdealGateSpec {
  double theta = 0.0;
  double zeta = 0.0;
};

Matrix4c ideal_gate(const IdealGateSpec& spec);

// Local phase gate diag(1, e^{i b}, e^{i a}, e^{i (a + b)}): angle a on qubit A, b on qubit B.
Matrix4c z_rotation(double angle_a, double angle_b);

double wrap_angle(double angle);  // to [0, 2pi)

/// zeta = -beta_00 - beta_11 + beta_01 + beta_10 with beta_kl = arg <kl|U|kl>,
/// wrapped to [0, 2pi). Invariant under local Z rotations and global phase.
double extract_zeta(const Matrix4c& u);

struct CalibratedGate {
  Matrix4c u_prime = Matrix4c::Identity();
  // pre-A, pre-B, post-A, post-B, global
  std::array<double, 5> z_angles{};
  std::array<double, 4> beta{};
  double zeta = 0.0;
  // Weight of matrix elements connecting different excitation numbers, per column.
  double block_leakage = 0.0;

  Matrix4c pre() const { return z_rotation(z_angles[0], z_angles[1]); }
  Matrix4c post() const { return z_rotation(z_angles[2], z_angles[3]); }
};

/// Closed-form Z-rotation calibration: afterwards arg<01|U'|01> = arg<10|U'|10> = 0,
/// arg<00|U'|00> = arg<11|U'|11> = -zeta/2 and arg<01|U'|10> = -pi/2.
CalibratedGate calibrate_z(const Matrix4c& u_sim);

/// F = [Tr(U'^dag U') + |Tr(U_ideal(pi/2, zeta)^dag U')|^2] / 20.
double coherent_fidelity(const Matrix4c& u_prime, double zeta);

struct ProcessFidelity {
  double f_p = 0.0;
  double f_g = 0.0;
};

/// F_p = Tr(chi_ideal chi_sim), F_g = [4 F_p + Tr(chi_sim)] / 5.
ProcessFidelity gate_fidelity_from_chi(const ChiMatrix& chi_sim, const ChiMatrix& chi_ideal);

/// Mean linear entropy 1 - Tr(rho_A^2) of U|a>|b> over product inputs, computed
/// exactly from the 36 products of single-qubit Pauli eigenstates.
double entangling_power(const Matrix4c& u);

// Unitary factor of the polar decomposition.
Matrix4c nearest_unitary(const Matrix4c& m);

struct FidelityReport {
  double coherent_f = 0.0;
  std::optional<double> f_p;
  std::optional<double> f_g;
  double leakage_total = 0.0;
  double entangling_power = 0.0;
  double zeta = 0.0;

  bool operator==(const FidelityReport&) const = default;
};

}  // namespace fluxgate
