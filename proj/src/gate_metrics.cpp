#include "fluxgate/gate_metrics.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SVD>

#include "fluxgate/diagnostics.hpp"
#include "fluxgate/errors.hpp"

namespace fluxgate {

Matrix4c ideal_gate(const IdealGateSpec& spec) {
  const cplx outer = std::exp(-kI * 0.5 * spec.zeta);
  const double c = std::cos(0.5 * spec.theta);
  const cplx s = -kI * std::sin(0.5 * spec.theta);
  Matrix4c u = Matrix4c::Zero();
  u(0, 0) = outer;
  u(1, 1) = c;
  u(1, 2) = s;
  u(2, 1) = s;
  u(2, 2) = c;
  u(3, 3) = outer;
  return u;
}

Matrix4c z_rotation(double angle_a, double angle_b) {
  Matrix4c d = Matrix4c::Zero();
  d(0, 0) = 1.0;
  d(1, 1) = std::exp(kI * angle_b);
  d(2, 2) = std::exp(kI * angle_a);
  d(3, 3) = std::exp(kI * (angle_a + angle_b));
  return d;
}

double wrap_angle(double angle) {
  double w = std::fmod(angle, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

namespace {

std::array<double, 4> diagonal_phases(const Matrix4c& u) {
  std::array<double, 4> beta{};
  for (int k = 0; k < 4; ++k) {
    if (std::abs(u(k, k)) <= 1e-6) {
      std::ostringstream os;
      os << "diagonal element " << k << " has magnitude " << std::abs(u(k, k))
         << "; its phase is undefined";
      throw UndefinedPhaseError(os.str());
    }
    beta[static_cast<size_t>(k)] = std::arg(u(k, k));
  }
  return beta;
}

}  // namespace

double extract_zeta(const Matrix4c& u) {
  const auto b = diagonal_phases(u);
  return wrap_angle(-b[0] - b[3] + b[1] + b[2]);
}

CalibratedGate calibrate_z(const Matrix4c& u_sim) {
  CalibratedGate out;
  out.beta = diagonal_phases(u_sim);
  const auto& b = out.beta;
  out.zeta = wrap_angle(-b[0] - b[3] + b[1] + b[2]);

  double off_block = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const auto excitations = [](int k) { return k == 0 ? 0 : (k == 3 ? 2 : 1); };
      if (excitations(i) != excitations(j)) off_block += std::norm(u_sim(i, j));
    }
  out.block_leakage = off_block / 4.0;
  if (out.block_leakage > 0.1) {
    std::ostringstream os;
    os << "Z calibration unreliable: excitation-changing weight " << out.block_leakage;
    warn(os.str());
  }

  const double global = -0.5 * out.zeta - b[0];
  const double sum_a = -b[2] - global;
  const double sum_b = -b[1] - global;
  // Remaining freedom: difference of pre rotations, fixed by arg<01|U'|10> = -pi/2.
  double split = 0.0;
  if (std::abs(u_sim(1, 2)) > 1e-9) split = -0.5 * kPi - std::arg(u_sim(1, 2)) - global - sum_b;

  out.z_angles = {split, 0.0, sum_a - split, sum_b, global};
  out.u_prime = std::exp(kI * global) * out.post() * u_sim * out.pre();
  return out;
}

double coherent_fidelity(const Matrix4c& u_prime, double zeta) {
  const Matrix4c target = ideal_gate({0.5 * kPi, zeta});
  return ((u_prime.adjoint() * u_prime).trace().real() +
          std::norm((target.adjoint() * u_prime).trace())) /
         20.0;
}

ProcessFidelity gate_fidelity_from_chi(const ChiMatrix& chi_sim, const ChiMatrix& chi_ideal) {
  ProcessFidelity f;
  f.f_p = (chi_ideal.m * chi_sim.m).trace().real();
  f.f_g = (4.0 * f.f_p + chi_sim.trace()) / 5.0;
  return f;
}

double entangling_power(const Matrix4c& u) {
  const double defect = (u.adjoint() * u - Matrix4c::Identity()).cwiseAbs().maxCoeff();
  if (defect > 1e-8) {
    std::ostringstream os;
    os << "entangling power needs a unitary (defect " << defect << ")";
    throw InvalidArgument(os.str());
  }
  const double r = 1.0 / std::sqrt(2.0);
  const std::array<Eigen::Vector2cd, 6> states{
      Eigen::Vector2cd(1, 0),         Eigen::Vector2cd(0, 1),
      Eigen::Vector2cd(r, r),         Eigen::Vector2cd(r, -r),
      Eigen::Vector2cd(r, kI * r),    Eigen::Vector2cd(r, -kI * r)};
  double total = 0.0;
  for (const auto& a : states)
    for (const auto& b : states) {
      Eigen::Vector4cd in;
      in << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
      const Eigen::Vector4cd out = u * in;
      Eigen::Matrix2cd m;
      m << out(0), out(1), out(2), out(3);
      const Eigen::Matrix2cd rho_a = m * m.adjoint();
      total += 1.0 - (rho_a * rho_a).trace().real();
    }
  return total / 36.0;
}

Matrix4c nearest_unitary(const Matrix4c& m) {
  Eigen::JacobiSVD<Matrix4c> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

}  // namespace fluxgate
