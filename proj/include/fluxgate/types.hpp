#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace fluxgate {

using cplx = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Matrix4c = Eigen::Matrix4cd;

inline constexpr double kPi = std::numbers::pi;

// Energies are carried as E/h in GHz and times in ns, so a phase is
// 2*pi * E * t and the propagator is exp(-i * kTwoPi * H * t).
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr cplx kI{0.0, 1.0};

}  // namespace fluxgate
