#include "fluxgate/fluxonium.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fluxgate/diagnostics.hpp"
#include "fluxgate/errors.hpp"

namespace fluxgate {

void CircuitParams::validate() const {
  if (!(e_c > 0.0) || !(e_l > 0.0) || !(e_j >= 0.0) || !std::isfinite(e_c) ||
      !std::isfinite(e_l) || !std::isfinite(e_j) || !std::isfinite(phi_ext)) {
    std::ostringstream os;
    os << "invalid circuit parameters: e_c=" << e_c << " e_l=" << e_l << " e_j=" << e_j
       << " phi_ext=" << phi_ext;
    throw InvalidArgument(os.str());
  }
}

CircuitParams reference_qubit_a() { return {1.5, 1.0, 3.8, kPi}; }
CircuitParams reference_qubit_b() { return {0.9, 1.0, 3.0, kPi}; }

OscillatorRep build_oscillator_rep(const CircuitParams& params, int dim) {
  params.validate();
  if (dim < 10) throw InvalidArgument("oscillator basis needs at least 10 levels");

  OscillatorRep rep;
  rep.dim = dim;
  rep.e_c = params.e_c;
  rep.e_l = params.e_l;
  rep.phi_zpf = std::pow(2.0 * params.e_c / params.e_l, 0.25);
  rep.n_zpf = std::pow(params.e_l / (32.0 * params.e_c), 0.25);

  RealMatrix a = RealMatrix::Zero(dim, dim);
  for (int k = 1; k < dim; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  const RealMatrix adag = a.transpose();

  const RealMatrix phi = rep.phi_zpf * (a + adag);
  rep.phi_op = phi.cast<cplx>();
  rep.n_op = kI * rep.n_zpf * (adag - a).cast<cplx>();

  // phi is real symmetric; apply cos/sin on its spectrum.
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(phi);
  if (es.info() != Eigen::Success) throw NumericalError("flux operator diagonalization failed");
  const RealVector& x = es.eigenvalues();
  const RealMatrix& v = es.eigenvectors();
  const RealMatrix c = v * x.array().cos().matrix().asDiagonal() * v.transpose();
  const RealMatrix s = v * x.array().sin().matrix().asDiagonal() * v.transpose();
  rep.cos_op = (0.5 * (c + c.transpose())).cast<cplx>();
  rep.sin_op = (0.5 * (s + s.transpose())).cast<cplx>();
  return rep;
}

namespace {

void check_rep_matches(const OscillatorRep& rep, const CircuitParams& params) {
  if (rep.dim <= 0 || rep.phi_op.rows() != rep.dim || rep.n_op.rows() != rep.dim)
    throw InvalidArgument("oscillator representation has inconsistent dimensions");
  if (rep.e_c != params.e_c || rep.e_l != params.e_l)
    throw InvalidArgument("oscillator representation was built for different E_C/E_L");
}

}  // namespace

ComplexMatrix hamiltonian_at_flux(const OscillatorRep& rep, const CircuitParams& params,
                                  double phi) {
  params.validate();
  check_rep_matches(rep, params);
  ComplexMatrix h = 4.0 * params.e_c * rep.n_op * rep.n_op +
                    0.5 * params.e_l * rep.phi_op * rep.phi_op -
                    params.e_j * (std::cos(phi) * rep.cos_op + std::sin(phi) * rep.sin_op);
  return 0.5 * (h + h.adjoint());
}

void fix_eigenvector_phases(ComplexMatrix& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    auto col = vectors.col(j);
    const double largest = col.cwiseAbs().maxCoeff();
    Eigen::Index pick = 0;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (std::abs(col(i)) >= largest * (1.0 - 1e-10)) {
        pick = i;
        break;
      }
    }
    const cplx phase = std::conj(col(pick)) / std::abs(col(pick));
    col *= phase;
    col(pick) = std::abs(col(pick));
  }
}

namespace {

struct Eigensystem {
  RealVector values;
  ComplexMatrix vectors;
};

Eigensystem solve(const ComplexMatrix& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "eigensolver failed for " << h.rows() << "x" << h.cols()
       << " Hamiltonian, max|H|=" << h.cwiseAbs().maxCoeff()
       << ", hermiticity defect=" << (h - h.adjoint()).cwiseAbs().maxCoeff();
    throw NumericalError(os.str());
  }
  Eigensystem out{es.eigenvalues(), es.eigenvectors()};

  // Degenerate blocks: re-orthonormalize and report.
  const double scale = std::max(1.0, out.values.cwiseAbs().maxCoeff());
  Eigen::Index start = 0;
  while (start < out.values.size()) {
    Eigen::Index end = start + 1;
    while (end < out.values.size() && out.values(end) - out.values(end - 1) < 1e-10 * scale) ++end;
    if (end - start > 1) {
      Eigen::HouseholderQR<ComplexMatrix> qr(out.vectors.middleCols(start, end - start));
      out.vectors.middleCols(start, end - start) =
          qr.householderQ() * ComplexMatrix::Identity(out.vectors.rows(), end - start);
      std::ostringstream os;
      os << "degenerate eigenvalues at index " << start << " (block of " << (end - start) << ")";
      warn(os.str());
    }
    start = end;
  }
  fix_eigenvector_phases(out.vectors);
  return out;
}

}  // namespace

RealVector spectrum_at_flux(const OscillatorRep& rep, const CircuitParams& params, double phi) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hamiltonian_at_flux(rep, params, phi),
                                                  Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed");
  return es.eigenvalues();
}

TruncatedQubit diagonalize_and_truncate(const OscillatorRep& rep, const CircuitParams& params,
                                        double phi, int n_levels) {
  if (n_levels < 2) throw InvalidArgument("a qubit needs at least two levels");
  if (3 * n_levels > rep.dim) {
    std::ostringstream os;
    os << "n_levels=" << n_levels << " exceeds dim/3 for an oscillator basis of " << rep.dim;
    throw InvalidArgument(os.str());
  }
  const Eigensystem es = solve(hamiltonian_at_flux(rep, params, phi));

  TruncatedQubit q;
  q.n_levels = n_levels;
  q.energies = es.values.head(n_levels).array() - es.values(0);
  q.vectors = es.vectors.leftCols(n_levels);
  auto project = [&](const ComplexMatrix& op) {
    ComplexMatrix m = q.vectors.adjoint() * op * q.vectors;
    return ComplexMatrix(0.5 * (m + m.adjoint()));
  };
  q.n_elems = project(rep.n_op);
  q.cos_elems = project(rep.cos_op);
  q.sin_elems = project(rep.sin_op);
  q.params = params;
  q.params.phi_ext = phi;
  return q;
}

double qubit_frequency(const CircuitParams& params, double phi, int dim) {
  const OscillatorRep rep = build_oscillator_rep(params, dim);
  const RealVector e = spectrum_at_flux(rep, params, phi);
  return e(1) - e(0);
}

}  // namespace fluxgate
