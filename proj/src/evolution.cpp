#include "fluxgate/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <boost/numeric/odeint.hpp>

#include "fluxgate/diagnostics.hpp"
#include "fluxgate/errors.hpp"

namespace fluxgate {
namespace {

namespace odeint = boost::numeric::odeint;
using OdeState = std::vector<double>;

// Commutator-free fourth-order Magnus: Gauss nodes and weights.
const double kGaussOffset = std::sqrt(3.0) / 6.0;
const double kWeightHigh = 0.25 + std::sqrt(3.0) / 6.0;
const double kWeightLow = 0.25 - std::sqrt(3.0) / 6.0;

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

void pack(const ComplexMatrix& m, OdeState& x) {
  const auto n = static_cast<size_t>(m.size());
  x.resize(2 * n);
  Eigen::Map<RealMatrix>(x.data(), m.rows(), m.cols()) = m.real();
  Eigen::Map<RealMatrix>(x.data() + n, m.rows(), m.cols()) = m.imag();
}

void unpack(const OdeState& x, ComplexMatrix& m) {
  const auto n = static_cast<size_t>(m.size());
  Eigen::Map<const RealMatrix> re(x.data(), m.rows(), m.cols());
  Eigen::Map<const RealMatrix> im(x.data() + n, m.rows(), m.cols());
  m.real() = re;
  m.imag() = im;
}

template <class Rhs>
void integrate_rk(Rhs rhs, OdeState& x, double t0, double t1, const IntegratorOptions& opts) {
  auto stepper = odeint::make_controlled(opts.abs_tol, opts.rel_tol, opts.max_step,
                                         odeint::runge_kutta_dopri5<OdeState>());
  const double dt0 = std::min(opts.max_step, (t1 - t0)) * 0.1;
  odeint::integrate_adaptive(stepper, rhs, x, t0, t1, dt0);
}

}  // namespace

std::string to_string(IntegratorMethod m) {
  return m == IntegratorMethod::AdaptiveRk ? "adaptive-rk" : "piecewise-exponential";
}

IntegratorMethod integrator_method_from_string(const std::string& s) {
  if (s == "piecewise-exponential") return IntegratorMethod::PiecewiseExponential;
  if (s == "adaptive-rk") return IntegratorMethod::AdaptiveRk;
  throw InvalidArgument("unknown integrator method '" + s + "'");
}

void IntegratorOptions::validate(const PulseParams& pulse) const {
  if (!(max_step > 0.0) || !(rel_tol > 0.0) || !(abs_tol > 0.0))
    throw InvalidArgument("integrator step and tolerances must be positive");
  if (max_step > 0.01 * pulse.t_r + 1e-15) {
    std::ostringstream os;
    os << "max_step " << max_step << " ns exceeds 1% of the ramp time " << pulse.t_r << " ns";
    throw InvalidArgument(os.str());
  }
}

Propagator::Propagator(const TwoQubitSystem& sys, const PulseParams& pulse, IntegratorOptions opts)
    : sys_(&sys), pulse_(pulse), opts_(opts) {
  pulse_.validate();
  opts_.validate(pulse_);
}

ComplexMatrix Propagator::exact_step(const RealMatrix& h, double dt) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(h);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed in propagator step");
  // H is real symmetric: exp(-i w) = V cos(w) V^T - i V sin(w) V^T, all real products.
  const RealVector w = kTwoPi * dt * es.eigenvalues();
  const RealMatrix& v = es.eigenvectors();
  const RealMatrix re = v * w.array().cos().matrix().asDiagonal() * v.transpose();
  const RealMatrix im = v * (-w.array().sin()).matrix().asDiagonal() * v.transpose();
  ComplexMatrix out(h.rows(), h.cols());
  out.real() = re;
  out.imag() = im;
  return out;
}

std::vector<Propagator::Piece> Propagator::pieces(double t0, double t1) const {
  const double half = 0.5 * pulse_.t_r;
  const double end = pulse_.duration();
  const std::array<Piece, 5> all{{{-std::numeric_limits<double>::infinity(), 0.0, true},
                                  {0.0, half, false},
                                  {half, half + pulse_.t_p, true},
                                  {half + pulse_.t_p, end, false},
                                  {end, std::numeric_limits<double>::infinity(), true}}};
  std::vector<Piece> out;
  for (const auto& p : all) {
    const double b = std::max(p.begin, t0);
    const double e = std::min(p.end, t1);
    if (e > b) out.push_back({b, e, p.constant});
  }
  return out;
}

ComplexMatrix Propagator::magnus_step(double t, double h) const {
  const double phi1 = flux_at(pulse_, t + (0.5 - kGaussOffset) * h);
  const double phi2 = flux_at(pulse_, t + (0.5 + kGaussOffset) * h);
  const RealMatrix h1 = sys_->hamiltonian(phi1);
  const RealMatrix h2 = sys_->hamiltonian(phi2);
  const ComplexMatrix first = exact_step(kWeightHigh * h1 + kWeightLow * h2, h);
  const ComplexMatrix second = exact_step(kWeightLow * h1 + kWeightHigh * h2, h);
  return second * first;
}

void Propagator::apply(double t0, double t1, ComplexMatrix& state) const {
  if (t1 < t0) throw InvalidArgument("propagation interval must be forward in time");
  if (state.rows() != sys_->dim) throw InvalidArgument("state dimension mismatch");
  if (t1 == t0) return;
  if (opts_.method == IntegratorMethod::AdaptiveRk)
    apply_rk(t0, t1, state);
  else
    apply_exponential(t0, t1, state);
}

ComplexMatrix Propagator::unitary(double t0, double t1) const {
  ComplexMatrix u = ComplexMatrix::Identity(sys_->dim, sys_->dim);
  apply(t0, t1, u);
  return u;
}

void Propagator::apply_exponential(double t0, double t1, ComplexMatrix& state) const {
  const double half = 0.5 * pulse_.t_r;
  const double fall = half + pulse_.t_p;
  const double end = pulse_.duration();
  const auto ramp = [&](double begin, double stop) {
    const double len = stop - begin;
    const int n = std::max(1, static_cast<int>(std::ceil(len / opts_.max_step - 1e-9)));
    const double h = len / n;
    ComplexMatrix u = magnus_step(begin, h);
    for (int k = 1; k < n; ++k) u = magnus_step(begin + k * h, h) * u;
    return u;
  };
  // The pulse is symmetric in time and H is real, so the falling ramp is the
  // transpose of the rising one (the mirrored Magnus grid makes this exact).
  std::optional<ComplexMatrix> rise;
  for (const auto& piece : pieces(t0, t1)) {
    if (piece.constant) {
      const double phi = flux_at(pulse_, 0.5 * (piece.begin + piece.end));
      state = exact_step(sys_->hamiltonian(phi), piece.end - piece.begin) * state;
    } else if (piece.begin == 0.0 && piece.end == half) {
      rise = ramp(0.0, half);
      state = *rise * state;
    } else if (piece.begin == fall && piece.end == end) {
      if (!rise) rise = ramp(0.0, half);
      state = rise->transpose() * state;
    } else {
      state = ramp(piece.begin, piece.end) * state;
    }
  }
}

void Propagator::apply_rk(double t0, double t1, ComplexMatrix& state) const {
  const Eigen::Index rows = state.rows();
  const Eigen::Index cols = state.cols();
  const auto n = static_cast<size_t>(rows * cols);
  auto rhs = [&](const OdeState& x, OdeState& dxdt, double t) {
    dxdt.resize(x.size());
    const RealMatrix h = kTwoPi * sys_->hamiltonian(flux_at(pulse_, t));
    Eigen::Map<const RealMatrix> re(x.data(), rows, cols);
    Eigen::Map<const RealMatrix> im(x.data() + n, rows, cols);
    // d(re + i im)/dt = -i h (re + i im)
    Eigen::Map<RealMatrix>(dxdt.data(), rows, cols).noalias() = h * im;
    Eigen::Map<RealMatrix>(dxdt.data() + n, rows, cols).noalias() = -h * re;
  };
  OdeState x;
  pack(state, x);
  for (const auto& piece : pieces(t0, t1)) integrate_rk(rhs, x, piece.begin, piece.end, opts_);
  unpack(x, state);
}

RealMatrix computational_basis(const TwoQubitSystem& sys) {
  const DressedSpectrum s = dressed_spectrum(sys, kPi);
  RealMatrix p(sys.dim, 4);
  p.col(0) = s.vector(0, 0);
  p.col(1) = s.vector(0, 1);
  p.col(2) = s.vector(1, 0);
  p.col(3) = s.vector(1, 1);
  return p;
}

namespace {

Matrix4c project(const RealMatrix& basis, const ComplexMatrix& u) {
  const ComplexMatrix pc = basis.cast<cplx>();
  return pc.adjoint() * u * pc;
}

}  // namespace

PropagatorResult propagate_unitary(const TwoQubitSystem& sys, const PulseParams& pulse,
                                   const IntegratorOptions& opts) {
  const Propagator prop(sys, pulse, opts);
  PropagatorResult r;
  r.u_full = prop.unitary(0.0, pulse.duration());
  r.unitarity_defect =
      max_abs(r.u_full.adjoint() * r.u_full - ComplexMatrix::Identity(sys.dim, sys.dim));
  if (r.unitarity_defect > 1e-8) {
    std::ostringstream os;
    os << "propagator unitarity defect " << r.unitarity_defect
       << " exceeds 1e-8; reduce max_step (currently " << opts.max_step << " ns)";
    throw NumericalError(os.str());
  }
  const RealMatrix basis = computational_basis(sys);
  r.u_sim = project(basis, r.u_full);
  for (int k = 0; k < 4; ++k) r.leakage_per_state[static_cast<size_t>(k)] =
      std::max(0.0, 1.0 - r.u_sim.col(k).squaredNorm());

  if (opts.convergence_check) {
    IntegratorOptions fine = opts;
    fine.max_step *= 0.5;
    fine.rel_tol *= 0.1;
    fine.abs_tol *= 0.1;
    fine.convergence_check = false;
    const Propagator refined(sys, pulse, fine);
    r.u_sim_half_step = project(basis, refined.unitary(0.0, pulse.duration()));
    r.step_drift = (*r.u_sim_half_step - r.u_sim).cwiseAbs().maxCoeff();
  }
  return r;
}

std::string to_string(DissipatorConvention c) {
  return c == DissipatorConvention::Doubled ? "doubled" : "standard";
}

DissipatorConvention dissipator_convention_from_string(const std::string& s) {
  if (s == "standard") return DissipatorConvention::Standard;
  if (s == "doubled") return DissipatorConvention::Doubled;
  throw InvalidArgument("unknown dissipator convention '" + s + "'");
}

namespace {

double rate_from_t1(double t1_us, DissipatorConvention c) {
  if (std::isinf(t1_us)) return 0.0;
  const double rate = 1.0 / (1000.0 * t1_us);
  return c == DissipatorConvention::Doubled ? 2.0 * rate : rate;
}

}  // namespace

double Relaxation::rate_a() const { return rate_from_t1(t1_a_us, convention); }
double Relaxation::rate_b() const { return rate_from_t1(t1_b_us, convention); }

void Relaxation::validate() const {
  if (!(t1_a_us > 0.0) || !(t1_b_us > 0.0))
    throw InvalidArgument("relaxation times must be positive (use infinity to disable)");
}

namespace {

/// Exact solution of the dissipator alone over time tau: amplitude damping
/// of level 1 -> 0 of each qubit, other levels untouched.
class DampingMap {
 public:
  DampingMap(const TwoQubitSystem& sys, const Relaxation& relax, double tau)
      : n_a_(sys.n_a()), n_b_(sys.n_b()) {
    const double ga = std::exp(-relax.rate_a() * tau);
    const double gb = std::exp(-relax.rate_b() * tau);
    jump_a_ = 1.0 - ga;
    jump_b_ = 1.0 - gb;
    active_ = jump_a_ > 0.0 || jump_b_ > 0.0;
  }

  void apply(ComplexMatrix& rho) const {
    if (!active_) return;
    // Qubit A then qubit B; the two maps commute.
    if (jump_a_ > 0.0) apply_qubit_a(rho);
    if (jump_b_ > 0.0) apply_qubit_b(rho);
  }

 private:
  void apply_qubit_a(ComplexMatrix& rho) const {
    const double sa = std::sqrt(1.0 - jump_a_);
    const ComplexMatrix excited = rho.block(n_b_, n_b_, n_b_, n_b_);
    for (int i = 0; i < rho.rows(); ++i) {
      const double si = (i / n_b_ == 1) ? sa : 1.0;
      for (int j = 0; j < rho.cols(); ++j) {
        const double sj = (j / n_b_ == 1) ? sa : 1.0;
        if (si != 1.0 || sj != 1.0) rho(i, j) *= si * sj;
      }
    }
    rho.block(0, 0, n_b_, n_b_) += jump_a_ * excited;
  }

  void apply_qubit_b(ComplexMatrix& rho) const {
    const double sb = std::sqrt(1.0 - jump_b_);
    ComplexMatrix excited(n_a_, n_a_);
    for (int k = 0; k < n_a_; ++k)
      for (int kp = 0; kp < n_a_; ++kp) excited(k, kp) = rho(k * n_b_ + 1, kp * n_b_ + 1);
    for (int i = 0; i < rho.rows(); ++i) {
      const double si = (i % n_b_ == 1) ? sb : 1.0;
      for (int j = 0; j < rho.cols(); ++j) {
        const double sj = (j % n_b_ == 1) ? sb : 1.0;
        if (si != 1.0 || sj != 1.0) rho(i, j) *= si * sj;
      }
    }
    for (int k = 0; k < n_a_; ++k)
      for (int kp = 0; kp < n_a_; ++kp) rho(k * n_b_, kp * n_b_) += jump_b_ * excited(k, kp);
  }

  int n_a_;
  int n_b_;
  double jump_a_ = 0.0;
  double jump_b_ = 0.0;
  bool active_ = false;
};

// Dissipator D(rho) for the adaptive integrator.
void add_dissipator(const TwoQubitSystem& sys, double rate_a, double rate_b, const ComplexMatrix& rho,
                    ComplexMatrix& out) {
  const int nb = sys.n_b();
  const int na = sys.n_a();
  const int dim = sys.dim;
  auto excited_a = [&](int i) { return i / nb == 1 ? 1.0 : 0.0; };
  auto excited_b = [&](int i) { return i % nb == 1 ? 1.0 : 0.0; };
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      out(i, j) -= 0.5 * (rate_a * (excited_a(i) + excited_a(j)) +
                          rate_b * (excited_b(i) + excited_b(j))) * rho(i, j);
  if (rate_a > 0.0)
    for (int l = 0; l < nb; ++l)
      for (int lp = 0; lp < nb; ++lp) out(l, lp) += rate_a * rho(nb + l, nb + lp);
  if (rate_b > 0.0)
    for (int k = 0; k < na; ++k)
      for (int kp = 0; kp < na; ++kp) out(k * nb, kp * nb) += rate_b * rho(k * nb + 1, kp * nb + 1);
}

std::vector<ComplexMatrix> lindblad_rk(const Propagator& prop, const Relaxation& relax,
                                       std::vector<ComplexMatrix> ops) {
  const TwoQubitSystem& sys = prop.system();
  const PulseParams& pulse = prop.pulse();
  const int dim = sys.dim;
  const double ra = relax.rate_a();
  const double rb = relax.rate_b();
  for (auto& rho : ops) {
    auto rhs = [&](const OdeState& x, OdeState& dxdt, double t) {
      dxdt.resize(x.size());
      ComplexMatrix r(dim, dim);
      unpack(x, r);
      const RealMatrix h = kTwoPi * sys.hamiltonian(flux_at(pulse, t));
      ComplexMatrix d = -kI * (h.cast<cplx>() * r - r * h.cast<cplx>());
      add_dissipator(sys, ra, rb, r, d);
      pack(d, dxdt);
    };
    OdeState x;
    pack(rho, x);
    for (const auto& piece : prop.pieces(0.0, pulse.duration()))
      integrate_rk(rhs, x, piece.begin, piece.end, prop.options());
    unpack(x, rho);
  }
  return ops;
}

// Long constant pieces: the same split step repeats, so its superoperator is
// raised to the n-th power by squaring instead of stepping n times.
constexpr int kSuperoperatorSteps = 20000;

void apply_repeated_step(const ComplexMatrix& u, const DampingMap& half, int n,
                         std::vector<ComplexMatrix>& ops) {
  const Eigen::Index dim = u.rows();
  const Eigen::Index d2 = dim * dim;
  const ComplexMatrix u_adj = u.adjoint();
  ComplexMatrix step(d2, d2);
  for (Eigen::Index c = 0; c < d2; ++c) {
    ComplexMatrix e = ComplexMatrix::Zero(dim, dim);
    e(c % dim, c / dim) = 1.0;
    half.apply(e);
    e = u * e * u_adj;
    half.apply(e);
    step.col(c) = Eigen::Map<const ComplexVector>(e.data(), d2);
  }
  ComplexMatrix power = ComplexMatrix::Identity(d2, d2);
  for (int k = n; k > 0; k >>= 1) {
    if (k & 1) power = step * power;
    if (k > 1) step = step * step;
  }
  for (auto& rho : ops) {
    const ComplexVector v = power * Eigen::Map<const ComplexVector>(rho.data(), d2);
    rho = Eigen::Map<const ComplexMatrix>(v.data(), dim, dim);
  }
}

std::vector<ComplexMatrix> lindblad_split(const Propagator& prop, const Relaxation& relax,
                                          std::vector<ComplexMatrix> ops) {
  const TwoQubitSystem& sys = prop.system();
  const PulseParams& pulse = prop.pulse();
  const double max_step = prop.options().max_step;
  const double fall = 0.5 * pulse.t_r + pulse.t_p;
  // Rising-ramp steps, reused transposed and in reverse order on the falling ramp.
  std::vector<ComplexMatrix> rise;
  for (const auto& piece : prop.pieces(0.0, pulse.duration())) {
    const double len = piece.end - piece.begin;
    const int n = std::max(1, static_cast<int>(std::ceil(len / max_step - 1e-9)));
    const double h = len / n;
    const DampingMap half(sys, relax, 0.5 * h);
    ComplexMatrix u;
    if (piece.constant)
      u = Propagator::exact_step(sys.hamiltonian(flux_at(pulse, 0.5 * (piece.begin + piece.end))), h);
    if (piece.constant && n >= kSuperoperatorSteps) {
      apply_repeated_step(u, half, n, ops);
      continue;
    }
    for (int k = 0; k < n; ++k) {
      if (piece.begin == 0.0 && !piece.constant) {
        u = prop.magnus_step(k * h, h);
        rise.push_back(u);
      } else if (piece.begin == fall && !piece.constant && static_cast<int>(rise.size()) == n) {
        u = rise[static_cast<size_t>(n - 1 - k)].transpose();
      } else if (!piece.constant) {
        u = prop.magnus_step(piece.begin + k * h, h);
      }
      const ComplexMatrix u_adj = u.adjoint();
      for (auto& rho : ops) {
        half.apply(rho);
        rho = u * rho * u_adj;
        half.apply(rho);
      }
    }
  }
  return ops;
}

void check_density_matrix(const ComplexMatrix& rho, int dim) {
  if (rho.rows() != dim || rho.cols() != dim) throw InvalidArgument("rho0 has the wrong dimension");
  if (max_abs(rho - rho.adjoint()) > 1e-10) throw InvalidArgument("rho0 is not Hermitian");
  if (std::abs(rho.trace().real() - 1.0) > 1e-10 || std::abs(rho.trace().imag()) > 1e-10)
    throw InvalidArgument("rho0 does not have unit trace");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) throw InvalidArgument("rho0 is not positive semidefinite");
}

}  // namespace

std::vector<ComplexMatrix> propagate_lindblad_batch(const TwoQubitSystem& sys,
                                                    const PulseParams& pulse,
                                                    const Relaxation& relax,
                                                    std::vector<ComplexMatrix> operators,
                                                    const IntegratorOptions& opts) {
  relax.validate();
  for (const auto& op : operators)
    if (op.rows() != sys.dim || op.cols() != sys.dim)
      throw InvalidArgument("operator dimension does not match the system");
  const Propagator prop(sys, pulse, opts);
  if (opts.method == IntegratorMethod::AdaptiveRk) return lindblad_rk(prop, relax, std::move(operators));
  return lindblad_split(prop, relax, std::move(operators));
}

ComplexMatrix propagate_lindblad(const TwoQubitSystem& sys, const PulseParams& pulse,
                                 const Relaxation& relax, const ComplexMatrix& rho0,
                                 const IntegratorOptions& opts) {
  check_density_matrix(rho0, sys.dim);
  auto out = propagate_lindblad_batch(sys, pulse, relax, {rho0}, opts);
  ComplexMatrix rho = std::move(out.front());
  const double drift = std::abs(rho.trace() - rho0.trace());
  if (drift > 1e-8) {
    std::ostringstream os;
    os << "Lindblad trace drift " << drift << " exceeds 1e-8";
    throw NumericalError(os.str());
  }
  return rho;
}

Matrix4c pauli_product(int a, int b) {
  auto pauli = [](int k) {
    Eigen::Matrix2cd s;
    switch (k) {
      case 0: s << 1, 0, 0, 1; break;
      case 1: s << 0, 1, 1, 0; break;
      case 2: s << 0, -kI, kI, 0; break;
      default: s << 1, 0, 0, -1; break;
    }
    return s;
  };
  const Eigen::Matrix2cd sa = pauli(a);
  const Eigen::Matrix2cd sb = pauli(b);
  Matrix4c out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = sa(i, j) * sb;
  return out;
}

ChiMatrix chi_from_outputs(const BasisOutputs& outputs) {
  // Choi matrix J = sum_ij |i><j| (x) channel(|i><j|); chi_mn = <<E_m|J|E_n>> / 16.
  Matrix16c choi = Matrix16c::Zero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) choi.block<4, 4>(4 * i, 4 * j) = outputs[static_cast<size_t>(4 * i + j)];
  if ((choi - choi.adjoint()).cwiseAbs().maxCoeff() > 1e-9)
    throw NumericalError("channel is not Hermiticity preserving (Choi matrix not Hermitian)");

  Matrix16c vecs;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const Matrix4c e = pauli_product(a, b);
      Eigen::Matrix<cplx, 16, 1> v;
      for (int i = 0; i < 4; ++i) v.segment<4>(4 * i) = e.col(i);
      vecs.col(4 * a + b) = v;
    }
  ChiMatrix chi;
  chi.m = vecs.adjoint() * choi * vecs / 16.0;
  chi.m = 0.5 * (chi.m + chi.m.adjoint()).eval();
  return chi;
}

ChiMatrix process_tomography(const OperatorChannel& channel) {
  BasisOutputs outputs;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      Matrix4c e = Matrix4c::Zero();
      e(i, j) = 1.0;
      outputs[static_cast<size_t>(4 * i + j)] = channel(e);
    }
  return chi_from_outputs(outputs);
}

ChiMatrix chi_of_unitary(const Matrix4c& u) {
  Eigen::Matrix<cplx, 16, 1> coeffs;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) coeffs(4 * a + b) = (pauli_product(a, b).adjoint() * u).trace() / 4.0;
  ChiMatrix chi;
  chi.m = coeffs * coeffs.adjoint();
  return chi;
}

BasisOutputs lindblad_basis_outputs(const TwoQubitSystem& sys, const PulseParams& pulse,
                                    const Relaxation& relax, const IntegratorOptions& opts) {
  const RealMatrix basis = computational_basis(sys);
  const ComplexMatrix pc = basis.cast<cplx>();
  std::vector<ComplexMatrix> inputs;
  inputs.reserve(16);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) inputs.push_back(pc.col(i) * pc.col(j).adjoint());
  const auto outs = propagate_lindblad_batch(sys, pulse, relax, std::move(inputs), opts);
  BasisOutputs result;
  for (size_t k = 0; k < 16; ++k) result[k] = pc.adjoint() * outs[k] * pc;
  return result;
}

std::vector<TrajectoryPoint> instantaneous_trajectory(const TwoQubitSystem& sys,
                                                      const PulseParams& pulse,
                                                      ProductLabel initial, double dt_out,
                                                      const IntegratorOptions& opts) {
  if (initial.first < 0 || initial.first > 1 || initial.second < 0 || initial.second > 1)
    throw InvalidArgument("initial state must be a computational label");
  const Propagator prop(sys, pulse, opts);
  const PulseSamples grid = sample(pulse, dt_out);

  LabelTracker tracker(sys);
  ComplexMatrix psi = tracker.current().vector(initial.first, initial.second).cast<cplx>();

  std::vector<TrajectoryPoint> out;
  out.reserve(grid.times.size());
  bool warned = false;
  for (size_t k = 0; k < grid.times.size(); ++k) {
    const double t = grid.times[k];
    if (k > 0) {
      prop.apply(grid.times[k - 1], t, psi);
      tracker.advance_to(grid.flux[k]);
    }
    const auto& s = tracker.current();
    const cplx c01 = s.vector(0, 1).cast<cplx>().dot(psi.col(0));
    const cplx c10 = s.vector(1, 0).cast<cplx>().dot(psi.col(0));
    TrajectoryPoint p;
    p.t = t;
    p.pop_01 = std::norm(c01);
    p.pop_10 = std::norm(c10);
    p.bloch_z = p.pop_01 - p.pop_10;
    const cplx coh = std::conj(c01) * c10;
    p.bloch_x = 2.0 * coh.real();
    p.bloch_y = 2.0 * coh.imag();
    p.residual = std::max(0.0, psi.col(0).squaredNorm() - p.pop_01 - p.pop_10);
    if (p.residual > 0.01 && !warned) {
      std::ostringstream os;
      os << "population outside {|01>,|10>} reached " << p.residual << " at t=" << t << " ns";
      warn(os.str());
      warned = true;
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace fluxgate
