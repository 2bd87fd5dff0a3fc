#include <cmath>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "fluxgate/diagnostics.hpp"
#include "fluxgate/errors.hpp"
#include "fluxgate/evolution.hpp"
#include "fluxgate/gate_metrics.hpp"

using namespace fluxgate;

namespace {

const TwoQubitSystem& sys() {
  static const TwoQubitSystem s = build_system();
  return s;
}

const PulseParams kPointA{7.05, 25.85, 16.741, 0.0705 * kPi};
const PulseParams kPointB{7.05, 7.30, 16.741, 0.0705 * kPi};
const PulseParams kPointC{7.05, 12.05, 16.741, 0.0674 * kPi};

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a - b, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

ComplexMatrix pure(const RealVector& v) {
  const ComplexVector c = v.cast<cplx>();
  return c * c.adjoint();
}

Matrix4c cz() {
  Matrix4c m = Matrix4c::Identity();
  m(3, 3) = -1.0;
  return m;
}

}  // namespace

TEST(Integrator, MethodStrings) {
  EXPECT_EQ(integrator_method_from_string("adaptive-rk"), IntegratorMethod::AdaptiveRk);
  EXPECT_EQ(to_string(IntegratorMethod::PiecewiseExponential), "piecewise-exponential");
  EXPECT_THROW(integrator_method_from_string("euler"), InvalidArgument);
  EXPECT_EQ(dissipator_convention_from_string("doubled"), DissipatorConvention::Doubled);
  EXPECT_THROW(dissipator_convention_from_string("x"), InvalidArgument);
}

TEST(Integrator, StepMustResolveRamp) {
  IntegratorOptions o;
  o.max_step = 0.1;
  EXPECT_THROW(Propagator(sys(), kPointB, o), InvalidArgument);
}

TEST(Integrator, ExactStepMatchesSeries) {
  const RealMatrix h = sys().hamiltonian(kPi + 0.05);
  const double dt = 1e-4;
  const ComplexMatrix hc = (-kI * kTwoPi * dt) * h.cast<cplx>();
  ComplexMatrix series = ComplexMatrix::Identity(sys().dim, sys().dim);
  ComplexMatrix term = series;
  for (int k = 1; k < 12; ++k) {
    term = term * hc / static_cast<double>(k);
    series += term;
  }
  EXPECT_LT((Propagator::exact_step(h, dt) - series).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Propagation, SweetSpotPulseIsDiagonal) {
  const PulseParams flat{7.05, 7.30, 16.741, 0.0};
  const PropagatorResult r = propagate_unitary(sys(), flat);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(std::abs(r.u_sim(i, i)), 1.0, 1e-9);
    for (int j = 0; j < 4; ++j)
      if (i != j) EXPECT_LT(std::abs(r.u_sim(i, j)), 1e-9);
  }
}

TEST(Propagation, UnitarityAndLeakage) {
  for (const auto& p : {kPointA, kPointB, kPointC}) {
    const PropagatorResult r = propagate_unitary(sys(), p);
    EXPECT_LT(r.unitarity_defect, 1e-8);
    for (double l : r.leakage_per_state) EXPECT_LT(l, 1e-6);
  }
}

TEST(Propagation, ValleyPulseHasSmallCoherentError) {
  const PropagatorResult r = propagate_unitary(sys(), kPointB);
  const CalibratedGate cal = calibrate_z(r.u_sim);
  EXPECT_LT(1.0 - coherent_fidelity(cal.u_prime, cal.zeta), 1e-6);
}

TEST(Propagation, IndependentIntegratorsAgree) {
  IntegratorOptions rk;
  rk.method = IntegratorMethod::AdaptiveRk;
  const PropagatorResult a = propagate_unitary(sys(), kPointB);
  const PropagatorResult b = propagate_unitary(sys(), kPointB, rk);
  EXPECT_LT((a.u_sim - b.u_sim).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Propagation, HalvingStepBarelyChangesFidelity) {
  IntegratorOptions o;
  o.convergence_check = true;
  const PropagatorResult r = propagate_unitary(sys(), kPointB, o);
  ASSERT_TRUE(r.step_drift.has_value());
  const CalibratedGate coarse = calibrate_z(r.u_sim);
  const CalibratedGate fine = calibrate_z(*r.u_sim_half_step);
  const double f1 = coherent_fidelity(coarse.u_prime, coarse.zeta);
  const double f2 = coherent_fidelity(fine.u_prime, fine.zeta);
  EXPECT_LT(std::abs(f1 - f2), 1e-9);
}

TEST(Propagation, SegmentsCompose) {
  const Propagator prop(sys(), kPointB);
  const double mid = 5.0;
  const ComplexMatrix whole = prop.unitary(0.0, kPointB.duration());
  const ComplexMatrix split = prop.unitary(mid, kPointB.duration()) * prop.unitary(0.0, mid);
  EXPECT_LT((whole - split).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Propagation, Deterministic) {
  const PropagatorResult a = propagate_unitary(sys(), kPointC);
  const PropagatorResult b = propagate_unitary(sys(), kPointC);
  EXPECT_TRUE(a.u_full == b.u_full);
}

TEST(Lindblad, ExcitedQubitDecaysExponentially) {
  SystemConfig cfg;
  cfg.j_c = 0.0;
  const TwoQubitSystem bare = build_system(cfg);
  const PulseParams idle{1.0, 9999.0, 10.0, 0.0};  // 10 us at the sweet spot
  const ComplexMatrix rho0 = pure(computational_basis(bare).col(1));
  const ComplexMatrix rho = propagate_lindblad(bare, idle, Relaxation::both(100.0), rho0);
  double excited = 0.0;
  for (int k = 0; k < bare.n_a(); ++k) excited += rho(bare.index(k, 1), bare.index(k, 1)).real();
  EXPECT_NEAR(excited, std::exp(-0.1), 1e-6);
}

TEST(Lindblad, DoubledConventionHalvesLifetime) {
  const Relaxation std_r = Relaxation::both(100.0);
  const Relaxation dbl = Relaxation::both(100.0, DissipatorConvention::Doubled);
  EXPECT_DOUBLE_EQ(dbl.rate_a(), 2.0 * std_r.rate_a());
  EXPECT_DOUBLE_EQ(std_r.rate_b(), 1e-5);
  EXPECT_EQ(Relaxation{}.rate_a(), 0.0);
  EXPECT_THROW(Relaxation::both(0.0).validate(), InvalidArgument);
}

TEST(Lindblad, InfiniteT1MatchesUnitary) {
  const RealMatrix basis = computational_basis(sys());
  const RealVector v = (basis.col(1) + basis.col(2)).normalized();
  const ComplexMatrix rho0 = pure(v);
  const ComplexMatrix rho = propagate_lindblad(sys(), kPointB, Relaxation{}, rho0);
  const PropagatorResult r = propagate_unitary(sys(), kPointB);
  EXPECT_LT(trace_distance(rho, r.u_full * rho0 * r.u_full.adjoint()), 1e-9);
}

TEST(Lindblad, TraceAndPositivityPreserved) {
  const RealMatrix basis = computational_basis(sys());
  ComplexMatrix rho0 = 0.25 * pure(basis.col(3)) + 0.75 * pure((basis.col(0) - basis.col(2)).normalized());
  for (double t1 : {10.0, 100.0}) {
    const ComplexMatrix rho = propagate_lindblad(sys(), kPointB, Relaxation::both(t1), rho0);
    EXPECT_NEAR(rho.trace().real(), 1.0, 1e-9);
    EXPECT_LT(std::abs(rho.trace().imag()), 1e-12);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho, Eigen::EigenvaluesOnly);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(Lindblad, SplittingAgreesWithAdaptiveRk) {
  const RealMatrix basis = computational_basis(sys());
  const ComplexMatrix rho0 = pure((basis.col(1) + basis.col(3)).normalized());
  IntegratorOptions rk;
  rk.method = IntegratorMethod::AdaptiveRk;
  rk.rel_tol = rk.abs_tol = 1e-10;
  const auto relax = Relaxation::both(10.0);
  const ComplexMatrix a = propagate_lindblad(sys(), kPointB, relax, rho0);
  const ComplexMatrix b = propagate_lindblad(sys(), kPointB, relax, rho0, rk);
  EXPECT_LT(trace_distance(a, b), 1e-7);
}

TEST(Lindblad, RejectsUnphysicalInput) {
  const ComplexMatrix bad = ComplexMatrix::Identity(sys().dim, sys().dim);
  EXPECT_THROW(propagate_lindblad(sys(), kPointB, Relaxation{}, bad), InvalidArgument);
  ComplexMatrix neg = ComplexMatrix::Zero(sys().dim, sys().dim);
  neg(0, 0) = 2.0;
  neg(1, 1) = -1.0;
  EXPECT_THROW(propagate_lindblad(sys(), kPointB, Relaxation{}, neg), InvalidArgument);
}

TEST(Tomography, IdentityChannel) {
  ChiMatrix chi = process_tomography([](const Matrix4c& r) { return r; });
  EXPECT_NEAR(chi.m(0, 0).real(), 1.0, 1e-12);
  chi.m(0, 0) = 0.0;
  EXPECT_LT(chi.m.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Tomography, UnitaryChannelMatchesPauliExpansion) {
  const Matrix4c u = cz();
  const ChiMatrix chi = process_tomography([&](const Matrix4c& r) { return Matrix4c(u * r * u.adjoint()); });
  const ChiMatrix ref = chi_of_unitary(u);
  EXPECT_LT((chi.m - ref.m).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR((chi.m * ref.m).trace().real(), 1.0, 1e-12);
}

TEST(Tomography, UniformLossScalesTrace) {
  const double p = 0.037;
  const ChiMatrix chi = process_tomography([&](const Matrix4c& r) { return Matrix4c((1.0 - p) * r); });
  EXPECT_NEAR(chi.trace(), 1.0 - p, 1e-9);
}

TEST(Tomography, ConvexMixtureIsLinear) {
  const Matrix4c a = cz();
  Matrix4c b = Matrix4c::Zero();
  b(0, 0) = b(3, 3) = 1.0;
  b(1, 2) = b(2, 1) = kI;
  const double w = 0.3;
  auto ch_a = [&](const Matrix4c& r) { return Matrix4c(a * r * a.adjoint()); };
  auto ch_b = [&](const Matrix4c& r) { return Matrix4c(b * r * b.adjoint()); };
  const ChiMatrix mix = process_tomography([&](const Matrix4c& r) { return Matrix4c(w * ch_a(r) + (1 - w) * ch_b(r)); });
  const Matrix16c expected = w * process_tomography(ch_a).m + (1 - w) * process_tomography(ch_b).m;
  EXPECT_LT((mix.m - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Tomography, RejectsNonHermitianOutput) {
  EXPECT_THROW(process_tomography([](const Matrix4c& r) { return Matrix4c(kI * r); }), NumericalError);
}

TEST(Tomography, LindbladChiIsPhysical) {
  const BasisOutputs outs = lindblad_basis_outputs(sys(), kPointB, Relaxation::both(100.0));
  const ChiMatrix chi = chi_from_outputs(outs);
  EXPECT_LT((chi.m - chi.m.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix16c> es(chi.m, Eigen::EigenvaluesOnly);
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-9);
  EXPECT_LE(chi.trace(), 1.0 + 1e-9);
  EXPECT_GT(chi.trace(), 0.99);
}

TEST(Trajectory, PointAPlateauSitsOnEquator) {
  const auto traj = instantaneous_trajectory(sys(), kPointA, {0, 1});
  const double start = kPointA.t_r / 2, stop = start + kPointA.t_p;
  double lo = 1.0, hi = 0.0;
  for (const auto& p : traj) {
    if (p.t < start || p.t > stop) continue;
    // near the equator; the tight bound is on constancy below
    EXPECT_LT(std::abs(p.bloch_z), 0.1) << p.t;
    lo = std::min(lo, p.pop_01);
    hi = std::max(hi, p.pop_01);
  }
  EXPECT_LT(hi - lo, 0.01);
}

TEST(Trajectory, PointCStaysOnOneHemisphereDuringRampUp) {
  const auto traj = instantaneous_trajectory(sys(), kPointC, {0, 1});
  for (const auto& p : traj)
    if (p.t <= kPointC.t_r / 2) EXPECT_GT(p.pop_01, 0.5) << p.t;
}

TEST(Trajectory, PlateauPopulationsConstant) {
  for (const auto& pulse : {kPointB, kPointC}) {
    const auto traj = instantaneous_trajectory(sys(), pulse, {0, 1});
    double lo = 1.0, hi = 0.0;
    for (const auto& p : traj)
      if (p.t >= pulse.t_r / 2 && p.t <= pulse.t_r / 2 + pulse.t_p) {
        lo = std::min(lo, p.pop_01);
        hi = std::max(hi, p.pop_01);
      }
    EXPECT_LT(hi - lo, 1e-3);
  }
}

TEST(Trajectory, SweetSpotPulseLeavesStateAlone) {
  const PulseParams flat{7.05, 7.30, 16.741, 0.0};
  for (const auto& p : instantaneous_trajectory(sys(), flat, {0, 1})) {
    EXPECT_NEAR(p.pop_01, 1.0, 1e-6);
    EXPECT_NEAR(p.bloch_z, 1.0, 1e-6);
  }
}

TEST(Trajectory, BlochVectorIsConsistent) {
  const auto traj = instantaneous_trajectory(sys(), kPointB, {1, 0});
  EXPECT_EQ(traj.front().t, 0.0);
  EXPECT_EQ(traj.back().t, kPointB.duration());
  for (const auto& p : traj) {
    const double r2 = p.bloch_x * p.bloch_x + p.bloch_y * p.bloch_y + p.bloch_z * p.bloch_z;
    const double in = p.pop_01 + p.pop_10;
    EXPECT_NEAR(std::sqrt(r2), in, 1e-9);
    EXPECT_NEAR(in + p.residual, 1.0, 1e-8);
  }
}

TEST(Trajectory, RejectsNonComputationalStart) {
  EXPECT_THROW(instantaneous_trajectory(sys(), kPointB, {2, 0}), InvalidArgument);
}
