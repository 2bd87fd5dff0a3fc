#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "fluxgate/coupled_system.hpp"
#include "fluxgate/diagnostics.hpp"
#include "fluxgate/errors.hpp"

using namespace fluxgate;

namespace {

// Regression value for the reference system (osc_dim 30, 5 levels per qubit).
constexpr double kStaticZzBaselineGhz = -1.625119361143e-03;

const TwoQubitSystem& reference() {
  static const TwoQubitSystem sys = build_system();
  return sys;
}

TwoQubitSystem uncoupled() {
  SystemConfig c;
  c.j_c = 0.0;
  return build_system(c);
}

// Direct assembly of H(phi) from freshly diagonalized oscillator operators,
// without the control-block decomposition.
RealMatrix direct_hamiltonian(const TwoQubitSystem& sys, double phi) {
  const CircuitParams pb = sys.qubit_b.params;
  const OscillatorRep rep = build_oscillator_rep(pb, kDefaultOscillatorDim);
  const ComplexMatrix& v = sys.qubit_b.vectors;
  const ComplexMatrix hb = v.adjoint() * hamiltonian_at_flux(rep, pb, phi) * v;
  const int na = sys.n_a(), nb = sys.n_b();
  ComplexMatrix h = ComplexMatrix::Zero(sys.dim, sys.dim);
  for (int k = 0; k < na; ++k)
    for (int kp = 0; kp < na; ++kp)
      for (int l = 0; l < nb; ++l)
        for (int lp = 0; lp < nb; ++lp) {
          cplx e = sys.j_c * sys.qubit_a.n_elems(k, kp) * sys.qubit_b.n_elems(l, lp);
          if (k == kp) e += hb(l, lp);
          if (l == lp && k == kp) e += sys.qubit_a.energies(k);
          h(k * nb + l, kp * nb + lp) += e;
        }
  // Qubit B energies in hb are absolute; shift so that the reference matches at pi.
  const ComplexMatrix hb_pi = v.adjoint() * hamiltonian_at_flux(rep, pb, kPi) * v;
  const double offset = hb_pi(0, 0).real();
  return h.real() - offset * RealMatrix::Identity(sys.dim, sys.dim);
}

}  // namespace

TEST(Assemble, ControlDecompositionMatchesDirectAssembly) {
  const TwoQubitSystem& sys = reference();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(kPi - 0.2 * kPi, kPi + 0.2 * kPi);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double phi = u(rng);
    worst = std::max(worst, (sys.hamiltonian(phi) - direct_hamiltonian(sys, phi)).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(Assemble, BlocksAreSymmetric) {
  const TwoQubitSystem& sys = reference();
  EXPECT_EQ(sys.dim, 25);
  for (const RealMatrix* m : {&sys.h_pi, &sys.c_ctrl, &sys.s_ctrl})
    EXPECT_LT((*m - m->transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Assemble, UncoupledSpectrumIsTensorSum) {
  const TwoQubitSystem sys = uncoupled();
  const DressedSpectrum s = dressed_spectrum(sys, kPi);
  std::vector<double> sums;
  for (int k = 0; k < 5; ++k)
    for (int l = 0; l < 5; ++l) sums.push_back(sys.qubit_a.energies(k) + sys.qubit_b.energies(l));
  std::sort(sums.begin(), sums.end());
  for (int i = 0; i < 25; ++i) EXPECT_NEAR(s.energies(i), sums[static_cast<size_t>(i)], 1e-10);
  for (const auto& [label, overlap] : s.labels.overlap) EXPECT_NEAR(overlap, 1.0, 1e-12);
}

TEST(Assemble, RejectsFluxOnQubitA) {
  const TwoQubitSystem& sys = reference();
  EXPECT_THROW(assemble(sys.qubit_a, sys.qubit_b, 0.3, FluxTarget::QubitA), InvalidArgument);
}

TEST(Assemble, RejectsQubitsAwayFromSweetSpot) {
  const CircuitParams pb = reference_qubit_b();
  const OscillatorRep rep = build_oscillator_rep(pb);
  const TruncatedQubit off = diagonalize_and_truncate(rep, pb, kPi + 0.1);
  EXPECT_THROW(assemble(reference().qubit_a, off, 0.3), InvalidArgument);
}

TEST(Assemble, DispersiveShiftIsFinite) {
  const TwoQubitSystem& sys = reference();
  const DressedSpectrum s = dressed_spectrum(sys, kPi);
  const double w01 = s.energy(0, 1) - s.energy(0, 0);
  const double w10 = s.energy(1, 0) - s.energy(0, 0);
  EXPECT_GT(std::abs(w01 - sys.qubit_b.frequency()), 1e-5);
  EXPECT_GT(std::abs(w10 - sys.qubit_a.frequency()), 1e-5);
  EXPECT_LT(std::abs(w01 - sys.qubit_b.frequency()), 0.05);
}

TEST(Dressed, SweetSpotOrderingAndOverlaps) {
  const DressedSpectrum s = dressed_spectrum(reference(), kPi);
  EXPECT_LT(s.energy(0, 0), s.energy(0, 1));
  EXPECT_LT(s.energy(0, 1), s.energy(1, 0));
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) EXPECT_GT(s.labels.overlap.at({k, l}), 0.7);
  EXPECT_FALSE(s.labels.ambiguous);
  // bijection
  std::set<int> states;
  for (const auto& [label, idx] : s.labels.index) states.insert(idx);
  EXPECT_EQ(states.size(), s.labels.index.size());
}

TEST(Dressed, NearDegenerateAtCrossing) {
  const DressedSpectrum s = tracked_spectrum(reference(), kPi + 0.0705 * kPi);
  EXPECT_LT(std::abs(s.energy(1, 0) - s.energy(0, 1)), 0.035);
}

TEST(Dressed, TrackedLabelsAreContinuous) {
  // Computational labels only: two noncomputational levels near 6.27 GHz have
  // their own narrow avoided crossing around 0.083 pi.
  LabelTracker tracker(reference());
  auto check = [&](double x) {
    const DressedSpectrum prev = tracker.current();
    const DressedSpectrum& next = tracker.advance(kPi + x * kPi);
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l)
        EXPECT_GT(std::abs(prev.vector(k, l).dot(next.vector(k, l))), 0.99) << x;
  };
  for (int i = 1; i <= 150; ++i) check(i * 1e-3);
  for (int i = 149; i >= -50; --i) check(i * 1e-3);
}

TEST(Dressed, TrackingSwapsCharacterThroughTheCrossing) {
  // The adiabatic |01> stays on the lower branch but turns into the bare |10>.
  const TwoQubitSystem& sys = reference();
  const DressedSpectrum pi = dressed_spectrum(sys, kPi);
  const DressedSpectrum above = tracked_spectrum(sys, kPi + 0.09 * kPi);
  EXPECT_LT(above.energy(0, 1), above.energy(1, 0));
  EXPECT_GT(std::abs(above.vector(0, 1).dot(pi.vector(1, 0))), 0.9);
  EXPECT_GT(std::abs(above.vector(1, 0).dot(pi.vector(0, 1))), 0.9);
}

TEST(Crossing, ReferenceLocation) {
  const LevelCrossing c = find_level_crossing(reference());
  EXPECT_NEAR(c.delta_phi_star / kPi, 0.0705, 0.0005);
  EXPECT_GT(c.splitting, 0.0);
}

// The published splitting is 30 MHz; kept as stated.
TEST(Crossing, ReferenceSplitting) {
  const LevelCrossing c = find_level_crossing(reference());
  EXPECT_NEAR(c.splitting * 1e3, 30.0, 1.0);
}

TEST(Crossing, MirrorSymmetric) {
  const LevelCrossing up = find_level_crossing(reference(), CrossingSide::Above);
  const LevelCrossing down = find_level_crossing(reference(), CrossingSide::Below);
  EXPECT_NEAR(up.delta_phi_star, -down.delta_phi_star, 1e-6);
  EXPECT_NEAR(up.splitting, down.splitting, 1e-9);
}

TEST(Crossing, UncoupledGapCloses) {
  const LevelCrossing c = find_level_crossing(uncoupled());
  EXPECT_LT(c.splitting, 1e-6);
}

TEST(Crossing, SplittingLinearInCoupling) {
  SystemConfig half;
  half.j_c = 0.5 * kReferenceCouplingGhz;
  const LevelCrossing full = find_level_crossing(reference());
  const LevelCrossing weak = find_level_crossing(build_system(half));
  EXPECT_NEAR(full.splitting / weak.splitting, 2.0, 0.01);
  EXPECT_NEAR(weak.delta_phi_star, full.delta_phi_star, 1e-3 * kPi);
}

TEST(Crossing, RequiresLowerFrequencyFluxQubit) {
  const TwoQubitSystem& ref = reference();
  const TwoQubitSystem swapped = assemble(ref.qubit_b, ref.qubit_a, 0.3);
  EXPECT_THROW(find_level_crossing(swapped), InvalidArgument);
}

TEST(TwoLevel, SweetSpotValues) {
  const TwoQubitSystem& sys = reference();
  const TwoLevelModel m = two_level_model(sys, kPi);
  EXPECT_NEAR(m.a_phi, 0.0, 1e-12);
  EXPECT_NEAR(m.omega_phi, sys.qubit_b.frequency(), 1e-12);
  EXPECT_NEAR(m.delta_phi, 0.304, 1e-3);
  EXPECT_NEAR(std::tan(m.theta_mix), m.a_phi / m.omega_phi, 1e-12);
}

TEST(TwoLevel, AtTheCrossing) {
  const TwoQubitSystem& sys = reference();
  const double phi = kPi + find_level_crossing(sys).delta_phi_star;
  const TwoLevelModel m = two_level_model(sys, phi);
  EXPECT_LT(std::abs(m.delta_phi), 0.02);
  const double w_a = sys.qubit_a.frequency();
  EXPECT_NEAR(m.a_phi * m.a_phi, std::abs(w_a * w_a - m.omega_phi * m.omega_phi), 0.05 * w_a * w_a);
  EXPECT_NEAR(std::abs(m.lambda_amp), 1.0, 0.05);
  EXPECT_NEAR(std::tan(m.theta_mix), m.a_phi / m.omega_phi, 1e-12);
}

TEST(TwoLevel, MatchesUncoupledGapAcrossWindow) {
  const TwoQubitSystem sys = uncoupled();
  for (double x = 0.0; x <= 0.1 + 1e-12; x += 0.01) {
    const double phi = kPi + x * kPi;
    const TwoLevelModel m = two_level_model(sys.qubit_b, sys.qubit_a.frequency(), 0.0, phi);
    const DressedSpectrum s = tracked_spectrum(sys, phi);
    EXPECT_NEAR(m.delta_phi, s.energy(1, 0) - s.energy(0, 1), 1e-4) << x;
  }
}

TEST(StaticZz, VanishesWithoutCoupling) {
  const TwoQubitSystem sys = uncoupled();
  EXPECT_NEAR(static_zz(sys, kPi), 0.0, 1e-10);
  EXPECT_NEAR(static_zz(sys, kPi + 0.05 * kPi), 0.0, 1e-10);
}

TEST(StaticZz, RegressionAtSweetSpot) {
  const double zz = static_zz(reference(), kPi);
  EXPECT_GT(std::abs(zz), 1e-5);
  EXPECT_NEAR(zz, kStaticZzBaselineGhz, 1e-9);
}

TEST(StaticZz, ContinuousAcrossCrossingRegion) {
  double prev = static_zz(reference(), kPi + 0.06 * kPi);
  LabelTracker tracker(reference());
  tracker.advance_to(kPi + 0.06 * kPi);
  for (int i = 1; i <= 40; ++i) {
    const auto& s = tracker.advance(kPi + (0.06 + 5e-4 * i) * kPi);
    const double zz = s.energy(1, 1) - s.energy(1, 0) - s.energy(0, 1) + s.energy(0, 0);
    EXPECT_LT(std::abs(zz - prev), 5e-3) << i;
    prev = zz;
  }
}

TEST(Sweep, ContainsSweetSpotRowAndRejectsEmptyRange) {
  const TwoQubitSystem& sys = reference();
  const SpectrumSweep sweep = sweep_spectrum(sys, reference_qubit_b(), 40, {0.98, 1.0, 1.05});
  EXPECT_NEAR(sweep.omega_a[1], 1.152, 1e-3);
  EXPECT_NEAR(sweep.omega_b[1], 0.848, 1e-3);
  EXPECT_EQ(sweep.levels[1].size(), 25u);
  EXPECT_THROW(sweep_spectrum(sys, reference_qubit_b(), 40, {}), InvalidArgument);
}
