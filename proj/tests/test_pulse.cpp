#include <cmath>

#include <gtest/gtest.h>

#include "fluxgate/errors.hpp"
#include "fluxgate/pulse.hpp"
#include "fluxgate/types.hpp"

using namespace fluxgate;

namespace {

const PulseParams kValley{7.05, 7.30, 16.741, 0.0705 * kPi};

// Closed form written out independently: t_bar runs over [0, t_r] with the plateau removed.
double reference_flux(const PulseParams& p, double t) {
  const double c = 1.0 / (std::exp(p.a_env / 4.0) - 1.0);
  double tbar = t;
  if (t >= p.t_r / 2 && t <= p.t_r / 2 + p.t_p) return kPi + p.delta_phi;
  if (t > p.t_r / 2 + p.t_p) tbar = t - p.t_p;
  return kPi + c * p.delta_phi * (std::exp(-p.a_env * tbar * (tbar - p.t_r) / (p.t_r * p.t_r)) - 1.0);
}

}  // namespace

TEST(Pulse, EdgesReturnToSweetSpot) {
  EXPECT_EQ(flux_at(kValley, 0.0), kPi);
  EXPECT_EQ(flux_at(kValley, kValley.duration()), kPi);
}

TEST(Pulse, RampMeetsPlateauExactly) {
  EXPECT_EQ(flux_at(kValley, kValley.t_r / 2), kPi + kValley.delta_phi);
  EXPECT_EQ(flux_at(kValley, kValley.t_r / 2 + kValley.t_p), kPi + kValley.delta_phi);
  EXPECT_DOUBLE_EQ(kValley.normalization() * std::expm1(kValley.a_env / 4), 1.0);
}

TEST(Pulse, QuarterRampRegression) {
  // Pinned from the closed form: pi + C dphi (exp(3A/16) - 1).
  const double expected = kPi + 0.0705 * kPi * std::expm1(3.0 * 16.741 / 16.0) / std::expm1(16.741 / 4.0);
  EXPECT_NEAR(flux_at(kValley, kValley.t_r / 4), expected, 1e-14);
  EXPECT_NEAR(flux_at(kValley, kValley.t_r / 4), 3.21716345273046, 1e-13);
}

TEST(Pulse, MatchesIndependentClosedForm) {
  for (int i = 0; i <= 1000; ++i) {
    const double t = kValley.duration() * i / 1000.0;
    EXPECT_NEAR(flux_at(kValley, t), reference_flux(kValley, t), 1e-13) << t;
  }
}

TEST(Pulse, ContinuityAtSegmentBoundaries) {
  for (double edge : {kValley.t_r / 2, kValley.t_r / 2 + kValley.t_p}) {
    const double before = flux_at(kValley, std::nextafter(edge, 0.0));
    const double after = flux_at(kValley, std::nextafter(edge, 100.0));
    EXPECT_LT(std::abs(before - after), 1e-14);
  }
}

TEST(Pulse, TimeSymmetric) {
  const double end = kValley.duration();
  for (int i = 0; i <= 2000; ++i) {
    const double t = end * i / 2000.0;
    EXPECT_NEAR(flux_at(kValley, t), flux_at(kValley, end - t), 1e-14) << t;
  }
  // With exactly representable mirror times the two evaluations coincide bitwise.
  const PulseParams dyadic{8.0, 4.0, 12.0, 0.07 * kPi};
  for (int i = 0; i <= 96; ++i) {
    const double t = i / 8.0;
    EXPECT_EQ(flux_at(dyadic, t), flux_at(dyadic, 12.0 - t)) << t;
  }
}

TEST(Pulse, MonotoneRampsAndPeak) {
  double prev = flux_at(kValley, 0.0);
  for (int i = 1; i <= 500; ++i) {
    const double v = flux_at(kValley, kValley.t_r / 2 * i / 500.0);
    EXPECT_GT(v, prev) << i;
    prev = v;
  }
  double peak = 0.0;
  for (int i = 0; i <= 3000; ++i) peak = std::max(peak, flux_at(kValley, kValley.duration() * i / 3000.0));
  EXPECT_EQ(peak, kPi + kValley.delta_phi);
}

TEST(Pulse, NegativeDetuningIsMirrored) {
  PulseParams neg = kValley;
  neg.delta_phi = -neg.delta_phi;
  for (double t : {0.5, 2.0, 5.0, 10.0, 13.0})
    EXPECT_NEAR(flux_at(neg, t) - kPi, -(flux_at(kValley, t) - kPi), 1e-15);
}

TEST(Pulse, OutsideWindow) {
  EXPECT_EQ(flux_at(kValley, -1.0), kPi);
  EXPECT_EQ(flux_at(kValley, 100.0), kPi);
  EXPECT_THROW(flux_at(kValley, -1e-9, true), OutOfRangeError);
  EXPECT_THROW(flux_at(kValley, kValley.duration() + 1e-9, true), OutOfRangeError);
  EXPECT_NO_THROW(flux_at(kValley, kValley.duration(), true));
}

TEST(Pulse, ValidateRejectsBadParameters) {
  EXPECT_THROW((PulseParams{0.0, 1.0, 10.0, 0.1}.validate()), InvalidArgument);
  EXPECT_THROW((PulseParams{1.0, -1.0, 10.0, 0.1}.validate()), InvalidArgument);
  EXPECT_THROW((PulseParams{1.0, 1.0, 0.0, 0.1}.validate()), InvalidArgument);
  EXPECT_THROW((PulseParams{1.0, 1.0, 1.0, NAN}.validate()), InvalidArgument);
  EXPECT_NO_THROW((PulseParams{1.0, 0.0, 1.0, -0.1}.validate()));
  EXPECT_DOUBLE_EQ(kValley.duration(), 14.35);
}

TEST(Adiabaticity, ReferenceRampIsLoose) {
  const double g = 0.01298;
  const AdiabaticityReport r = validate_adiabaticity(kValley, g, 0.848);
  EXPECT_EQ(r.verdict, AdiabaticityVerdict::Loose);
  EXPECT_NEAR(r.ramp_rate, 0.1418, 1e-3);
  EXPECT_LT(r.coupling_rate, r.ramp_rate);
  EXPECT_LT(r.ramp_rate, r.min_qubit_rate);
}

TEST(Adiabaticity, ExtremeRampsFail) {
  PulseParams slow = kValley;
  slow.t_r = 1e6;
  EXPECT_EQ(validate_adiabaticity(slow, 0.013, 0.848).verdict, AdiabaticityVerdict::Fail);
  PulseParams fast = kValley;
  fast.t_r = 1e-3;
  EXPECT_EQ(validate_adiabaticity(fast, 0.013, 0.848).verdict, AdiabaticityVerdict::Fail);
}

TEST(Adiabaticity, WideSeparationIsStrict) {
  PulseParams p = kValley;
  p.t_r = 2.0;
  EXPECT_EQ(validate_adiabaticity(p, 0.001, 5.0).verdict, AdiabaticityVerdict::Strict);
  EXPECT_EQ(to_string(AdiabaticityVerdict::Strict), "strict");
}

TEST(Sampling, HalfDurationGivesThreeSamples) {
  const PulseSamples s = sample(kValley, kValley.duration() / 2);
  ASSERT_EQ(s.times.size(), 3u);
  EXPECT_EQ(s.flux.front(), kPi);
  EXPECT_EQ(s.flux.back(), kPi);
  EXPECT_EQ(s.times.back(), kValley.duration());
}

TEST(Sampling, LastStepShortened) {
  const PulseSamples s = sample(kValley, 1.0);
  ASSERT_EQ(s.times.size(), 16u);
  EXPECT_DOUBLE_EQ(s.times[14], 14.0);
  EXPECT_EQ(s.times.back(), 14.35);
}

TEST(Sampling, RejectsBadStep) {
  EXPECT_THROW(sample(kValley, 0.0), InvalidArgument);
  EXPECT_THROW(sample(kValley, -1.0), InvalidArgument);
  EXPECT_THROW(sample(kValley, kValley.duration() * 1.01), InvalidArgument);
}

TEST(Sampling, TrapezoidAreaSelfConverges) {
  auto area = [](double dt) {
    const PulseSamples s = sample(kValley, dt);
    double a = 0.0;
    for (size_t i = 1; i < s.times.size(); ++i)
      a += 0.5 * (s.times[i] - s.times[i - 1]) * (s.flux[i] + s.flux[i - 1] - 2 * kPi);
    return a;
  };
  const double a1 = area(0.01), a2 = area(0.005), a3 = area(0.0025);
  EXPECT_LT(std::abs(a2 - a3), 1e-6);
  // second-order convergence: successive differences shrink by about 4
  EXPECT_NEAR((a1 - a2) / (a2 - a3), 4.0, 0.5);
}
