#include "fluxgate/pulse.hpp"

#include <cmath>
#include <sstream>

#include "fluxgate/errors.hpp"
#include "fluxgate/types.hpp"

namespace fluxgate {

double PulseParams::normalization() const { return 1.0 / std::expm1(a_env / 4.0); }

void PulseParams::validate() const {
  if (!(t_r > 0.0) || !(t_p >= 0.0) || !(a_env > 0.0) || !std::isfinite(t_r) ||
      !std::isfinite(t_p) || !std::isfinite(a_env) || !std::isfinite(delta_phi)) {
    std::ostringstream os;
    os << "invalid pulse: t_r=" << t_r << " t_p=" << t_p << " A=" << a_env
       << " delta_phi=" << delta_phi;
    throw InvalidArgument(os.str());
  }
}

double flux_at(const PulseParams& pulse, double t, bool strict) {
  const double end = pulse.duration();
  if (t < 0.0 || t > end) {
    if (strict) {
      std::ostringstream os;
      os << "time " << t << " ns outside pulse [0, " << end << "]";
      throw OutOfRangeError(os.str());
    }
    return kPi;
  }
  const double half = 0.5 * pulse.t_r;
  // Distance to the nearer pulse edge; both ramps share one expression, so
  // phi(t) and phi(T - t) are evaluated identically.
  double s = 0.0;
  if (t < half) {
    s = t;
  } else if (t > half + pulse.t_p) {
    s = end - t;
  } else {
    return kPi + pulse.delta_phi;
  }
  const double x = pulse.a_env * s * (pulse.t_r - s) / (pulse.t_r * pulse.t_r);
  return kPi + pulse.normalization() * pulse.delta_phi * std::expm1(x);
}

std::string to_string(AdiabaticityVerdict v) {
  switch (v) {
    case AdiabaticityVerdict::Strict: return "strict";
    case AdiabaticityVerdict::Loose: return "loose";
    case AdiabaticityVerdict::Fail: return "fail";
  }
  return "fail";
}

AdiabaticityReport validate_adiabaticity(const PulseParams& pulse, double g, double omega_min) {
  AdiabaticityReport r;
  r.coupling_rate = kTwoPi * std::abs(g);
  r.ramp_rate = 1.0 / pulse.t_r;
  r.min_qubit_rate = kTwoPi * omega_min;
  constexpr double margin = 3.0;
  if (margin * r.coupling_rate < r.ramp_rate && margin * r.ramp_rate < r.min_qubit_rate)
    r.verdict = AdiabaticityVerdict::Strict;
  else if (r.coupling_rate < r.ramp_rate && r.ramp_rate < r.min_qubit_rate)
    r.verdict = AdiabaticityVerdict::Loose;
  else
    r.verdict = AdiabaticityVerdict::Fail;
  return r;
}

PulseSamples sample(const PulseParams& pulse, double dt) {
  pulse.validate();
  const double end = pulse.duration();
  if (!(dt > 0.0) || dt > end) throw InvalidArgument("sample step must be in (0, duration]");
  const auto n = static_cast<size_t>(std::ceil(end / dt - 1e-12));
  PulseSamples s;
  s.times.reserve(n + 1);
  for (size_t k = 0; k < n; ++k) s.times.push_back(static_cast<double>(k) * dt);
  s.times.push_back(end);
  s.flux.reserve(s.times.size());
  for (double t : s.times) s.flux.push_back(flux_at(pulse, t));
  return s;
}

}  // namespace fluxgate
