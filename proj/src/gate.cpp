#include "fluxgate/gate.hpp"

#include <cmath>

namespace fluxgate {

ChiMatrix calibrated_lindblad_chi(const TwoQubitSystem& sys, const PulseParams& pulse,
                                  const Relaxation& relaxation, const CalibratedGate& frame,
                                  const IntegratorOptions& opts) {
  const BasisOutputs raw = lindblad_basis_outputs(sys, pulse, relaxation, opts);
  const Matrix4c pre = frame.pre();
  const Matrix4c post = frame.post();
  BasisOutputs framed;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const auto k = static_cast<size_t>(4 * i + j);
      framed[k] = pre(i, i) * std::conj(pre(j, j)) * (post * raw[k] * post.adjoint());
    }
  return chi_from_outputs(framed);
}

GateEvaluation evaluate_gate(const TwoQubitSystem& sys, const PulseParams& pulse,
                             const IntegratorOptions& opts,
                             const std::optional<Relaxation>& relaxation) {
  GateEvaluation ev;
  ev.pulse = pulse;
  ev.propagation = propagate_unitary(sys, pulse, opts);
  ev.calibrated = calibrate_z(ev.propagation.u_sim);

  FidelityReport& r = ev.report;
  r.zeta = ev.calibrated.zeta;
  r.coherent_f = coherent_fidelity(ev.calibrated.u_prime, r.zeta);
  r.leakage_total =
      std::max(0.0, 1.0 - (ev.propagation.u_sim.adjoint() * ev.propagation.u_sim).trace().real() / 4.0);
  r.entangling_power = entangling_power(nearest_unitary(ev.calibrated.u_prime));

  if (ev.propagation.u_sim_half_step) {
    const CalibratedGate fine = calibrate_z(*ev.propagation.u_sim_half_step);
    ev.fidelity_drift = std::abs(coherent_fidelity(fine.u_prime, fine.zeta) - r.coherent_f);
  }

  if (relaxation) {
    ev.chi_ideal = chi_of_unitary(ideal_gate({0.5 * kPi, r.zeta}));
    ev.chi_sim = calibrated_lindblad_chi(sys, pulse, *relaxation, ev.calibrated, opts);
    const ProcessFidelity pf = gate_fidelity_from_chi(*ev.chi_sim, *ev.chi_ideal);
    r.f_p = pf.f_p;
    r.f_g = pf.f_g;
  }
  return ev;
}

}  // namespace fluxgate
