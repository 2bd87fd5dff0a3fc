#pragma once

#include <optional>

#include "fluxgate/coupled_system.hpp"
#include "fluxgate/evolution.hpp"
#include "fluxgate/gate_metrics.hpp"
#include "fluxgate/pulse.hpp"

namespace fluxgate {

/// Full pipeline for one pulse: propagate, project, calibrate, score.
struct GateEvaluation {
  PulseParams pulse;
  PropagatorResult propagation;
  CalibratedGate calibrated;
  FidelityReport report;
  // |F(max_step) - F(max_step / 2)| when a convergence check was requested.
  std::optional<double> fidelity_drift;
  std::optional<ChiMatrix> chi_sim;
  std::optional<ChiMatrix> chi_ideal;

  double coherent_error() const { return 1.0 - report.coherent_f; }
  // 1 - F_g when relaxation was simulated, otherwise the coherent error.
  double gate_error() const { return report.f_g ? 1.0 - *report.f_g : coherent_error(); }
};

GateEvaluation evaluate_gate(const TwoQubitSystem& sys, const PulseParams& pulse,
                             const IntegratorOptions& opts = {},
                             const std::optional<Relaxation>& relaxation = std::nullopt);

/// Process matrix of the relaxing gate in the calibrated Z frame.
ChiMatrix calibrated_lindblad_chi(const TwoQubitSystem& sys, const PulseParams& pulse,
                                  const Relaxation& relaxation, const CalibratedGate& frame,
                                  const IntegratorOptions& opts = {});

}  // namespace fluxgate
