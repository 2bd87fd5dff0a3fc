#include "fluxgate/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "fluxgate/diagnostics.hpp"
#include "fluxgate/errors.hpp"
#include "fluxgate/work_pool.hpp"

namespace fluxgate {

std::string to_string(Objective o) {
  return o == Objective::CoherentError ? "coherent_error" : "gate_error_lindblad";
}

Objective objective_from_string(const std::string& s) {
  if (s == "coherent_error") return Objective::CoherentError;
  if (s == "gate_error_lindblad") return Objective::GateErrorLindblad;
  throw InvalidArgument("unknown objective '" + s + "'");
}

std::string to_string(NoiseLineKind k) {
  return k == NoiseLineKind::VaryDeltaPhi ? "vary_delta_phi" : "vary_t_p";
}

NoiseLineKind noise_line_kind_from_string(const std::string& s) {
  if (s == "vary_delta_phi") return NoiseLineKind::VaryDeltaPhi;
  if (s == "vary_t_p") return NoiseLineKind::VaryPlateau;
  throw InvalidArgument("unknown noise line '" + s + "'");
}

namespace {

constexpr double kDurationScaleNs = 10.0;

struct Slot {
  const char* name;
  ParameterRange OptimizationSpec::*range;
  double PulseParams::*field;
};

constexpr std::array<Slot, 4> kSlots{{{"t_r", &OptimizationSpec::t_r, &PulseParams::t_r},
                                      {"t_p", &OptimizationSpec::t_p, &PulseParams::t_p},
                                      {"a_env", &OptimizationSpec::a_env, &PulseParams::a_env},
                                      {"delta_phi", &OptimizationSpec::delta_phi, &PulseParams::delta_phi}}};

struct FreeSpace {
  std::vector<const Slot*> slots;
  std::vector<double> lower, upper;
  PulseParams base;

  explicit FreeSpace(const OptimizationSpec& spec) {
    for (const auto& s : kSlots) {
      const ParameterRange& r = spec.*(s.range);
      if (r.fixed) {
        base.*(s.field) = r.value;
      } else {
        slots.push_back(&s);
        lower.push_back(r.lower);
        upper.push_back(r.upper);
        base.*(s.field) = 0.5 * (r.lower + r.upper);
      }
    }
  }
  PulseParams pulse(const std::vector<double>& x) const {
    PulseParams p = base;
    for (size_t i = 0; i < slots.size(); ++i) p.*(slots[i]->field) = x[i];
    return p;
  }
  std::vector<double> point(const PulseParams& p) const {
    std::vector<double> x;
    for (size_t i = 0; i < slots.size(); ++i)
      x.push_back(std::clamp(p.*(slots[i]->field), lower[i], upper[i]));
    return x;
  }
};

}  // namespace

void OptimizationSpec::validate() const {
  for (const auto& s : kSlots) {
    const ParameterRange& r = this->*(s.range);
    if (!std::isfinite(r.value) || (!r.fixed && !(std::isfinite(r.lower) && std::isfinite(r.upper))))
      throw InvalidArgument(std::string("non-finite bound for ") + s.name);
    if (!r.fixed && !(r.lower < r.upper))
      throw InvalidArgument(std::string("empty range for ") + s.name);
  }
  if (t_r.fixed && t_p.fixed && a_env.fixed && delta_phi.fixed)
    throw InvalidArgument("optimization needs at least one free parameter");
  if (restarts < 1) throw InvalidArgument("restarts must be >= 1");
  if (candidates < 0) throw InvalidArgument("candidates must be >= 0");
  if (!(error_floor >= 0.0)) throw InvalidArgument("error_floor must be >= 0");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
  if (objective == Objective::GateErrorLindblad) {
    if (!relaxation) throw InvalidArgument("the Lindblad objective needs T1 values");
    relaxation->validate();
  }
}

double search_objective(double error, double duration, double floor) {
  return std::max(error, floor) + floor * duration / kDurationScaleNs;
}

double pulse_error(const TwoQubitSystem& sys, const PulseParams& pulse, Objective objective,
                   const std::optional<Relaxation>& relaxation, const IntegratorOptions& opts) {
  try {
    const auto ev = evaluate_gate(sys, pulse, opts,
                                  objective == Objective::GateErrorLindblad ? relaxation : std::nullopt);
    return ev.gate_error();
  } catch (const UndefinedPhaseError&) {
    return 1.0;
  }
}

namespace {

// Seeds one restart: for a given ramp (t_r, A, delta_phi) the plateau enters
// only through exp(-i 2pi H t_p), so a fine t_p scan costs one ramp propagation.
PulseParams best_plateau(const TwoQubitSystem& sys, const PulseParams& ramp, double t_p_lower,
                         double t_p_upper, const RealMatrix& basis, const OptimizationSpec& spec) {
  const Propagator prop(sys, ramp, spec.search_integrator);
  const ComplexMatrix rise = prop.unitary(0.0, 0.5 * ramp.t_r);
  const Eigen::SelfAdjointEigenSolver<RealMatrix> es(sys.hamiltonian(kPi + ramp.delta_phi));
  const ComplexMatrix v = es.eigenvectors().cast<cplx>();
  const ComplexMatrix left = basis.transpose().cast<cplx>() * rise.transpose() * v;
  const ComplexMatrix right = v.adjoint() * rise * basis.cast<cplx>();
  constexpr double kPlateauStep = 0.05;  // ns
  const int n = std::max(1, static_cast<int>(std::ceil((t_p_upper - t_p_lower) / kPlateauStep)));
  PulseParams best = ramp;
  double best_value = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= n; ++k) {
    const double t_p = t_p_lower + (t_p_upper - t_p_lower) * k / n;
    const ComplexVector phases =
        (-kI * kTwoPi * t_p * es.eigenvalues().cast<cplx>()).array().exp().matrix();
    const Matrix4c u = left * phases.asDiagonal() * right;
    double error = 1.0;
    try {
      const CalibratedGate c = calibrate_z(u);
      error = 1.0 - coherent_fidelity(c.u_prime, c.zeta);
    } catch (const UndefinedPhaseError&) {
    }
    const double value = search_objective(error, ramp.t_r + t_p, spec.error_floor);
    if (value < best_value) {
      best_value = value;
      best.t_p = t_p;
    }
  }
  return best;
}

}  // namespace

OptimizationResult optimize_pulse(const TwoQubitSystem& sys, const OptimizationSpec& spec) {
  spec.validate();
  const FreeSpace space(spec);
  const size_t dim = space.slots.size();

  auto evaluate = [&](const std::vector<double>& x) {
    const WarningSilencer quiet;
    const PulseParams p = space.pulse(x);
    return search_objective(pulse_error(sys, p, spec.objective, spec.relaxation, spec.search_integrator),
                            p.duration(), spec.error_floor);
  };

  // Random candidates are drawn serially so the stream depends only on the seed.
  std::mt19937_64 rng(spec.seed);
  std::vector<std::vector<double>> candidates;
  for (int c = 0; c < spec.candidates; ++c) {
    std::vector<double> x(dim);
    for (size_t i = 0; i < dim; ++i)
      x[i] = std::uniform_real_distribution<double>(space.lower[i], space.upper[i])(rng);
    candidates.push_back(std::move(x));
  }
  // With a free plateau, each random ramp is paired with its best plateau length.
  const auto plateau_slot = std::find_if(space.slots.begin(), space.slots.end(),
                                         [](const Slot* s) { return s->field == &PulseParams::t_p; });
  const RealMatrix basis = computational_basis(sys);
  std::vector<double> candidate_values(candidates.size());
  parallel_for(candidates.size(), spec.threads, [&](size_t i) {
    if (plateau_slot != space.slots.end()) {
      const WarningSilencer quiet;
      const auto k = static_cast<size_t>(plateau_slot - space.slots.begin());
      candidates[i] = space.point(
          best_plateau(sys, space.pulse(candidates[i]), space.lower[k], space.upper[k], basis, spec));
    }
    candidate_values[i] = evaluate(candidates[i]);
  });

  std::vector<std::vector<double>> starts;
  for (const auto& w : spec.warm_starts) starts.push_back(space.point(w));
  std::vector<size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return candidate_values[a] < candidate_values[b]; });
  for (size_t k = 0; k < order.size() && starts.size() < static_cast<size_t>(spec.restarts); ++k)
    starts.push_back(candidates[order[k]]);
  if (starts.empty()) starts.push_back(space.point(space.base));

  std::vector<NelderMeadResult> runs(starts.size());
  std::vector<std::vector<double>> histories(starts.size());
  parallel_for(starts.size(), spec.threads, [&](size_t i) {
    auto recorded = [&](const std::vector<double>& x) {
      const double v = evaluate(x);
      histories[i].push_back(v);
      return v;
    };
    runs[i] = nelder_mead(recorded, starts[i], space.lower, space.upper, spec.simplex);
  });

  OptimizationResult out;
  out.evaluated_objectives = candidate_values;
  std::vector<double> best_x;
  double best_f = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < candidates.size(); ++i)
    if (candidate_values[i] < best_f) {
      best_f = candidate_values[i];
      best_x = candidates[i];
    }
  for (size_t i = 0; i < runs.size(); ++i) {
    out.evaluated_objectives.insert(out.evaluated_objectives.end(), histories[i].begin(),
                                    histories[i].end());
    out.converged = out.converged || runs[i].converged;
    if (runs[i].f < best_f) {
      best_f = runs[i].f;
      best_x = runs[i].x;
    }
  }
  out.evaluations = static_cast<int>(out.evaluated_objectives.size());
  out.objective = best_f;
  out.pulse = space.pulse(best_x);

  const auto final_eval = evaluate_gate(sys, out.pulse, spec.final_integrator, spec.relaxation);
  out.report = final_eval.report;
  out.error = spec.objective == Objective::GateErrorLindblad ? final_eval.gate_error()
                                                             : final_eval.coherent_error();
  if (!out.converged) {
    std::ostringstream os;
    os << "optimizer: no start converged within " << spec.simplex.max_evals << " evaluations";
    warn(os.str());
  }
  return out;
}

bool ScanResult::all_converged() const {
  return std::all_of(points.begin(), points.end(), [](const ScanPoint& p) { return p.converged; });
}

ScanPoint to_scan_point(const OptimizationResult& r) {
  return {r.pulse, r.error, r.pulse.duration(), r.report.zeta, r.report.leakage_total, r.converged};
}

ScanResult scan_detuning(const TwoQubitSystem& sys, const std::vector<double>& delta_phi_values,
                         const OptimizationSpec& spec, const ScanProgress& progress) {
  if (delta_phi_values.empty()) throw InvalidArgument("scan_detuning: no detuning values");
  ScanResult out;
  out.axes.push_back({"delta_phi", delta_phi_values});
  std::optional<PulseParams> previous;
  for (size_t i = 0; i < delta_phi_values.size(); ++i) {
    OptimizationSpec point_spec = spec;
    point_spec.delta_phi = ParameterRange::pinned(delta_phi_values[i]);
    point_spec.seed = spec.seed + i;
    if (previous) point_spec.warm_starts.push_back(*previous);
    const OptimizationResult r = optimize_pulse(sys, point_spec);
    previous = r.pulse;
    out.points.push_back(to_scan_point(r));
    if (progress) progress(i, out.points.back());
  }
  return out;
}

ScanResult scan_2d(const TwoQubitSystem& sys, const std::vector<double>& delta_phi_values,
                   const std::vector<double>& t_p_values, double t_r, double a_env,
                   const IntegratorOptions& opts, int threads) {
  if (delta_phi_values.empty() || t_p_values.empty()) throw InvalidArgument("scan_2d: empty axis");
  ScanResult out;
  out.axes = {{"delta_phi", delta_phi_values}, {"t_p", t_p_values}};
  out.points.resize(delta_phi_values.size() * t_p_values.size());
  parallel_for(out.points.size(), threads, [&](size_t k) {
    const PulseParams p{t_r, t_p_values[k % t_p_values.size()], a_env,
                        delta_phi_values[k / t_p_values.size()]};
    ScanPoint& pt = out.points[k];
    pt.pulse = p;
    pt.duration = p.duration();
    try {
      const auto ev = evaluate_gate(sys, p, opts);
      pt.error = ev.coherent_error();
      pt.zeta = ev.report.zeta;
      pt.leakage = ev.report.leakage_total;
    } catch (const UndefinedPhaseError&) {
      pt.error = 1.0;
      pt.zeta = std::nan("");
      pt.leakage = 0.0;
    }
  });
  return out;
}

NoiseCurves noise_sensitivity(const TwoQubitSystem& sys, NoiseLineKind kind, const PulseParams& anchor,
                              const std::vector<double>& offsets, const std::vector<double>& t1_us,
                              DissipatorConvention convention, const IntegratorOptions& opts,
                              int threads) {
  if (offsets.empty()) throw InvalidArgument("noise_sensitivity: no offsets");
  NoiseCurves out;
  out.kind = kind;
  out.anchor = anchor;
  out.offsets = offsets;
  out.t1_us = t1_us;
  out.unitary_error.assign(offsets.size(), 0.0);
  out.relaxed_error.assign(t1_us.size(), std::vector<double>(offsets.size(), 0.0));
  const size_t curves = 1 + t1_us.size();
  parallel_for(offsets.size() * curves, threads, [&](size_t k) {
    const size_t i = k / curves;
    const size_t c = k % curves;
    PulseParams p = anchor;
    if (kind == NoiseLineKind::VaryDeltaPhi)
      p.delta_phi += offsets[i];
    else
      p.t_p += offsets[i];
    if (c == 0)
      out.unitary_error[i] = pulse_error(sys, p, Objective::CoherentError, std::nullopt, opts);
    else
      out.relaxed_error[c - 1][i] = pulse_error(sys, p, Objective::GateErrorLindblad,
                                                Relaxation::both(t1_us[c - 1], convention), opts);
  });
  return out;
}

double valley_width(const std::vector<double>& offsets, const std::vector<double>& error,
                    double threshold) {
  if (offsets.size() != error.size() || offsets.empty())
    throw InvalidArgument("valley_width: size mismatch");
  const size_t m = static_cast<size_t>(std::min_element(error.begin(), error.end()) - error.begin());
  if (error[m] > threshold) return 0.0;
  auto edge = [&](size_t inside, size_t outside) {
    const double t = (threshold - error[inside]) / (error[outside] - error[inside]);
    return offsets[inside] + t * (offsets[outside] - offsets[inside]);
  };
  size_t lo = m, hi = m;
  while (lo > 0 && error[lo - 1] <= threshold) --lo;
  while (hi + 1 < error.size() && error[hi + 1] <= threshold) ++hi;
  const double left = lo > 0 ? edge(lo, lo - 1) : offsets[lo];
  const double right = hi + 1 < error.size() ? edge(hi, hi + 1) : offsets[hi];
  return right - left;
}

}  // namespace fluxgate
