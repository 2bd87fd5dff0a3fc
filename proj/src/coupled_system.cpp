#include "fluxgate/coupled_system.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "fluxgate/diagnostics.hpp"
#include "fluxgate/errors.hpp"

namespace fluxgate {
namespace {

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

RealMatrix real_symmetric(const ComplexMatrix& m, const char* what) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (m.imag().cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvalidArgument(std::string(what) + " is not real in the sweet-spot product basis");
  const RealMatrix r = m.real();
  return 0.5 * (r + r.transpose());
}

bool at_sweet_spot(const TruncatedQubit& q) { return std::abs(q.params.phi_ext - kPi) < 1e-12; }

// Greedy maximum-overlap assignment of labelled reference vectors to eigenstates.
DressedLabels assign_labels(const std::vector<ProductLabel>& labels, const RealMatrix& overlaps) {
  // overlaps(label_row, state_col) = |<ref|state>|
  struct Candidate {
    double overlap;
    int label;
    int state;
  };
  std::vector<Candidate> cands;
  cands.reserve(static_cast<size_t>(overlaps.size()));
  for (int r = 0; r < overlaps.rows(); ++r)
    for (int c = 0; c < overlaps.cols(); ++c) cands.push_back({overlaps(r, c), r, c});
  std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
    if (x.overlap != y.overlap) return x.overlap > y.overlap;
    return x.state < y.state;
  });

  DressedLabels out;
  std::vector<bool> label_used(static_cast<size_t>(overlaps.rows()), false);
  std::vector<bool> state_used(static_cast<size_t>(overlaps.cols()), false);
  for (const auto& c : cands) {
    if (label_used[static_cast<size_t>(c.label)] || state_used[static_cast<size_t>(c.state)]) continue;
    label_used[static_cast<size_t>(c.label)] = true;
    state_used[static_cast<size_t>(c.state)] = true;
    out.index[labels[static_cast<size_t>(c.label)]] = c.state;
    out.overlap[labels[static_cast<size_t>(c.label)]] = c.overlap;
  }

  for (int r = 0; r < overlaps.rows(); ++r) {
    RealVector row = overlaps.row(r).transpose();
    std::sort(row.data(), row.data() + row.size(), std::greater<>());
    if (row.size() > 1 && row(0) - row(1) < 1e-3 && row(0) > 1e-3) {
      out.ambiguous = true;
      std::ostringstream os;
      os << "ambiguous dressed label (" << labels[static_cast<size_t>(r)].first << ","
         << labels[static_cast<size_t>(r)].second << "): overlaps " << row(0) << " and " << row(1);
      warn(os.str());
    }
  }
  return out;
}

std::vector<ProductLabel> all_labels(const TwoQubitSystem& sys) {
  std::vector<ProductLabel> out;
  for (int k = 0; k < sys.n_a(); ++k)
    for (int l = 0; l < sys.n_b(); ++l) out.emplace_back(k, l);
  return out;
}

struct RealEigen {
  RealVector values;
  RealMatrix vectors;
};

RealEigen eig(const RealMatrix& h) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(h);
  if (es.info() != Eigen::Success) throw NumericalError("two-qubit eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace

RealMatrix TwoQubitSystem::hamiltonian(double phi) const {
  const double ej = e_j_b();
  return h_pi - ej * (1.0 + std::cos(phi)) * c_ctrl - ej * std::sin(phi) * s_ctrl;
}

TwoQubitSystem assemble(const TruncatedQubit& qubit_a, const TruncatedQubit& qubit_b, double j_c,
                        FluxTarget target) {
  if (target != FluxTarget::QubitB)
    throw InvalidArgument("only qubit B is flux-tuned; qubit A stays at its sweet spot");
  if (!std::isfinite(j_c)) throw InvalidArgument("coupling J_C must be finite");
  if (!at_sweet_spot(qubit_a) || !at_sweet_spot(qubit_b))
    throw InvalidArgument("both qubits must be truncated at the sweet spot (phi = pi)");
  for (const TruncatedQubit* q : {&qubit_a, &qubit_b}) {
    const auto n = q->n_levels;
    if (n < 2 || q->energies.size() != n || q->n_elems.rows() != n || q->cos_elems.rows() != n ||
        q->sin_elems.rows() != n)
      throw InvalidArgument("truncated qubit has inconsistent dimensions");
  }

  TwoQubitSystem sys;
  sys.qubit_a = qubit_a;
  sys.qubit_b = qubit_b;
  sys.j_c = j_c;
  sys.dim = qubit_a.n_levels * qubit_b.n_levels;

  const ComplexMatrix id_a = ComplexMatrix::Identity(qubit_a.n_levels, qubit_a.n_levels);
  const ComplexMatrix id_b = ComplexMatrix::Identity(qubit_b.n_levels, qubit_b.n_levels);
  const ComplexMatrix ha = qubit_a.energies.cast<cplx>().asDiagonal();
  const ComplexMatrix hb = qubit_b.energies.cast<cplx>().asDiagonal();

  sys.h_pi = real_symmetric(kron(ha, id_b) + kron(id_a, hb) +
                                j_c * kron(qubit_a.n_elems, qubit_b.n_elems),
                            "coupled Hamiltonian");
  sys.c_ctrl = real_symmetric(kron(id_a, qubit_b.cos_elems), "cos control block");
  sys.s_ctrl = real_symmetric(kron(id_a, qubit_b.sin_elems), "sin control block");
  return sys;
}

TwoQubitSystem build_system(const SystemConfig& config) {
  CircuitParams a = config.qubit_a;
  CircuitParams b = config.qubit_b;
  a.phi_ext = kPi;
  b.phi_ext = kPi;
  const auto rep_a = build_oscillator_rep(a, config.osc_dim);
  const auto rep_b = build_oscillator_rep(b, config.osc_dim);
  return assemble(diagonalize_and_truncate(rep_a, a, kPi, config.n_levels),
                  diagonalize_and_truncate(rep_b, b, kPi, config.n_levels), config.j_c);
}

DressedSpectrum dressed_spectrum(const TwoQubitSystem& sys, double phi) {
  RealEigen es = eig(sys.hamiltonian(phi));
  for (Eigen::Index j = 0; j < es.vectors.cols(); ++j) {
    Eigen::Index imax = 0;
    es.vectors.col(j).cwiseAbs().maxCoeff(&imax);
    if (es.vectors(imax, j) < 0.0) es.vectors.col(j) *= -1.0;
  }
  const auto labels = all_labels(sys);
  RealMatrix overlaps(static_cast<Eigen::Index>(labels.size()), sys.dim);
  for (size_t r = 0; r < labels.size(); ++r)
    overlaps.row(static_cast<Eigen::Index>(r)) =
        es.vectors.row(sys.index(labels[r].first, labels[r].second)).cwiseAbs();

  DressedSpectrum out;
  out.phi = phi;
  out.energies = std::move(es.values);
  out.states = std::move(es.vectors);
  out.labels = assign_labels(labels, overlaps);
  return out;
}

LabelTracker::LabelTracker(const TwoQubitSystem& sys, double phi_start)
    : sys_(&sys), current_(dressed_spectrum(sys, phi_start)) {}

const DressedSpectrum& LabelTracker::advance(double phi) {
  RealEigen es = eig(sys_->hamiltonian(phi));
  const auto labels = all_labels(*sys_);
  RealMatrix reference(sys_->dim, static_cast<Eigen::Index>(labels.size()));
  for (size_t r = 0; r < labels.size(); ++r)
    reference.col(static_cast<Eigen::Index>(r)) = current_.vector(labels[r].first, labels[r].second);
  const RealMatrix signed_overlap = reference.transpose() * es.vectors;

  DressedSpectrum next;
  next.phi = phi;
  next.labels = assign_labels(labels, signed_overlap.cwiseAbs());
  last_min_overlap_ = 1.0;
  for (size_t r = 0; r < labels.size(); ++r) {
    const int s = next.labels.index.at(labels[r]);
    if (signed_overlap(static_cast<Eigen::Index>(r), s) < 0.0) es.vectors.col(s) *= -1.0;
    last_min_overlap_ = std::min(last_min_overlap_, next.labels.overlap.at(labels[r]));
  }
  next.energies = std::move(es.values);
  next.states = std::move(es.vectors);
  current_ = std::move(next);
  return current_;
}

const DressedSpectrum& LabelTracker::advance_to(double phi, double max_step) {
  if (!(max_step > 0.0)) throw InvalidArgument("tracking step must be positive");
  const double start = current_.phi;
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(phi - start) / max_step)));
  for (int i = 1; i <= steps; ++i) advance(start + (phi - start) * i / steps);
  return current_;
}

DressedSpectrum tracked_spectrum(const TwoQubitSystem& sys, double phi, double max_step) {
  LabelTracker tracker(sys);
  if (phi != kPi) tracker.advance_to(phi, max_step);
  return tracker.current();
}

LevelCrossing find_level_crossing(const TwoQubitSystem& sys, CrossingSide side, double tolerance) {
  if (sys.qubit_b.frequency() >= sys.qubit_a.frequency())
    throw InvalidArgument("the flux-tuned qubit B must be the lower-frequency qubit");
  if (!(tolerance > 0.0)) throw InvalidArgument("crossing tolerance must be positive");

  const double direction = side == CrossingSide::Above ? 1.0 : -1.0;
  const double step = 1e-3 * kPi;
  const int n = 500;  // covers (pi, 3pi/2)

  LabelTracker tracker(sys);
  std::vector<double> gaps{std::abs(tracker.current().energy(1, 0) - tracker.current().energy(0, 1))};
  std::vector<RealMatrix> refs;
  auto pair_refs = [](const DressedSpectrum& s) {
    RealMatrix r(s.states.rows(), 2);
    r.col(0) = s.vector(0, 1);
    r.col(1) = s.vector(1, 0);
    return r;
  };
  refs.push_back(pair_refs(tracker.current()));

  int found = -1;
  for (int i = 1; i <= n; ++i) {
    const auto& s = tracker.advance(kPi + direction * step * i);
    gaps.push_back(std::abs(s.energy(1, 0) - s.energy(0, 1)));
    refs.push_back(pair_refs(s));
    if (i >= 2 && gaps[static_cast<size_t>(i - 1)] <= gaps[static_cast<size_t>(i - 2)] &&
        gaps[static_cast<size_t>(i - 1)] <= gaps[static_cast<size_t>(i)]) {
      found = i - 1;
      break;
    }
  }
  if (found < 1) throw NoCrossingError("no interior minimum of the |01>-|10> gap found");

  const RealMatrix& ref = refs[static_cast<size_t>(found)];
  auto gap_at = [&](double offset) {
    const RealEigen es = eig(sys.hamiltonian(kPi + direction * offset));
    const RealMatrix ov = (ref.transpose() * es.vectors).cwiseAbs();
    Eigen::Index s01 = 0;
    Eigen::Index s10 = 0;
    ov.row(0).maxCoeff(&s01);
    ov.row(1).maxCoeff(&s10);
    if (s01 == s10) {
      // Pick the second best for the weaker row.
      RealVector r1 = ov.row(1).transpose();
      r1(s01) = -1.0;
      r1.maxCoeff(&s10);
    }
    return std::abs(es.values(s10) - es.values(s01));
  };

  double lo = step * (found - 1);
  double hi = step * (found + 1);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = gap_at(x1);
  double f2 = gap_at(x2);
  double best_x = found * step;
  double best_f = gaps[static_cast<size_t>(found)];
  while (hi - lo > tolerance) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = gap_at(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = gap_at(x2);
    }
    if (f1 < best_f) std::tie(best_x, best_f) = std::pair{x1, f1};
    if (f2 < best_f) std::tie(best_x, best_f) = std::pair{x2, f2};
  }
  return {direction * best_x, best_f};
}

double effective_coupling(const TwoQubitSystem& sys) {
  return (sys.j_c * sys.qubit_a.n_elems(0, 1) * sys.qubit_b.n_elems(0, 1)).real();
}

TwoLevelModel two_level_model(const TruncatedQubit& qubit_b, double omega_a, double g, double phi) {
  if (qubit_b.n_levels < 2 || !std::isfinite(omega_a) || !std::isfinite(g) || !std::isfinite(phi))
    throw InvalidArgument("invalid two-level model inputs");
  if (!at_sweet_spot(qubit_b))
    throw InvalidArgument("two-level model needs qubit B matrix elements at the sweet spot");
  const double ej = qubit_b.params.e_j;
  const double cos_diff = (qubit_b.cos_elems(1, 1) - qubit_b.cos_elems(0, 0)).real();

  TwoLevelModel m;
  m.g = g;
  m.omega_phi = qubit_b.frequency() - ej * (1.0 + std::cos(phi)) * cos_diff;
  m.a_phi = -2.0 * ej * std::sin(phi) * qubit_b.sin_elems(0, 1).real();
  m.delta_phi = omega_a - std::hypot(m.omega_phi, m.a_phi);
  m.theta_mix = std::atan2(m.a_phi, m.omega_phi);

  // Reduced Hamiltonian in {|01>, |10>}: -Delta/2 sigma_z + g cos(theta) sigma_x.
  Eigen::Matrix2d h;
  const double x = g * std::cos(m.theta_mix);
  h << -0.5 * m.delta_phi, x, x, 0.5 * m.delta_phi;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h);
  const Eigen::Vector2d ground = es.eigenvectors().col(0);
  m.lambda_amp = std::abs(ground(0)) > 0.0 ? cplx(ground(1) / ground(0), 0.0)
                                           : cplx(std::numeric_limits<double>::infinity(), 0.0);
  return m;
}

TwoLevelModel two_level_model(const TwoQubitSystem& sys, double phi) {
  return two_level_model(sys.qubit_b, sys.qubit_a.frequency(), effective_coupling(sys), phi);
}

double static_zz(const TwoQubitSystem& sys, double phi) {
  const DressedSpectrum s = tracked_spectrum(sys, phi);
  return s.energy(1, 1) - s.energy(1, 0) - s.energy(0, 1) + s.energy(0, 0);
}

SpectrumSweep sweep_spectrum(const TwoQubitSystem& sys, const CircuitParams& qubit_b_params,
                             int osc_dim, const std::vector<double>& phi_over_pi) {
  if (phi_over_pi.empty()) throw InvalidArgument("empty flux range");
  SpectrumSweep out;
  out.phi_over_pi = phi_over_pi;
  out.labels = all_labels(sys);
  out.omega_a.assign(phi_over_pi.size(), sys.qubit_a.frequency());
  out.omega_b.resize(phi_over_pi.size());
  out.levels.resize(phi_over_pi.size());

  const OscillatorRep rep_b = build_oscillator_rep(qubit_b_params, osc_dim);
  std::vector<size_t> order(phi_over_pi.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  // Track outward from the sweet spot in each direction.
  for (int direction : {+1, -1}) {
    std::vector<size_t> side;
    for (size_t i : order)
      if ((direction > 0) == (phi_over_pi[i] >= 1.0)) side.push_back(i);
    std::sort(side.begin(), side.end(), [&](size_t x, size_t y) {
      return direction * phi_over_pi[x] < direction * phi_over_pi[y];
    });
    LabelTracker tracker(sys);
    for (size_t i : side) {
      const double phi = phi_over_pi[i] * kPi;
      const auto& s = tracker.advance_to(phi);
      const RealVector e = spectrum_at_flux(rep_b, qubit_b_params, phi);
      out.omega_b[i] = e(1) - e(0);
      auto& row = out.levels[i];
      row.reserve(out.labels.size());
      for (const auto& lab : out.labels) row.push_back(s.energy(lab.first, lab.second));
    }
  }
  return out;
}

void write_spectrum_csv(std::ostream& os, const SpectrumSweep& sweep) {
  os << "phi_over_pi,omega_a_ghz,omega_b_ghz";
  for (const auto& lab : sweep.labels) os << ",E" << lab.first << '_' << lab.second << "_ghz";
  os << '\n' << std::setprecision(17);
  for (size_t i = 0; i < sweep.phi_over_pi.size(); ++i) {
    os << sweep.phi_over_pi[i] << ',' << sweep.omega_a[i] << ',' << sweep.omega_b[i];
    for (double e : sweep.levels[i]) os << ',' << e;
    os << '\n';
  }
}

}  // namespace fluxgate
