#include "fluxgate/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fluxgate/errors.hpp"

namespace fluxgate {

using nlohmann::json;

std::vector<double> LinearRange::values() const {
  if (points < 1 || !std::isfinite(start) || !std::isfinite(stop) || stop < start)
    throw InvalidArgument("empty range");
  if (points == 1) return {start};
  std::vector<double> v(static_cast<size_t>(points));
  for (int i = 0; i < points; ++i) v[static_cast<size_t>(i)] = start + (stop - start) * i / (points - 1);
  return v;
}

namespace {

// Reads an object while recording which keys were used; anything left over is an error.
class StrictObject {
 public:
  StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where() + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError("unknown key " + where() + "." + item.key());
  }

  std::string sub(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_qubit(const json& j, const std::string& path, CircuitParams& q) {
  StrictObject o(j, path);
  o.get("e_c_ghz", q.e_c);
  o.get("e_l_ghz", q.e_l);
  o.get("e_j_ghz", q.e_j);
  o.finish();
}

json write_qubit(const CircuitParams& q) {
  return {{"e_c_ghz", q.e_c}, {"e_l_ghz", q.e_l}, {"e_j_ghz", q.e_j}};
}

void read_range(const json& j, const std::string& path, LinearRange& r) {
  StrictObject o(j, path);
  o.get("start", r.start);
  o.get("stop", r.stop);
  o.get("points", r.points);
  o.finish();
}

json write_range(const LinearRange& r) {
  return {{"start", r.start}, {"stop", r.stop}, {"points", r.points}};
}

void read_bound(const json& j, const std::string& path, BoundConfig& b) {
  StrictObject o(j, path);
  if (j.contains("fixed")) {
    b.fixed = true;
    o.get("fixed", b.value);
  } else {
    b.fixed = false;
    o.get("lower", b.lower);
    o.get("upper", b.upper);
  }
  o.finish();
}

json write_bound(const BoundConfig& b) {
  if (b.fixed) return {{"fixed", b.value}};
  return {{"lower", b.lower}, {"upper", b.upper}};
}

ParameterRange to_range(const BoundConfig& b, double scale) {
  if (b.fixed) return ParameterRange::pinned(b.value * scale);
  return ParameterRange::free(b.lower * scale, b.upper * scale);
}

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig c;
  StrictObject root(j, "");
  if (const json* q = root.child("qubit_a")) read_qubit(*q, "qubit_a", c.qubit_a);
  if (const json* q = root.child("qubit_b")) read_qubit(*q, "qubit_b", c.qubit_b);
  root.get("j_c_ghz", c.j_c_ghz);
  if (const json* b = root.child("basis")) {
    StrictObject o(*b, "basis");
    o.get("osc_dim", c.osc_dim);
    o.get("n_levels", c.n_levels);
    o.finish();
  }
  if (const json* p = root.child("pulse")) {
    StrictObject o(*p, "pulse");
    o.get("t_r_ns", c.t_r_ns);
    o.get("t_p_ns", c.t_p_ns);
    o.get("envelope_a", c.a_env);
    o.get("delta_phi_over_pi", c.delta_phi_over_pi);
    o.finish();
  }
  if (const json* p = root.child("integrator")) {
    StrictObject o(*p, "integrator");
    o.get("method", c.method);
    o.get("max_step_ns", c.max_step_ns);
    o.get("rel_tol", c.rel_tol);
    o.get("abs_tol", c.abs_tol);
    o.get("convergence_check", c.convergence_check);
    o.finish();
  }
  if (const json* p = root.child("optimizer")) {
    StrictObject o(*p, "optimizer");
    o.get("objective", c.objective);
    o.get("restarts", c.restarts);
    o.get("candidates", c.candidates);
    o.get("max_evals", c.max_evals);
    o.get("f_tol", c.f_tol);
    o.get("x_tol", c.x_tol);
    o.get("error_floor", c.error_floor);
    o.get("search_max_step_ns", c.search_max_step_ns);
    if (const json* b = o.child("t_r_ns")) read_bound(*b, "optimizer.t_r_ns", c.bound_t_r_ns);
    if (const json* b = o.child("t_p_ns")) read_bound(*b, "optimizer.t_p_ns", c.bound_t_p_ns);
    if (const json* b = o.child("envelope_a")) read_bound(*b, "optimizer.envelope_a", c.bound_a_env);
    if (const json* b = o.child("delta_phi_over_pi"))
      read_bound(*b, "optimizer.delta_phi_over_pi", c.bound_delta_phi_over_pi);
    o.finish();
  }
  if (const json* p = root.child("spectrum")) {
    StrictObject o(*p, "spectrum");
    if (const json* r = o.child("phi_over_pi")) read_range(*r, "spectrum.phi_over_pi", c.spectrum_phi_over_pi);
    o.finish();
  }
  if (const json* p = root.child("scan")) {
    StrictObject o(*p, "scan");
    if (const json* r = o.child("delta_phi_over_pi"))
      read_range(*r, "scan.delta_phi_over_pi", c.scan_delta_phi_over_pi);
    o.finish();
  }
  if (const json* p = root.child("scan2d")) {
    StrictObject o(*p, "scan2d");
    if (const json* r = o.child("delta_phi_over_pi"))
      read_range(*r, "scan2d.delta_phi_over_pi", c.scan2d_delta_phi_over_pi);
    if (const json* r = o.child("t_p_ns")) read_range(*r, "scan2d.t_p_ns", c.scan2d_t_p_ns);
    o.finish();
  }
  if (const json* p = root.child("noise")) {
    StrictObject o(*p, "noise");
    o.get("line", c.noise_line);
    if (const json* r = o.child("offsets_over_pi"))
      read_range(*r, "noise.offsets_over_pi", c.noise_offsets_over_pi);
    if (const json* r = o.child("offsets_ns")) read_range(*r, "noise.offsets_ns", c.noise_offsets_ns);
    o.finish();
  }
  if (const json* p = root.child("trajectory")) {
    StrictObject o(*p, "trajectory");
    o.get("initial_state", c.trajectory_initial);
    o.get("dt_out_ns", c.trajectory_dt_out_ns);
    o.finish();
  }
  root.get("t1_us", c.t1_us);
  root.get("dissipator", c.dissipator);
  root.get("output_dir", c.output_dir);
  root.get("seed", c.seed);
  root.get("threads", c.threads);
  root.finish();
  c.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["qubit_a"] = write_qubit(c.qubit_a);
  j["qubit_b"] = write_qubit(c.qubit_b);
  j["j_c_ghz"] = c.j_c_ghz;
  j["basis"] = {{"osc_dim", c.osc_dim}, {"n_levels", c.n_levels}};
  j["pulse"] = {{"t_r_ns", c.t_r_ns}, {"t_p_ns", c.t_p_ns}, {"envelope_a", c.a_env},
                {"delta_phi_over_pi", c.delta_phi_over_pi}};
  j["integrator"] = {{"method", c.method}, {"max_step_ns", c.max_step_ns}, {"rel_tol", c.rel_tol},
                     {"abs_tol", c.abs_tol}, {"convergence_check", c.convergence_check}};
  j["optimizer"] = {{"objective", c.objective},
                    {"restarts", c.restarts},
                    {"candidates", c.candidates},
                    {"max_evals", c.max_evals},
                    {"f_tol", c.f_tol},
                    {"x_tol", c.x_tol},
                    {"error_floor", c.error_floor},
                    {"search_max_step_ns", c.search_max_step_ns},
                    {"t_r_ns", write_bound(c.bound_t_r_ns)},
                    {"t_p_ns", write_bound(c.bound_t_p_ns)},
                    {"envelope_a", write_bound(c.bound_a_env)},
                    {"delta_phi_over_pi", write_bound(c.bound_delta_phi_over_pi)}};
  j["spectrum"] = {{"phi_over_pi", write_range(c.spectrum_phi_over_pi)}};
  j["scan"] = {{"delta_phi_over_pi", write_range(c.scan_delta_phi_over_pi)}};
  j["scan2d"] = {{"delta_phi_over_pi", write_range(c.scan2d_delta_phi_over_pi)},
                 {"t_p_ns", write_range(c.scan2d_t_p_ns)}};
  j["noise"] = {{"line", c.noise_line},
                {"offsets_over_pi", write_range(c.noise_offsets_over_pi)},
                {"offsets_ns", write_range(c.noise_offsets_ns)}};
  j["trajectory"] = {{"initial_state", c.trajectory_initial}, {"dt_out_ns", c.trajectory_dt_out_ns}};
  j["t1_us"] = c.t1_us;
  j["dissipator"] = c.dissipator;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

void RunConfig::validate() const {
  // Every conversion below validates its module-level type.
  try {
    qubit_a.validate();
    qubit_b.validate();
    if (!std::isfinite(j_c_ghz)) throw InvalidArgument("j_c_ghz must be finite");
    if (osc_dim < 10) throw InvalidArgument("basis.osc_dim must be >= 10");
    if (n_levels < 2 || 3 * n_levels > osc_dim) throw InvalidArgument("basis.n_levels out of range");
    pulse().validate();
    integrator().validate(pulse());
    optimization().validate();
    convention();
    trajectory_label();
    if (!(trajectory_dt_out_ns > 0.0)) throw InvalidArgument("trajectory.dt_out_ns must be > 0");
    noise_line_kind_from_string(noise_line);
    for (double t1 : t1_us)
      if (!(t1 > 0.0)) throw InvalidArgument("t1_us entries must be > 0");
    if (threads < 1) throw InvalidArgument("threads must be >= 1");
    if (output_dir.empty()) throw InvalidArgument("output_dir must not be empty");
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

SystemConfig RunConfig::system() const { return {qubit_a, qubit_b, j_c_ghz, osc_dim, n_levels}; }

PulseParams RunConfig::pulse() const { return {t_r_ns, t_p_ns, a_env, delta_phi_over_pi * kPi}; }

IntegratorOptions RunConfig::integrator() const {
  return {integrator_method_from_string(method), max_step_ns, rel_tol, abs_tol, convergence_check};
}

OptimizationSpec RunConfig::optimization() const {
  OptimizationSpec s;
  s.t_r = to_range(bound_t_r_ns, 1.0);
  s.t_p = to_range(bound_t_p_ns, 1.0);
  s.a_env = to_range(bound_a_env, 1.0);
  s.delta_phi = to_range(bound_delta_phi_over_pi, kPi);
  s.objective = objective_from_string(objective);
  if (s.objective == Objective::GateErrorLindblad) {
    if (t1_us.empty()) throw InvalidArgument("objective gate_error_lindblad needs t1_us");
    s.relaxation = Relaxation::both(t1_us.front(), convention());
  }
  s.restarts = restarts;
  s.candidates = candidates;
  s.seed = seed;
  s.error_floor = error_floor;
  s.simplex = {max_evals, f_tol, x_tol, 0.1};
  s.search_integrator = integrator();
  s.search_integrator.max_step = search_max_step_ns;
  s.search_integrator.convergence_check = false;
  s.final_integrator = integrator();
  s.threads = threads;
  return s;
}

DissipatorConvention RunConfig::convention() const {
  return dissipator_convention_from_string(dissipator);
}

ProductLabel RunConfig::trajectory_label() const {
  static const std::vector<std::string> names{"00", "01", "10", "11"};
  for (int k = 0; k < 4; ++k)
    if (trajectory_initial == names[static_cast<size_t>(k)]) return {k / 2, k % 2};
  throw InvalidArgument("trajectory.initial_state must be one of 00, 01, 10, 11");
}

}  // namespace fluxgate
