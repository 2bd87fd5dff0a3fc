#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fluxgate/evolution.hpp"
#include "fluxgate/gate_metrics.hpp"
#include "fluxgate/optimizer.hpp"

namespace fluxgate {

// All numeric text output uses 17 significant digits so values re-parse exactly.
inline constexpr int kCsvPrecision = 17;

nlohmann::json to_json(const FidelityReport& r);
FidelityReport fidelity_report_from_json(const nlohmann::json& j);

// {"rows": r, "cols": c, "data": [[re, im], ...]} in row-major order.
nlohmann::json to_json(const ComplexMatrix& m);
ComplexMatrix complex_matrix_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PulseParams& p);
PulseParams pulse_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ScanPoint& p);
ScanPoint scan_point_from_json(const nlohmann::json& j);

// Columns: t_r_ns, t_p_ns, a_env, delta_phi_rad, error, duration_ns, zeta_rad, leakage, converged.
void write_scan_csv(std::ostream& os, const ScanResult& r);
std::vector<ScanPoint> read_scan_csv(std::istream& is);

// Columns: t_ns, pop01, pop10, bloch_x, bloch_y, bloch_z, residual.
void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryPoint>& points);
std::vector<TrajectoryPoint> read_trajectory_csv(std::istream& is);

// Columns: offset_rad or offset_ns, unitary_error, then error_t1_<T1>us per relaxation time.
void write_noise_csv(std::ostream& os, const NoiseCurves& c);

// Writes text atomically (temporary file + rename); throws IoError naming the path.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// Exclusive lock on an output directory, released on destruction.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace fluxgate
