#include "fluxgate/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

#include "fluxgate/errors.hpp"

namespace fluxgate {

using nlohmann::json;

namespace {

// JSON has no NaN/inf; non-finite values are written as null and read back as NaN.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s) {
  // strtod accepts "nan" and "inf", which the writers may produce.
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw IoError("malformed number '" + s + "' in CSV");
  return v;
}

template <class Row>
std::vector<Row> read_rows(std::istream& is, const std::string& expected_header, size_t columns,
                           Row (*make)(const std::vector<double>&)) {
  std::string line;
  if (!std::getline(is, line) || line != expected_header)
    throw IoError("unexpected CSV header: '" + line + "'");
  std::vector<Row> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != columns) throw IoError("wrong number of CSV columns in '" + line + "'");
    std::vector<double> v;
    for (const auto& c : cells) v.push_back(parse_double(c));
    rows.push_back(make(v));
  }
  return rows;
}

const char* kScanHeader =
    "t_r_ns,t_p_ns,a_env,delta_phi_rad,error,duration_ns,zeta_rad,leakage,converged";
const char* kTrajectoryHeader = "t_ns,pop01,pop10,bloch_x,bloch_y,bloch_z,residual";

}  // namespace

json to_json(const FidelityReport& r) {
  return {{"coherent_f", number(r.coherent_f)},
          {"f_p", r.f_p ? number(*r.f_p) : json(nullptr)},
          {"f_g", r.f_g ? number(*r.f_g) : json(nullptr)},
          {"leakage_total", number(r.leakage_total)},
          {"entangling_power", number(r.entangling_power)},
          {"zeta_rad", number(r.zeta)}};
}

FidelityReport fidelity_report_from_json(const json& j) {
  FidelityReport r;
  r.coherent_f = number(j.at("coherent_f"));
  if (!j.at("f_p").is_null()) r.f_p = j.at("f_p").get<double>();
  if (!j.at("f_g").is_null()) r.f_g = j.at("f_g").get<double>();
  r.leakage_total = number(j.at("leakage_total"));
  r.entangling_power = number(j.at("entangling_power"));
  r.zeta = number(j.at("zeta_rad"));
  return r;
}

json to_json(const ComplexMatrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back({m(i, k).real(), m(i, k).imag()});
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

ComplexMatrix complex_matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<size_t>(rows * cols))
    throw IoError("complex matrix JSON has inconsistent size");
  ComplexMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) {
      const json& e = data.at(static_cast<size_t>(i * cols + k));
      m(i, k) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
    }
  return m;
}

json to_json(const PulseParams& p) {
  return {{"t_r_ns", p.t_r}, {"t_p_ns", p.t_p}, {"a_env", p.a_env}, {"delta_phi_rad", p.delta_phi}};
}

PulseParams pulse_from_json(const json& j) {
  return {j.at("t_r_ns").get<double>(), j.at("t_p_ns").get<double>(), j.at("a_env").get<double>(),
          j.at("delta_phi_rad").get<double>()};
}

json to_json(const ScanPoint& p) {
  return {{"pulse", to_json(p.pulse)},         {"error", number(p.error)},
          {"duration_ns", number(p.duration)}, {"zeta_rad", number(p.zeta)},
          {"leakage", number(p.leakage)},      {"converged", p.converged}};
}

ScanPoint scan_point_from_json(const json& j) {
  ScanPoint p;
  p.pulse = pulse_from_json(j.at("pulse"));
  p.error = number(j.at("error"));
  p.duration = number(j.at("duration_ns"));
  p.zeta = number(j.at("zeta_rad"));
  p.leakage = number(j.at("leakage"));
  p.converged = j.at("converged").get<bool>();
  return p;
}

void write_scan_csv(std::ostream& os, const ScanResult& r) {
  os << kScanHeader << '\n' << std::setprecision(kCsvPrecision);
  for (const auto& p : r.points)
    os << p.pulse.t_r << ',' << p.pulse.t_p << ',' << p.pulse.a_env << ',' << p.pulse.delta_phi << ','
       << p.error << ',' << p.duration << ',' << p.zeta << ',' << p.leakage << ','
       << (p.converged ? 1 : 0) << '\n';
}

std::vector<ScanPoint> read_scan_csv(std::istream& is) {
  return read_rows<ScanPoint>(is, kScanHeader, 9, [](const std::vector<double>& v) {
    return ScanPoint{{v[0], v[1], v[2], v[3]}, v[4], v[5], v[6], v[7], v[8] != 0.0};
  });
}

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryPoint>& points) {
  os << kTrajectoryHeader << '\n' << std::setprecision(kCsvPrecision);
  for (const auto& p : points)
    os << p.t << ',' << p.pop_01 << ',' << p.pop_10 << ',' << p.bloch_x << ',' << p.bloch_y << ','
       << p.bloch_z << ',' << p.residual << '\n';
}

std::vector<TrajectoryPoint> read_trajectory_csv(std::istream& is) {
  return read_rows<TrajectoryPoint>(is, kTrajectoryHeader, 7, [](const std::vector<double>& v) {
    return TrajectoryPoint{v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
  });
}

void write_noise_csv(std::ostream& os, const NoiseCurves& c) {
  os << (c.kind == NoiseLineKind::VaryDeltaPhi ? "offset_rad" : "offset_ns") << ",unitary_error";
  for (double t1 : c.t1_us) os << ",error_t1_" << t1 << "us";
  os << '\n' << std::setprecision(kCsvPrecision);
  for (size_t i = 0; i < c.offsets.size(); ++i) {
    os << c.offsets[i] << ',' << c.unitary_error[i];
    for (const auto& curve : c.relaxed_error) os << ',' << curve[i];
    os << '\n';
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw IoError("cannot write " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path.string() + ": " + ec.message());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DirectoryLock::DirectoryLock(const std::filesystem::path& dir) : path_(dir / ".fluxgate.lock") {
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0)
    throw IoError("output directory " + dir.string() + " is in use (lock file " + path_.string() +
                  " exists)");
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

}  // namespace fluxgate
