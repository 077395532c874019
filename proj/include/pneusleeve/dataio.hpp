#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pneusleeve/errors.hpp"
#include "pneusleeve/pneumatics.hpp"
#include "pneusleeve/signals.hpp"
#include "pneusleeve/sleeve.hpp"

// CSV schemas and parsing/serialization. All files are UTF-8,
// comma-separated, one header line, units embedded in the column names.
// Values are written in the shortest form that round-trips bit-exactly
// (std::to_chars), so serialize(parse(file)) reproduces canonical files.

namespace pneusleeve::dataio {

// ---------------------------------------------------------------------------
// Canonical value formatting

inline std::string format_value(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline double parse_value(std::string_view text, std::size_t line) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ParseError("bad numeric value '" + std::string(text) + "'", line);
  }
  return v;
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline void expect_header(const std::vector<std::string>& lines,
                          std::string_view header,
                          const std::filesystem::path& path) {
  if (lines.empty() || lines.front() != header) {
    throw ParseError("expected header '" + std::string(header) + "' in " +
                         path.string(),
                     1);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Characterization data (torque platform)

inline constexpr std::string_view kCharacterizationHeader =
    "aa_angle_deg,bb_angle_deg,pressure_kpa,torque_nm";
inline constexpr std::string_view kRawPlatformHeader =
    "aa_angle_deg,bb_angle_deg,pressure_kpa,f1_n,f2_n,f3_n,f4_n";

struct CharacterizationRow {
  double aa_angle_deg = 0.0;
  double bb_angle_deg = 0.0;
  double pressure_kpa = 0.0;
  double torque_nm = 0.0;
};

struct RawPlatformRow {
  double aa_angle_deg = 0.0;
  double bb_angle_deg = 0.0;
  double pressure_kpa = 0.0;
  std::array<double, 4> forces_n{};
};

namespace detail {

inline void validate_platform_ranges(double aa, double bb, double p,
                                     std::size_t line) {
  if (!(aa >= 0.0 && aa <= kAaAngleMaxDeg)) {
    throw ValidationError("A-A' angle outside [0, 270] deg", line);
  }
  if (!(bb >= 0.0 && bb <= kBbAngleMaxDeg)) {
    throw ValidationError("B-B' angle outside [0, 45] deg", line);
  }
  if (!(p >= 0.0 && p <= kMaxPressureKpa)) {
    throw ValidationError("pressure outside [0, 150] kPa", line);
  }
}

}  // namespace detail

inline std::vector<CharacterizationRow> parse_characterization(
    const std::filesystem::path& path) {
  const auto lines = detail::read_lines(path);
  detail::expect_header(lines, kCharacterizationHeader, path);
  std::vector<CharacterizationRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = detail::split_csv(lines[i]);
    if (fields.size() != 4) {
      throw ParseError("expected 4 fields", i + 1);
    }
    CharacterizationRow row;
    row.aa_angle_deg = parse_value(fields[0], i + 1);
    row.bb_angle_deg = parse_value(fields[1], i + 1);
    row.pressure_kpa = parse_value(fields[2], i + 1);
    row.torque_nm = parse_value(fields[3], i + 1);
    if (!std::isfinite(row.torque_nm)) {
      throw ValidationError("non-finite torque", i + 1);
    }
    detail::validate_platform_ranges(row.aa_angle_deg, row.bb_angle_deg,
                                     row.pressure_kpa, i + 1);
    rows.push_back(row);
  }
  return rows;
}

inline std::string serialize_characterization(
    const std::vector<CharacterizationRow>& rows) {
  std::string out{kCharacterizationHeader};
  out.push_back('\n');
  for (const auto& r : rows) {
    out += format_value(r.aa_angle_deg) + "," + format_value(r.bb_angle_deg) +
           "," + format_value(r.pressure_kpa) + "," +
           format_value(r.torque_nm) + "\n";
  }
  return out;
}

inline std::vector<RawPlatformRow> parse_raw_platform(
    const std::filesystem::path& path) {
  const auto lines = detail::read_lines(path);
  detail::expect_header(lines, kRawPlatformHeader, path);
  std::vector<RawPlatformRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = detail::split_csv(lines[i]);
    if (fields.size() != 7) {
      throw ParseError("expected 7 fields", i + 1);
    }
    RawPlatformRow row;
    row.aa_angle_deg = parse_value(fields[0], i + 1);
    row.bb_angle_deg = parse_value(fields[1], i + 1);
    row.pressure_kpa = parse_value(fields[2], i + 1);
    for (int k = 0; k < 4; ++k) {
      row.forces_n[k] = parse_value(fields[3 + k], i + 1);
      if (!std::isfinite(row.forces_n[k])) {
        throw ValidationError("non-finite force", i + 1);
      }
    }
    detail::validate_platform_ranges(row.aa_angle_deg, row.bb_angle_deg,
                                     row.pressure_kpa, i + 1);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Load-cell geometry and torque conversion

enum class PlatformAxis { aa, bb };

struct LoadCell {
  double lever_arm_m = 0.0;
  PlatformAxis axis = PlatformAxis::aa;
  double sign = 1.0;
};

// Two cells per axis; lever arms measured from the center of rotation.
struct LeverGeometry {
  std::array<LoadCell, 4> cells;

  void validate() const {
    int aa = 0, bb = 0;
    for (const auto& c : cells) {
      if (!(c.lever_arm_m > 0.0)) {
        throw ConfigError("lever arms must be positive");
      }
      if (c.sign != 1.0 && c.sign != -1.0) {
        throw ConfigError("load-cell sign must be +1 or -1");
      }
      (c.axis == PlatformAxis::aa ? aa : bb)++;
    }
    if (aa != 2 || bb != 2) {
      throw ConfigError("geometry needs exactly two cells per axis");
    }
  }
};

inline constexpr std::string_view kGeometryHeader =
    "cell,axis,lever_arm_m,sign";

// Geometry file rows: f1..f4 with axis AA or BB. The platform's actual
// lever arms are not published, so a geometry file is mandatory for
// raw-force ingestion.
inline LeverGeometry parse_lever_geometry(const std::filesystem::path& path) {
  const auto lines = detail::read_lines(path);
  detail::expect_header(lines, kGeometryHeader, path);
  LeverGeometry geom;
  std::array<bool, 4> seen{};
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = detail::split_csv(lines[i]);
    if (fields.size() != 4) throw ParseError("expected 4 fields", i + 1);
    if (fields[0].size() != 2 || fields[0][0] != 'f' || fields[0][1] < '1' ||
        fields[0][1] > '4') {
      throw ParseError("cell must be f1..f4", i + 1);
    }
    const int idx = fields[0][1] - '1';
    LoadCell cell;
    if (fields[1] == "AA") {
      cell.axis = PlatformAxis::aa;
    } else if (fields[1] == "BB") {
      cell.axis = PlatformAxis::bb;
    } else {
      throw ParseError("axis must be AA or BB", i + 1);
    }
    cell.lever_arm_m = parse_value(fields[2], i + 1);
    cell.sign = parse_value(fields[3], i + 1);
    geom.cells[idx] = cell;
    seen[idx] = true;
  }
  for (bool s : seen) {
    if (!s) throw ConfigError("geometry file must define f1..f4");
  }
  geom.validate();
  return geom;
}

// Signed force-times-arm sum per axis.
inline std::pair<double, double> loadcell_to_torque(
    const std::array<double, 4>& forces_n, const LeverGeometry& geom) {
  geom.validate();
  for (double f : forces_n) {
    if (!std::isfinite(f)) throw DomainError("forces must be finite");
  }
  double aa = 0.0, bb = 0.0;
  for (int i = 0; i < 4; ++i) {
    const auto& c = geom.cells[i];
    const double t = c.sign * forces_n[i] * c.lever_arm_m;
    (c.axis == PlatformAxis::aa ? aa : bb) += t;
  }
  return {aa, bb};
}

// ---------------------------------------------------------------------------
// Waveforms (two-column)

inline constexpr std::string_view kWaveformHeader = "time_s,value";

inline std::string serialize_waveform(const Waveform& w) {
  std::string out{kWaveformHeader};
  out.push_back('\n');
  for (std::size_t i = 0; i < w.size(); ++i) {
    out += format_value(w.time(i)) + "," + format_value(w.values[i]) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trial data (EMG / IMU / MVC / manifest)

inline constexpr std::string_view kImuHeader = "time_s,elevation_deg";
inline constexpr std::string_view kMvcHeader = "muscle,mvc_v";
inline constexpr std::string_view kManifestHeader =
    "movement,condition,emg_csv,imu_csv";

namespace detail {

inline double infer_rate(const std::vector<double>& times,
                         const std::filesystem::path& path) {
  if (times.size() < 2) {
    throw ParseError("need at least 2 samples to infer a rate in " +
                     path.string());
  }
  const double dt = times[1] - times[0];
  if (!(dt > 0.0)) throw ValidationError("non-increasing time column", 2);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double step = times[i] - times[i - 1];
    if (std::abs(step - dt) > 1e-6 * std::max(1.0, dt)) {
      throw ValidationError("non-uniform sampling", i + 1);
    }
  }
  return 1.0 / dt;
}

}  // namespace detail

// EMG CSV: time_s then one column per muscle label.
inline signals::EmgTrace parse_emg(const std::filesystem::path& path,
                                   double expected_rate_hz = 0.0) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) throw ParseError("empty file " + path.string(), 1);
  const auto header = detail::split_csv(lines.front());
  if (header.empty() || header.front() != "time_s") {
    throw ParseError("EMG header must start with time_s", 1);
  }
  signals::EmgTrace trace;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (!signals::is_muscle_label(header[c])) {
      throw ParseError("unknown muscle column '" + header[c] + "'", 1);
    }
    trace.labels.push_back(header[c]);
  }
  if (trace.labels.empty()) {
    throw ParseError("EMG file has no muscle columns", 1);
  }
  trace.channels.assign(trace.labels.size(), {});
  std::vector<double> times;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = detail::split_csv(lines[i]);
    if (fields.size() != header.size()) {
      throw ParseError("wrong field count", i + 1);
    }
    times.push_back(parse_value(fields[0], i + 1));
    for (std::size_t c = 1; c < fields.size(); ++c) {
      trace.channels[c - 1].push_back(parse_value(fields[c], i + 1));
    }
  }
  trace.sample_rate_hz = detail::infer_rate(times, path);
  if (expected_rate_hz > 0.0 &&
      std::abs(trace.sample_rate_hz - expected_rate_hz) >
          0.005 * expected_rate_hz) {
    throw ConfigError("EMG rate mismatch: file has " +
                      format_value(trace.sample_rate_hz) + " Hz, expected " +
                      format_value(expected_rate_hz));
  }
  trace.validate();
  return trace;
}

inline signals::ImuTrace parse_imu(const std::filesystem::path& path,
                                   double expected_rate_hz = 0.0) {
  const auto lines = detail::read_lines(path);
  detail::expect_header(lines, kImuHeader, path);
  signals::ImuTrace trace;
  std::vector<double> times;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = detail::split_csv(lines[i]);
    if (fields.size() != 2) throw ParseError("expected 2 fields", i + 1);
    times.push_back(parse_value(fields[0], i + 1));
    trace.elevation_deg.push_back(parse_value(fields[1], i + 1));
  }
  trace.sample_rate_hz = detail::infer_rate(times, path);
  if (expected_rate_hz > 0.0 &&
      std::abs(trace.sample_rate_hz - expected_rate_hz) >
          0.005 * expected_rate_hz) {
    throw ConfigError("IMU rate mismatch: file has " +
                      format_value(trace.sample_rate_hz) + " Hz, expected " +
                      format_value(expected_rate_hz));
  }
  return trace;
}

inline signals::MvcTable parse_mvc(const std::filesystem::path& path) {
  const auto lines = detail::read_lines(path);
  detail::expect_header(lines, kMvcHeader, path);
  signals::MvcTable mvc;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = detail::split_csv(lines[i]);
    if (fields.size() != 2) throw ParseError("expected 2 fields", i + 1);
    if (!signals::is_muscle_label(fields[0])) {
      throw ValidationError("unknown muscle '" + fields[0] + "'", i + 1);
    }
    const double v = parse_value(fields[1], i + 1);
    if (!(v > 0.0)) throw ValidationError("MVC must be positive", i + 1);
    mvc.mvc_v[fields[0]] = v;
  }
  return mvc;
}

struct TrialRates {
  double emg_hz = signals::kEmgRateHz;
  double imu_hz = signals::kImuRateHz;
};

// Builds one trial from its file pair, checking declared rates.
inline signals::TrialSet parse_trial(const std::filesystem::path& emg_path,
                                     const std::filesystem::path& imu_path,
                                     signals::Movement movement,
                                     signals::Condition condition,
                                     const TrialRates& rates = {}) {
  signals::TrialSet trial;
  trial.movement = movement;
  trial.condition = condition;
  trial.repetitions.push_back({parse_emg(emg_path, rates.emg_hz),
                               parse_imu(imu_path, rates.imu_hz)});
  return trial;
}

// Manifest rows point at one EMG/IMU file pair per repetition; rows sharing
// (movement, condition) accumulate repetitions. Paths are relative to the
// manifest's directory.
inline std::vector<signals::TrialSet> parse_trials(
    const std::filesystem::path& manifest_path, const TrialRates& rates = {}) {
  const auto lines = detail::read_lines(manifest_path);
  detail::expect_header(lines, kManifestHeader, manifest_path);
  const auto base = manifest_path.parent_path();
  std::vector<signals::TrialSet> trials;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = detail::split_csv(lines[i]);
    if (fields.size() != 4) throw ParseError("expected 4 fields", i + 1);
    const auto movement = signals::movement_from_string(fields[0]);
    const auto condition = signals::condition_from_string(fields[1]);
    const auto emg = parse_emg(base / fields[2], rates.emg_hz);
    const auto imu = parse_imu(base / fields[3], rates.imu_hz);
    auto it = std::find_if(trials.begin(), trials.end(), [&](const auto& t) {
      return t.movement == movement && t.condition == condition;
    });
    if (it == trials.end()) {
      signals::TrialSet t;
      t.movement = movement;
      t.condition = condition;
      trials.push_back(std::move(t));
      it = trials.end() - 1;
    }
    it->repetitions.push_back({std::move(emg), std::move(imu)});
  }
  if (trials.empty()) {
    throw IncompleteDataError("manifest lists no trials");
  }
  return trials;
}

// ---------------------------------------------------------------------------
// Result writers

inline constexpr std::string_view kTrajectoryHeader =
    "time_s,aoe_deg,poe_deg,p1_kpa,p2_kpa,p3_kpa,p4_kpa";
inline constexpr std::string_view kWorkspaceHeader =
    "aoe_deg,poe_deg,feasible,fraction";
inline constexpr std::string_view kReportHeader =
    "movement,target_muscle,relative_reduction_pct";

inline std::string serialize_trajectory(
    const std::vector<TrajectoryPoint>& trajectory) {
  std::string out{kTrajectoryHeader};
  out.push_back('\n');
  for (const auto& pt : trajectory) {
    out += format_value(pt.t_s) + "," + format_value(pt.pose.aoe_deg) + "," +
           format_value(pt.pose.poe_deg);
    for (double p : pt.pressures.kpa) out += "," + format_value(p);
    out.push_back('\n');
  }
  return out;
}

inline std::string serialize_workspace(
    const std::vector<WorkspaceCell>& cells) {
  std::string out{kWorkspaceHeader};
  out.push_back('\n');
  for (const auto& c : cells) {
    out += format_value(c.aoe_deg) + "," + format_value(c.poe_deg) + "," +
           (c.feasible_hold ? "1" : "0") + ",";
    out += std::isinf(c.max_gravity_fraction)
               ? "inf"
               : format_value(c.max_gravity_fraction);
    out.push_back('\n');
  }
  return out;
}

inline std::string serialize_report(
    const std::vector<signals::ReportRow>& rows) {
  std::string out{kReportHeader};
  out.push_back('\n');
  for (const auto& r : rows) {
    std::ostringstream pct;
    pct.setf(std::ios::fixed);
    pct.precision(2);
    pct << r.relative_reduction_pct;
    out += signals::to_string(r.movement) + "," + r.target + "," + pct.str() +
           "\n";
  }
  return out;
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << content;
}

}  // namespace pneusleeve::dataio
