#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pneusleeve/errors.hpp"
#include "pneusleeve/iir.hpp"

// EMG/IMU processing pipeline for the assistance evaluation: rectification,
// 20 Hz IIR low-pass (Chebyshev II, 80 dB stopband), MVC normalization,
// IMU-driven loading/unloading segmentation, repetition averaging on
// time-normalized segments, RMS envelopes, and the relative-reduction table.
//
// Pipeline order is fixed: rectify -> lowpass -> normalize -> segment ->
// resample -> average -> rms_envelope -> reduce.

namespace pneusleeve::signals {

inline constexpr double kEmgRateHz = 2000.0;
inline constexpr double kImuRateHz = 100.0;
inline constexpr int kRmsWindowSamples = 500;
inline constexpr double kLowpassPassbandHz = 20.0;
inline constexpr double kLowpassStopbandHz = 40.0;
inline constexpr double kLowpassStopbandDb = 80.0;
inline constexpr double kLowpassPassRippleDb = 1.0;
inline constexpr double kMotionRateThresholdDegPerS = 5.0;

inline const std::array<std::string_view, 5>& muscle_labels() {
  static const std::array<std::string_view, 5> kLabels = {
      "anterior_deltoid", "lateral_deltoid", "posterior_deltoid",
      "pectoralis_major", "infraspinatus"};
  return kLabels;
}

inline bool is_muscle_label(std::string_view label) {
  const auto& all = muscle_labels();
  return std::find(all.begin(), all.end(), label) != all.end();
}

struct EmgTrace {
  double sample_rate_hz = kEmgRateHz;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> channels;

  void validate() const {
    if (labels.size() != channels.size()) {
      throw ConfigError("EMG labels and channels disagree");
    }
    for (const auto& l : labels) {
      if (!is_muscle_label(l)) throw ConfigError("unknown muscle label: " + l);
    }
    for (const auto& ch : channels) {
      if (ch.size() != channels.front().size()) {
        throw ConfigError("EMG channels have unequal lengths");
      }
      for (double v : ch) {
        if (!std::isfinite(v)) throw ConfigError("non-finite EMG sample");
      }
    }
  }

  const std::vector<double>& channel(std::string_view label) const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == label) return channels[i];
    }
    throw ConfigError("missing EMG channel: " + std::string(label));
  }
};

struct ImuTrace {
  double sample_rate_hz = kImuRateHz;
  std::vector<double> elevation_deg;
};

struct MvcTable {
  std::map<std::string, double> mvc_v;

  double at(const std::string& muscle) const {
    const auto it = mvc_v.find(muscle);
    if (it == mvc_v.end()) {
      throw ConfigError("missing MVC entry for " + muscle);
    }
    if (!(it->second > 0.0)) {
      throw ConfigError("non-positive MVC for " + muscle);
    }
    return it->second;
  }
};

enum class Movement {
  abduction,
  adduction,
  horizontal_flexion,
  horizontal_extension,
  forward_flexion,
  forward_extension,
};

enum class Condition { unpowered, powered };

inline std::string to_string(Movement m) {
  switch (m) {
    case Movement::abduction: return "abduction";
    case Movement::adduction: return "adduction";
    case Movement::horizontal_flexion: return "horizontal_flexion";
    case Movement::horizontal_extension: return "horizontal_extension";
    case Movement::forward_flexion: return "forward_flexion";
    case Movement::forward_extension: return "forward_extension";
  }
  return "";
}

inline Movement movement_from_string(const std::string& s) {
  for (Movement m :
       {Movement::abduction, Movement::adduction, Movement::horizontal_flexion,
        Movement::horizontal_extension, Movement::forward_flexion,
        Movement::forward_extension}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown movement: " + s);
}

inline std::string to_string(Condition c) {
  return c == Condition::unpowered ? "unpowered" : "powered";
}

inline Condition condition_from_string(const std::string& s) {
  if (s == "unpowered") return Condition::unpowered;
  if (s == "powered") return Condition::powered;
  throw ConfigError("unknown condition: " + s);
}

// A recorded motion covers a loading and an unloading movement; either
// member names the pair.
struct MovementPair {
  Movement loading;
  Movement unloading;
};

inline MovementPair movement_pair(Movement m) {
  switch (m) {
    case Movement::abduction:
    case Movement::adduction:
      return {Movement::abduction, Movement::adduction};
    case Movement::horizontal_flexion:
    case Movement::horizontal_extension:
      return {Movement::horizontal_flexion, Movement::horizontal_extension};
    case Movement::forward_flexion:
    case Movement::forward_extension:
      return {Movement::forward_flexion, Movement::forward_extension};
  }
  return {m, m};
}

// Target muscle per movement (report legend).
inline std::string target_muscle(Movement m) {
  switch (m) {
    case Movement::abduction:
    case Movement::adduction:
      return "lateral_deltoid";
    case Movement::horizontal_flexion:
      return "pectoralis_major";
    case Movement::horizontal_extension:
    case Movement::forward_extension:
      return "posterior_deltoid";
    case Movement::forward_flexion:
      return "anterior_deltoid";
  }
  return "";
}

struct Repetition {
  EmgTrace emg;
  ImuTrace imu;
};

struct TrialSet {
  Movement movement = Movement::abduction;
  Condition condition = Condition::unpowered;
  std::vector<Repetition> repetitions;
};

// ---------------------------------------------------------------------------
// Stream transforms

inline EmgTrace rectify(EmgTrace trace) {
  for (auto& ch : trace.channels) {
    for (double& v : ch) v = std::abs(v);
  }
  return trace;
}

// The designed 20 Hz low-pass at a given sample rate.
inline SosFilter emg_lowpass_filter(double sample_rate_hz) {
  if (sample_rate_hz < 2.0 * kLowpassStopbandHz) {
    throw ConfigError("sample rate too low for the 20 Hz low-pass design");
  }
  const int order =
      cheby2_min_order(kLowpassPassbandHz, kLowpassStopbandHz,
                       kLowpassPassRippleDb, kLowpassStopbandDb,
                       sample_rate_hz);
  return design_cheby2_lowpass(order, kLowpassStopbandDb, kLowpassStopbandHz,
                               sample_rate_hz);
}

inline EmgTrace lowpass(EmgTrace trace) {
  const auto filter = emg_lowpass_filter(trace.sample_rate_hz);
  for (auto& ch : trace.channels) ch = filter.apply(ch);
  return trace;
}

// Trailing-window RMS; index i covers samples max(0, i-window+1)..i.
inline std::vector<double> rms_envelope(const std::vector<double>& series,
                                        std::size_t window_samples) {
  if (series.empty()) throw DomainError("empty series");
  if (window_samples < 1) throw DomainError("window must be >= 1");
  std::vector<double> cumsq(series.size() + 1, 0.0);
  for (std::size_t i = 0; i < series.size(); ++i) {
    cumsq[i + 1] = cumsq[i] + series[i] * series[i];
  }
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::size_t begin = i + 1 >= window_samples ? i + 1 - window_samples
                                                      : 0;
    const double mean = (cumsq[i + 1] - cumsq[begin]) /
                        static_cast<double>(i + 1 - begin);
    out[i] = std::sqrt(std::max(mean, 0.0));
  }
  return out;
}

inline EmgTrace normalize_mvc(EmgTrace trace, const MvcTable& mvc) {
  for (std::size_t i = 0; i < trace.labels.size(); ++i) {
    const double scale = mvc.at(trace.labels[i]);
    for (double& v : trace.channels[i]) v /= scale;
  }
  return trace;
}

inline double relative_reduction(double unpowered_rms, double powered_rms) {
  if (!(unpowered_rms > 0.0)) {
    throw UndefinedValueError("relative reduction undefined: zero baseline");
  }
  return 100.0 * (unpowered_rms - powered_rms) / unpowered_rms;
}

// ---------------------------------------------------------------------------
// Segmentation

struct SegmentWindow {
  std::size_t imu_begin = 0;
  std::size_t imu_end = 0;  // half-open
  std::size_t emg_begin = 0;
  std::size_t emg_end = 0;
};

struct RepetitionSegments {
  SegmentWindow loading;
  SegmentWindow unloading;
};

namespace detail {

inline std::vector<double> smoothed_rate(const ImuTrace& imu) {
  const auto& y = imu.elevation_deg;
  const std::size_t n = y.size();
  std::vector<double> smooth(n);
  std::size_t half =
      static_cast<std::size_t>(std::round(0.05 * imu.sample_rate_hz));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double acc = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) acc += y[k];
    smooth[i] = acc / static_cast<double>(hi - lo + 1);
  }
  std::vector<double> rate(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    rate[i] = 0.5 * (smooth[i + 1] - smooth[i - 1]) * imu.sample_rate_hz;
  }
  if (n >= 2) {
    rate[0] = (smooth[1] - smooth[0]) * imu.sample_rate_hz;
    rate[n - 1] = (smooth[n - 1] - smooth[n - 2]) * imu.sample_rate_hz;
  }
  return rate;
}

struct Run {
  std::size_t begin;
  std::size_t end;  // half-open
  bool rising;
};

inline std::vector<Run> threshold_runs(const std::vector<double>& rate,
                                       double threshold) {
  std::vector<Run> runs;
  std::size_t i = 0;
  while (i < rate.size()) {
    if (rate[i] > threshold || rate[i] < -threshold) {
      const bool rising = rate[i] > 0.0;
      std::size_t j = i;
      while (j < rate.size() &&
             (rising ? rate[j] > threshold : rate[j] < -threshold)) {
        ++j;
      }
      runs.push_back({i, j, rising});
      i = j;
    } else {
      ++i;
    }
  }
  return runs;
}

}  // namespace detail

// Splits one recording into loading (elevation rising) and unloading
// (falling) phases per repetition, using the smoothed IMU elevation rate
// against a +/- 5 deg/s threshold. EMG indices follow by the rate ratio.
inline std::vector<RepetitionSegments> segment_motion(const ImuTrace& imu,
                                                      const EmgTrace& emg) {
  if (imu.elevation_deg.size() < 4) {
    throw SegmentationError("IMU trace too short to segment");
  }
  const auto rate = detail::smoothed_rate(imu);
  const auto runs =
      detail::threshold_runs(rate, kMotionRateThresholdDegPerS);

  const double scale = emg.sample_rate_hz / imu.sample_rate_hz;
  const std::size_t emg_len =
      emg.channels.empty() ? 0 : emg.channels.front().size();
  const auto to_window = [&](std::size_t b, std::size_t e) {
    SegmentWindow w;
    w.imu_begin = b;
    w.imu_end = e;
    w.emg_begin = std::min(
        emg_len, static_cast<std::size_t>(std::llround(b * scale)));
    w.emg_end = std::min(
        emg_len, static_cast<std::size_t>(std::llround(e * scale)));
    return w;
  };

  std::vector<RepetitionSegments> reps;
  for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
    if (runs[i].rising && !runs[i + 1].rising) {
      RepetitionSegments rep;
      rep.loading = to_window(runs[i].begin, runs[i].end);
      rep.unloading = to_window(runs[i + 1].begin, runs[i + 1].end);
      reps.push_back(rep);
      ++i;
    }
  }
  if (reps.empty()) {
    throw SegmentationError("no rise-fall cycle above the motion threshold");
  }
  return reps;
}

// ---------------------------------------------------------------------------
// Report

struct ReportRow {
  Movement movement;
  std::string target;
  double relative_reduction_pct = 0.0;
};

using PipelineObserver = std::function<void(std::string_view stage)>;

inline constexpr std::size_t kSegmentResamplePoints = 1000;

namespace detail {

inline std::vector<double> resample_linear(const std::vector<double>& in,
                                           std::size_t points) {
  std::vector<double> out(points, 0.0);
  if (in.empty()) return out;
  if (in.size() == 1) {
    std::fill(out.begin(), out.end(), in[0]);
    return out;
  }
  const double step = static_cast<double>(in.size() - 1) /
                      static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double x = i * step;
    const std::size_t lo = std::min(in.size() - 2,
                                    static_cast<std::size_t>(x));
    const double frac = x - static_cast<double>(lo);
    out[i] = in[lo] * (1.0 - frac) + in[lo + 1] * frac;
  }
  return out;
}

inline double envelope_rms_scalar(const std::vector<double>& series) {
  const auto env = rms_envelope(
      series, std::min<std::size_t>(kRmsWindowSamples, series.size()));
  double acc = 0.0;
  for (double v : env) acc += v * v;
  return std::sqrt(acc / static_cast<double>(env.size()));
}

}  // namespace detail

// Full pipeline over paired powered/unpowered trials: per repetition the
// processed target-muscle segments are time-normalized, averaged across
// repetitions, reduced to an envelope RMS scalar, and compared across
// conditions. Rows follow the fixed movement order of the report table.
inline std::vector<ReportRow> emg_report(const std::vector<TrialSet>& trials,
                                         const MvcTable& mvc,
                                         const PipelineObserver& observe = {}) {
  const auto note = [&](std::string_view stage) {
    if (observe) observe(stage);
  };

  struct PairSlot {
    const TrialSet* unpowered = nullptr;
    const TrialSet* powered = nullptr;
  };
  std::map<int, PairSlot> pairs;  // keyed by loading movement order
  const auto pair_key = [](Movement m) {
    switch (movement_pair(m).loading) {
      case Movement::abduction: return 0;
      case Movement::horizontal_flexion: return 1;
      default: return 2;
    }
  };
  for (const auto& t : trials) {
    auto& slot = pairs[pair_key(t.movement)];
    if (t.condition == Condition::unpowered) {
      if (slot.unpowered) throw ConfigError("duplicate unpowered trial set");
      slot.unpowered = &t;
    } else {
      if (slot.powered) throw ConfigError("duplicate powered trial set");
      slot.powered = &t;
    }
  }

  std::vector<ReportRow> rows;
  for (auto& [key, slot] : pairs) {
    if (!slot.unpowered || !slot.powered) {
      throw IncompleteDataError(
          "each movement needs both powered and unpowered trials");
    }
    const auto pair = movement_pair(slot.unpowered->movement);
    const std::string loading_muscle = target_muscle(pair.loading);
    const std::string unloading_muscle = target_muscle(pair.unloading);

    // scalar per (phase, condition)
    double scalars[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (int cond = 0; cond < 2; ++cond) {
      const TrialSet& t = cond == 0 ? *slot.unpowered : *slot.powered;
      std::vector<std::vector<double>> loading_segments;
      std::vector<std::vector<double>> unloading_segments;
      for (const auto& rep : t.repetitions) {
        rep.emg.validate();
        note("rectify");
        auto processed = rectify(rep.emg);
        note("lowpass");
        processed = lowpass(std::move(processed));
        note("normalize");
        processed = normalize_mvc(std::move(processed), mvc);
        note("segment");
        const auto segments = segment_motion(rep.imu, processed);
        for (const auto& seg : segments) {
          const auto slice = [&](const std::vector<double>& ch,
                                 const SegmentWindow& w) {
            return std::vector<double>(ch.begin() + w.emg_begin,
                                       ch.begin() + w.emg_end);
          };
          note("resample");
          loading_segments.push_back(detail::resample_linear(
              slice(processed.channel(loading_muscle), seg.loading),
              kSegmentResamplePoints));
          unloading_segments.push_back(detail::resample_linear(
              slice(processed.channel(unloading_muscle), seg.unloading),
              kSegmentResamplePoints));
        }
      }
      if (loading_segments.empty()) {
        throw SegmentationError("trial set produced no repetitions");
      }
      note("average");
      const auto average = [](const std::vector<std::vector<double>>& segs) {
        std::vector<double> avg(segs.front().size(), 0.0);
        for (const auto& s : segs) {
          for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += s[i];
        }
        for (double& v : avg) v /= static_cast<double>(segs.size());
        return avg;
      };
      note("rms_envelope");
      scalars[0][cond] = detail::envelope_rms_scalar(average(loading_segments));
      scalars[1][cond] =
          detail::envelope_rms_scalar(average(unloading_segments));
    }

    note("reduce");
    rows.push_back({pair.loading, loading_muscle,
                    relative_reduction(scalars[0][0], scalars[0][1])});
    rows.push_back({pair.unloading, unloading_muscle,
                    relative_reduction(scalars[1][0], scalars[1][1])});
  }
  return rows;
}

}  // namespace pneusleeve::signals
