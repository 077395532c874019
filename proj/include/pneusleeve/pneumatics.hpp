#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pneusleeve/actuator.hpp"
#include "pneusleeve/errors.hpp"

// Behavioral model of the pressure-regulation chain and the actuators'
// first-order step response. The regulator covers 10-150 kPa at 1 kPa
// resolution and can vent to atmosphere (0 kPa); everything between the
// regulator command and the observed bend angle is lumped into one
// asymmetric first-order lag identified from the measured rise times.

namespace pneusleeve {

inline constexpr double kLn9 = 2.1972245773362196;  // 10-90% rise = tau*ln 9

struct RegulatorSpec {
  double min_kpa = 10.0;
  double max_kpa = 150.0;
  double resolution_kpa = 1.0;
  double bandwidth_hz = 10.0;
  double supply_kpa = 250.0;
  double flow_limit_slpm = 60.0;
  bool vent_supported = true;

  void validate() const {
    if (!(min_kpa < max_kpa)) throw DomainError("regulator min must be < max");
    if (!(resolution_kpa > 0.0)) throw DomainError("resolution must be > 0");
    if (!(bandwidth_hz > 0.0)) throw DomainError("bandwidth must be > 0");
  }
};

// First-order inflate/deflate dynamics. The steady-state map defaults to
// the unloaded free-bend curve; weighted runs supply their own.
struct ActuatorDynamics {
  double tau_inflate_s = 1.0;
  double tau_deflate_s = 1.0;
  std::function<double(double)> steady_angle_fn =
      [](double p) { return free_bend_angle(p); };

  ActuatorDynamics(double tau_in, double tau_out,
                   std::function<double(double)> steady = nullptr)
      : tau_inflate_s(tau_in), tau_deflate_s(tau_out) {
    if (!(tau_inflate_s > 0.0) || !(tau_deflate_s > 0.0)) {
      throw DomainError("time constants must be positive");
    }
    if (steady) steady_angle_fn = std::move(steady);
  }
};

// Uniformly sampled series; values[i] is the sample at t = i * dt.
struct Waveform {
  double dt_s = 0.0;
  std::vector<double> values;

  double time(std::size_t i) const { return static_cast<double>(i) * dt_s; }
  std::size_t size() const { return values.size(); }
};

// Command quantization: 0 vents to atmosphere; anything else is rounded to
// the resolution step and clamped into the regulator's range.
inline double regulator_command(const RegulatorSpec& spec,
                                double requested_kpa) {
  spec.validate();
  if (!(requested_kpa >= 0.0) || !std::isfinite(requested_kpa)) {
    throw DomainError("requested pressure must be nonnegative");
  }
  if (requested_kpa == 0.0 && spec.vent_supported) return 0.0;
  const double stepped =
      std::round(requested_kpa / spec.resolution_kpa) * spec.resolution_kpa;
  return std::clamp(stepped, spec.min_kpa, spec.max_kpa);
}

// tau = t_r / ln 9 for a first-order system's 10-90% rise time.
inline double tau_from_rise_time(double rise_s) {
  if (!(rise_s > 0.0)) throw DomainError("rise time must be positive");
  return rise_s / kLn9;
}

inline Waveform square_wave(double period_s, double low_kpa, double high_kpa,
                            double duration_s, double dt_s) {
  if (!(period_s > 0.0)) throw DomainError("period must be positive");
  if (!(dt_s > 0.0)) throw DomainError("dt must be positive");
  if (!(duration_s >= 0.0)) throw DomainError("duration must be nonnegative");
  if (low_kpa > high_kpa) throw DomainError("low level above high level");
  Waveform w;
  w.dt_s = dt_s;
  const auto n = static_cast<std::size_t>(std::floor(duration_s / dt_s)) + 1;
  w.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = std::fmod(static_cast<double>(i) * dt_s, period_s);
    // Each wave starts with the pressurization half.
    w.values[i] = phase < 0.5 * period_s ? high_kpa : low_kpa;
  }
  return w;
}

// Integrates dy/dt = (y_target(P(t)) - y) / tau with the exact exponential
// update per step, so the response is overshoot-free by construction and
// invariant under dt refinement. tau switches on the sign of the tracking
// error (inflation vs deflation).
inline Waveform simulate_first_order(const ActuatorDynamics& dyn,
                                     const Waveform& input, double y0) {
  if (!(input.dt_s > 0.0)) throw DomainError("input dt must be positive");
  Waveform out;
  out.dt_s = input.dt_s;
  out.values.resize(input.size());
  if (input.values.empty()) return out;
  double y = y0;
  out.values[0] = y;
  for (std::size_t i = 1; i < input.size(); ++i) {
    const double target = dyn.steady_angle_fn(input.values[i - 1]);
    const double tau =
        target > y ? dyn.tau_inflate_s : dyn.tau_deflate_s;
    y = target + (y - target) * std::exp(-input.dt_s / tau);
    out.values[i] = y;
  }
  return out;
}

enum class Transition { inflate, deflate };

namespace detail {

// Linear-interpolated time where the trace crosses `level` going in the
// given direction, searching from sample index `from`. Returns the index of
// the segment and the crossing time, or size() if absent.
struct Crossing {
  std::size_t segment;
  double time;
};

inline std::optional<Crossing> find_crossing(const Waveform& w, double level,
                                             bool rising, std::size_t from) {
  for (std::size_t i = from; i + 1 < w.size(); ++i) {
    const double y0 = w.values[i];
    const double y1 = w.values[i + 1];
    const bool crosses =
        rising ? (y0 < level && y1 >= level) : (y0 > level && y1 <= level);
    if (crosses) {
      const double frac = (level - y0) / (y1 - y0);
      return Crossing{i, (static_cast<double>(i) + frac) * w.dt_s};
    }
  }
  return std::nullopt;
}

}  // namespace detail

// 10-90% rise time of the first qualifying transition. Both thresholds
// falling inside one sample interval is a sub-resolution step and reports 0.
inline double rise_time(const Waveform& trace, Transition direction) {
  if (trace.size() < 2 || !(trace.dt_s > 0.0)) {
    throw NotFoundError("trace too short for a transition");
  }
  double lo = trace.values[0], hi = trace.values[0];
  for (double v : trace.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double amp = hi - lo;
  if (!(amp > 1e-12 * std::max(1.0, std::abs(hi)))) {
    throw NotFoundError("trace has no transition");
  }
  const double l10 = lo + 0.1 * amp;
  const double l90 = lo + 0.9 * amp;
  const bool rising = direction == Transition::inflate;
  const double first_level = rising ? l10 : l90;
  const double second_level = rising ? l90 : l10;

  const auto c1 = detail::find_crossing(trace, first_level, rising, 0);
  if (!c1) throw NotFoundError("no qualifying transition in trace");
  const auto c2 =
      detail::find_crossing(trace, second_level, rising, c1->segment);
  if (!c2) throw NotFoundError("transition does not span 10-90%");
  if (c2->segment == c1->segment) return 0.0;
  return c2->time - c1->time;
}

// Dynamics identified from the measured rise times of the catalog variants.
inline ActuatorDynamics catalog_dynamics(const std::string& variant_name) {
  if (variant_name == "D1") {
    return ActuatorDynamics(tau_from_rise_time(4.72), tau_from_rise_time(3.40));
  }
  if (variant_name == "D2") {
    return ActuatorDynamics(tau_from_rise_time(2.12), tau_from_rise_time(4.42));
  }
  if (variant_name == "D3") {
    return ActuatorDynamics(tau_from_rise_time(3.62), tau_from_rise_time(1.82));
  }
  throw DomainError("unknown actuator variant: " + variant_name);
}

}  // namespace pneusleeve
