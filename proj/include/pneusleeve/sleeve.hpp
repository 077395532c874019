#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pneusleeve/actuator.hpp"
#include "pneusleeve/errors.hpp"
#include "pneusleeve/pneumatics.hpp"
#include "pneusleeve/variants.hpp"

// 2-DOF shoulder sleeve: four actuators in two antagonistic pairs, one pair
// per anatomical axis. Shoulder state follows the globe convention: angle of
// elevation (AoE, 0 = arm down) and plane of elevation (PoE).
//
// Default placement maps put the elevation actuator at A = 180 - AoE (so it
// folds and gains torque as the arm rises, reaching A = 90 at the
// maximum-load elevation of 90 deg) and keep the other three in the
// 180-270 deg band at the neutral pose:
//   elevation        A = 180 - aoe      torque sign +1
//   depression       A = 180 + aoe      torque sign -1
//   steer anterior   A = 180 + poe      torque sign +1
//   steer posterior  A = 180 - poe      torque sign -1
// All maps clamp into the platform's [0, 270] range.

namespace pneusleeve {

inline constexpr double kMaxContinuousPressureKpa = 80.0;
inline constexpr double kDegToRad = 0.017453292519943295;

struct RomLimits {
  double aoe_min_deg = 0.0;
  double aoe_max_deg = 180.0;
  double poe_min_deg = -90.0;
  double poe_max_deg = 135.0;

  bool contains(double aoe, double poe) const {
    return aoe >= aoe_min_deg && aoe <= aoe_max_deg && poe >= poe_min_deg &&
           poe <= poe_max_deg;
  }
};

struct ShoulderPose {
  double aoe_deg = 0.0;
  double poe_deg = 0.0;
};

enum class SleeveAxis { elevation, steering };

// Slot order used everywhere a per-actuator array appears (PressureSet,
// trajectory CSV columns p1..p4).
enum Slot : std::size_t {
  kElevation = 0,
  kDepression = 1,
  kSteerAnterior = 2,
  kSteerPosterior = 3,
};

struct ActuatorPlacement {
  ActuatorVariant variant;
  double offset_deg = 180.0;
  double direction = 1.0;  // driving-angle multiplier
  SleeveAxis axis = SleeveAxis::elevation;
  double torque_sign = 1.0;

  double actuator_angle(const ShoulderPose& pose) const {
    const double driving =
        axis == SleeveAxis::elevation ? pose.aoe_deg : pose.poe_deg;
    return std::clamp(offset_deg + direction * driving, 0.0, kAaAngleMaxDeg);
  }
};

struct SleeveLayout {
  std::array<ActuatorPlacement, 4> placements;
  RomLimits rom;

  void validate() const {
    if (placements[kElevation].axis != SleeveAxis::elevation ||
        placements[kDepression].axis != SleeveAxis::elevation ||
        placements[kSteerAnterior].axis != SleeveAxis::steering ||
        placements[kSteerPosterior].axis != SleeveAxis::steering) {
      throw ConfigError("layout slots must form one pair per axis");
    }
    if (placements[kElevation].torque_sign *
                placements[kDepression].torque_sign >=
            0.0 ||
        placements[kSteerAnterior].torque_sign *
                placements[kSteerPosterior].torque_sign >=
            0.0) {
      throw ConfigError("antagonists must produce opposite torque signs");
    }
    for (const auto& p : placements) {
      if (!p.variant.reference_model) {
        throw ConfigError("placement variant lacks a derived torque model");
      }
    }
  }

  // All four slots populated with the same variant and the default maps.
  static SleeveLayout standard(const ActuatorVariant& variant) {
    SleeveLayout l{
        {ActuatorPlacement{variant, 180.0, -1.0, SleeveAxis::elevation, 1.0},
         ActuatorPlacement{variant, 180.0, 1.0, SleeveAxis::elevation, -1.0},
         ActuatorPlacement{variant, 180.0, 1.0, SleeveAxis::steering, 1.0},
         ActuatorPlacement{variant, 180.0, -1.0, SleeveAxis::steering, -1.0}},
        RomLimits{}};
    l.validate();
    return l;
  }
};

// Point-mass gravity model: the 90-degree holding torque is pinned and the
// sine law gives the rest. The default 18.06 N-m comes from the (torque,
// support-fraction) anchor pair at 80 kPa.
struct ArmParams {
  double mass_kg = 3.5;
  double gravity_torque_90_nm = 18.06;
  double com_length_m = 18.06 / (3.5 * 9.81);

  ArmParams() = default;
  ArmParams(double mass, double g90) : mass_kg(mass), gravity_torque_90_nm(g90) {
    if (!(mass_kg > 0.0) || !(gravity_torque_90_nm > 0.0)) {
      throw DomainError("arm parameters must be positive");
    }
    com_length_m = gravity_torque_90_nm / (mass_kg * 9.81);
  }

  // Same center of mass as the default arm, scaled to another mass.
  static ArmParams with_mass(double mass_kg) {
    const ArmParams ref;
    return ArmParams(mass_kg, mass_kg * 9.81 * ref.com_length_m);
  }
};

struct PressureSet {
  std::array<double, 4> kpa{0.0, 0.0, 0.0, 0.0};

  PressureSet() = default;
  explicit PressureSet(const std::array<double, 4>& values) : kpa(values) {
    for (double p : kpa) {
      if (!(p >= 0.0 && p <= kMaxContinuousPressureKpa)) {
        throw DomainError("pressure outside the continuous safety cap [0, 80]");
      }
    }
  }
};

struct AxisTorques {
  double elevation_nm = 0.0;
  double steering_nm = 0.0;
};

namespace detail {

inline void check_pose(const SleeveLayout& layout, const ShoulderPose& pose) {
  if (!layout.rom.contains(pose.aoe_deg, pose.poe_deg)) {
    throw DomainError("pose outside the range-of-motion limits");
  }
}

inline const TorqueModel& placement_model(const ActuatorPlacement& p) {
  if (!p.variant.reference_model) {
    throw ConfigError("placement variant lacks a derived torque model");
  }
  return *p.variant.reference_model;
}

}  // namespace detail

inline std::array<AngleConvention, 4> pose_to_actuator_angles(
    const SleeveLayout& layout, const ShoulderPose& pose) {
  detail::check_pose(layout, pose);
  return {AngleConvention{layout.placements[0].actuator_angle(pose), 0.0},
          AngleConvention{layout.placements[1].actuator_angle(pose), 0.0},
          AngleConvention{layout.placements[2].actuator_angle(pose), 0.0},
          AngleConvention{layout.placements[3].actuator_angle(pose), 0.0}};
}

// Gravitational holding torque opposing elevation (magnitude).
inline double gravity_torque(const ArmParams& arm, const ShoulderPose& pose) {
  return arm.gravity_torque_90_nm * std::sin(pose.aoe_deg * kDegToRad);
}

// Signed net actuator torque per axis.
inline AxisTorques net_torque(const SleeveLayout& layout,
                              const ShoulderPose& pose,
                              const PressureSet& pressures) {
  detail::check_pose(layout, pose);
  AxisTorques out;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& p = layout.placements[i];
    const double torque =
        p.torque_sign * predict_torque(detail::placement_model(p),
                                       p.actuator_angle(pose),
                                       pressures.kpa[i]);
    if (p.axis == SleeveAxis::elevation) {
      out.elevation_nm += torque;
    } else {
      out.steering_nm += torque;
    }
  }
  return out;
}

// Fraction of the gravitational holding torque supplied by the elevation
// actuator at this pose and pressure.
inline double support_fraction(const SleeveLayout& layout,
                               const ShoulderPose& pose,
                               const PressureSet& pressures,
                               const ArmParams& arm) {
  detail::check_pose(layout, pose);
  if (pose.aoe_deg == 0.0) {
    throw UndefinedValueError("support fraction undefined at zero elevation");
  }
  const auto& elev = layout.placements[kElevation];
  const double torque =
      predict_torque(detail::placement_model(elev), elev.actuator_angle(pose),
                     pressures.kpa[kElevation]);
  return torque / gravity_torque(arm, pose);
}

class CapabilityExceeded : public Error {
 public:
  CapabilityExceeded(const std::string& what, double max_achievable_nm)
      : Error(what), max_achievable_nm_(max_achievable_nm) {}
  double max_achievable_nm() const { return max_achievable_nm_; }

 private:
  double max_achievable_nm_;
};

namespace detail {

struct PairRefs {
  const ActuatorPlacement* positive;
  std::size_t positive_slot;
  const ActuatorPlacement* negative;
  std::size_t negative_slot;
};

inline PairRefs axis_pair(const SleeveLayout& layout, SleeveAxis axis) {
  const std::size_t a = axis == SleeveAxis::elevation ? kElevation
                                                      : kSteerAnterior;
  const std::size_t b = axis == SleeveAxis::elevation ? kDepression
                                                      : kSteerPosterior;
  PairRefs out{};
  if (layout.placements[a].torque_sign > 0.0) {
    out = {&layout.placements[a], a, &layout.placements[b], b};
  } else {
    out = {&layout.placements[b], b, &layout.placements[a], a};
  }
  return out;
}

}  // namespace detail

// Maximum net torque the pair can produce in each signed direction with the
// agonist at the safety cap and the antagonist at the co-contraction floor.
inline std::pair<double, double> axis_capability(const SleeveLayout& layout,
                                                 const ShoulderPose& pose,
                                                 SleeveAxis axis,
                                                 double cocontraction_kpa) {
  const auto pair = detail::axis_pair(layout, axis);
  const double t_pos = torque_at_reference(detail::placement_model(*pair.positive),
                                           pair.positive->actuator_angle(pose));
  const double t_neg = torque_at_reference(detail::placement_model(*pair.negative),
                                           pair.negative->actuator_angle(pose));
  const double floor_ratio = cocontraction_kpa / kReferencePressureKpa;
  const double max_positive = t_pos - floor_ratio * t_neg;
  const double max_negative = t_neg - floor_ratio * t_pos;
  return {max_positive, max_negative};
}

// Antagonistic allocation: the antagonist idles at the co-contraction floor
// and the agonist pressure is solved from the linear pressure scaling,
//   P_agonist = 80 * (|desired| + T_antagonist(floor)) / T_P(A_agonist).
inline PressureSet allocate_pressures(const SleeveLayout& layout,
                                      const ShoulderPose& pose,
                                      const AxisTorques& desired,
                                      double cocontraction_kpa = 0.0) {
  detail::check_pose(layout, pose);
  if (!(cocontraction_kpa >= 0.0 &&
        cocontraction_kpa <= kMaxContinuousPressureKpa)) {
    throw DomainError("co-contraction floor outside [0, 80] kPa");
  }
  PressureSet out;
  out.kpa = {cocontraction_kpa, cocontraction_kpa, cocontraction_kpa,
             cocontraction_kpa};
  const double floor_ratio = cocontraction_kpa / kReferencePressureKpa;

  for (SleeveAxis axis : {SleeveAxis::elevation, SleeveAxis::steering}) {
    const double want = axis == SleeveAxis::elevation ? desired.elevation_nm
                                                      : desired.steering_nm;
    const auto pair = detail::axis_pair(layout, axis);
    const ActuatorPlacement* agonist = want >= 0.0 ? pair.positive
                                                   : pair.negative;
    const ActuatorPlacement* antagonist = want >= 0.0 ? pair.negative
                                                      : pair.positive;
    const std::size_t agonist_slot = want >= 0.0 ? pair.positive_slot
                                                 : pair.negative_slot;
    const double t_agonist = torque_at_reference(
        detail::placement_model(*agonist), agonist->actuator_angle(pose));
    const double t_antagonist = torque_at_reference(
        detail::placement_model(*antagonist), antagonist->actuator_angle(pose));
    const double needed = std::abs(want) + floor_ratio * t_antagonist;
    if (!(t_agonist > 0.0)) {
      if (needed > 0.0) {
        throw CapabilityExceeded("agonist produces no torque at this pose", 0.0);
      }
      continue;
    }
    const double pressure = kReferencePressureKpa * needed / t_agonist;
    if (pressure > kMaxContinuousPressureKpa + 1e-9) {
      throw CapabilityExceeded(
          "desired torque exceeds pair capability",
          t_agonist - floor_ratio * t_antagonist);
    }
    out.kpa[agonist_slot] = std::clamp(pressure, cocontraction_kpa,
                                       kMaxContinuousPressureKpa);
  }
  return out;
}

namespace detail {

// First torque-balance root met when moving from x0 in the direction the
// torque pushes; falls back to the boundary if no sign change occurs.
template <typename ResidualFn>
double axis_equilibrium(const ResidualFn& f, double x0, double xmin,
                        double xmax) {
  const double f0 = f(x0);
  if (f0 == 0.0) return x0;
  const double dir = f0 > 0.0 ? 1.0 : -1.0;
  const double bound = dir > 0.0 ? xmax : xmin;
  const double step = 0.1 * dir;
  double prev_x = x0;
  double prev_f = f0;
  for (double x = x0 + step; dir * (x - bound) < 1e-12; x += step) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if ((fx > 0.0) != (prev_f > 0.0)) {
      // Bisect inside [prev_x, x].
      double lo = prev_x, hi = x, flo = prev_f;
      for (int it = 0; it < 200 && std::abs(hi - lo) > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
    prev_x = x;
    prev_f = fx;
  }
  const double fb = f(bound);
  if ((fb > 0.0) != (prev_f > 0.0)) {
    double lo = prev_x, hi = bound, flo = prev_f;
    for (int it = 0; it < 200 && std::abs(hi - lo) > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = f(mid);
      if (fm == 0.0) return mid;
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }
  return bound;
}

}  // namespace detail

// Quasi-static elevation equilibrium under fixed pressures: the first angle,
// moving from the rest pose in the push direction, where net actuator torque
// balances gravity.
inline double equilibrium_aoe(const SleeveLayout& layout,
                              const PressureSet& pressures,
                              const ArmParams& arm, double poe_deg) {
  const auto residual = [&](double aoe) {
    const ShoulderPose pose{aoe, poe_deg};
    return net_torque(layout, pose, pressures).elevation_nm -
           gravity_torque(arm, pose);
  };
  return detail::axis_equilibrium(residual, layout.rom.aoe_min_deg,
                                  layout.rom.aoe_min_deg,
                                  layout.rom.aoe_max_deg);
}

struct ControllerConfig {
  // Loop gain kp * mobility is kept near 1/(4 * tau_deflate) so the pose
  // loop stays critically damped against the slowest pressure lag.
  double kp_nm_per_deg = 0.08;
  double dt_s = 0.02;
  double time_cap_s = 120.0;
  double success_tol_deg = 1.0;
  double cocontraction_kpa = 0.0;
  // Overdamped quasi-static plant: pose rate = mobility * net torque.
  double pose_mobility_deg_per_nms = 1.4;
  RegulatorSpec regulator;
};

struct TrajectoryPoint {
  double t_s = 0.0;
  ShoulderPose pose;
  PressureSet pressures;
};

struct ReachResult {
  bool success = false;
  double time_s = 0.0;
  ShoulderPose final_pose;
  std::vector<TrajectoryPoint> trajectory;
};

// Closed-loop reach: proportional pose-error torque demand with gravity
// feedforward (clamped to pair capability), command quantization through the
// regulator, first-order pressure lag, and overdamped quasi-static pose
// relaxation toward torque balance. The demonstration hardware ran open
// loop; this controller is tooling for exercising the models, not a claim
// from the characterization.
inline ReachResult simulate_reach(const SleeveLayout& layout,
                                  const ShoulderPose& start,
                                  const ShoulderPose& target,
                                  const ArmParams& arm,
                                  const ControllerConfig& cfg = {}) {
  detail::check_pose(layout, start);
  detail::check_pose(layout, target);
  if (!(cfg.dt_s > 0.0) || !(cfg.time_cap_s >= 0.0) ||
      !(cfg.kp_nm_per_deg > 0.0) || !(cfg.pose_mobility_deg_per_nms > 0.0)) {
    throw DomainError("invalid controller configuration");
  }

  std::array<ActuatorDynamics, 4> lag = {
      ActuatorDynamics(1.0, 1.0), ActuatorDynamics(1.0, 1.0),
      ActuatorDynamics(1.0, 1.0), ActuatorDynamics(1.0, 1.0)};
  for (std::size_t i = 0; i < 4; ++i) {
    if (is_catalog_variant(layout.placements[i].variant.name)) {
      lag[i] = catalog_dynamics(layout.placements[i].variant.name);
    }
  }

  ReachResult result;
  ShoulderPose pose = start;
  PressureSet actual;
  double t = 0.0;
  result.trajectory.push_back({t, pose, actual});

  while (true) {
    const double err_el = target.aoe_deg - pose.aoe_deg;
    const double err_st = target.poe_deg - pose.poe_deg;
    if (std::max(std::abs(err_el), std::abs(err_st)) < cfg.success_tol_deg) {
      result.success = true;
      break;
    }
    if (t >= cfg.time_cap_s) break;

    // Gravity-compensated proportional demand, clamped to capability.
    AxisTorques demand;
    demand.elevation_nm = cfg.kp_nm_per_deg * err_el + gravity_torque(arm, pose);
    demand.steering_nm = cfg.kp_nm_per_deg * err_st;
    const auto [el_pos, el_neg] =
        axis_capability(layout, pose, SleeveAxis::elevation,
                        cfg.cocontraction_kpa);
    const auto [st_pos, st_neg] =
        axis_capability(layout, pose, SleeveAxis::steering,
                        cfg.cocontraction_kpa);
    demand.elevation_nm = std::clamp(demand.elevation_nm, -el_neg, el_pos);
    demand.steering_nm = std::clamp(demand.steering_nm, -st_neg, st_pos);

    const PressureSet commanded =
        allocate_pressures(layout, pose, demand, cfg.cocontraction_kpa);
    for (std::size_t i = 0; i < 4; ++i) {
      const double cmd =
          regulator_command(cfg.regulator, commanded.kpa[i]);
      const double tau = cmd > actual.kpa[i] ? lag[i].tau_inflate_s
                                             : lag[i].tau_deflate_s;
      actual.kpa[i] =
          cmd + (actual.kpa[i] - cmd) * std::exp(-cfg.dt_s / tau);
      actual.kpa[i] = std::clamp(actual.kpa[i], 0.0, kMaxContinuousPressureKpa);
    }

    const auto net = net_torque(layout, pose, actual);
    const double elevation_balance =
        net.elevation_nm - gravity_torque(arm, pose);
    pose.aoe_deg = std::clamp(
        pose.aoe_deg +
            cfg.dt_s * cfg.pose_mobility_deg_per_nms * elevation_balance,
        layout.rom.aoe_min_deg, layout.rom.aoe_max_deg);
    pose.poe_deg = std::clamp(
        pose.poe_deg + cfg.dt_s * cfg.pose_mobility_deg_per_nms * net.steering_nm,
        layout.rom.poe_min_deg, layout.rom.poe_max_deg);

    t += cfg.dt_s;
    result.trajectory.push_back({t, pose, actual});
  }

  result.time_s = t;
  result.final_pose = pose;
  return result;
}

struct WorkspaceCell {
  double aoe_deg = 0.0;
  double poe_deg = 0.0;
  bool reachable = true;  // theoretical workspace covers the whole ROM
  bool feasible_hold = false;
  double max_gravity_fraction = 0.0;
};

// Grid sweep of the ROM recording, per pose, the elevation actuator's
// holding margin against gravity at the safety-cap pressure.
inline std::vector<WorkspaceCell> workspace_grid(const SleeveLayout& layout,
                                                 const ArmParams& arm,
                                                 double aoe_step_deg,
                                                 double poe_step_deg,
                                                 bool gravity_enabled = true) {
  if (!(aoe_step_deg > 0.0) || !(poe_step_deg > 0.0)) {
    throw DomainError("grid steps must be positive");
  }
  std::vector<WorkspaceCell> cells;
  const auto& elev = layout.placements[kElevation];
  for (double aoe = layout.rom.aoe_min_deg;
       aoe <= layout.rom.aoe_max_deg + 1e-9; aoe += aoe_step_deg) {
    for (double poe = layout.rom.poe_min_deg;
         poe <= layout.rom.poe_max_deg + 1e-9; poe += poe_step_deg) {
      const ShoulderPose pose{std::min(aoe, layout.rom.aoe_max_deg),
                              std::min(poe, layout.rom.poe_max_deg)};
      WorkspaceCell cell;
      cell.aoe_deg = pose.aoe_deg;
      cell.poe_deg = pose.poe_deg;
      const double cap =
          predict_torque(detail::placement_model(elev),
                         elev.actuator_angle(pose), kMaxContinuousPressureKpa);
      const double grav = gravity_enabled ? gravity_torque(arm, pose) : 0.0;
      cell.feasible_hold = cap >= grav;
      cell.max_gravity_fraction =
          grav > 0.0 ? cap / grav : std::numeric_limits<double>::infinity();
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace pneusleeve
