#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pneusleeve/errors.hpp"

// Static torque models of the modular fabric bending actuators.
//
// Angle conventions: the A-A' angle is the actuator's bend angle about its
// primary torque axis (0 deg = fully folded onto itself, 180 deg = straight,
// 270 deg = hyper-extended). The B-B' angle is the out-of-plane twist,
// 0-45 deg. Torque is characterized at 80 kPa and scales linearly with
// pressure below that.

namespace pneusleeve {

inline constexpr double kReferencePressureKpa = 80.0;
inline constexpr double kMaxPressureKpa = 150.0;
inline constexpr double kAaAngleMaxDeg = 270.0;
inline constexpr double kBbAngleMaxDeg = 45.0;
inline constexpr double kFullBendPressureKpa = 10.0;
inline constexpr double kFullBendAngleDeg = 360.0;

// One sealed inflation pouch. Paper modules: A 65x55, B 90x55, C 90x65 (mm).
struct ModuleSpec {
  std::string label;
  double length_mm = 0.0;
  double width_mm = 0.0;

  ModuleSpec(std::string lbl, double length, double width)
      : label(std::move(lbl)), length_mm(length), width_mm(width) {
    if (!(length_mm > 0.0) || !(width_mm > 0.0)) {
      throw DomainError("module dimensions must be positive");
    }
    if (label == "A" && (length_mm != 65.0 || width_mm != 55.0)) {
      throw DomainError("module A is 65x55 mm");
    }
    if (label == "B" && (length_mm != 90.0 || width_mm != 55.0)) {
      throw DomainError("module B is 90x55 mm");
    }
    if (label == "C" && (length_mm != 90.0 || width_mm != 65.0)) {
      throw DomainError("module C is 90x65 mm");
    }
  }

  static ModuleSpec a() { return ModuleSpec("A", 65.0, 55.0); }
  static ModuleSpec b() { return ModuleSpec("B", 90.0, 55.0); }
  static ModuleSpec c() { return ModuleSpec("C", 90.0, 65.0); }
};

// Two-exponential torque-angle model at the 80 kPa reference pressure,
//   T_P(A) = a*exp(b*A) + c*exp(d*A)   [N-m, A in degrees]
// plus the linear torque-pressure relation at the 90 deg characterization
// angle, T_A(P) = f*P + g. Parameters are kept in the canonical order
// b <= d, which resolves the swap symmetry of the two exponential terms.
struct TorqueModel {
  double a = 0.0;  // N-m
  double b = 0.0;  // 1/deg
  double c = 0.0;  // N-m
  double d = 0.0;  // 1/deg
  double f = 0.0;  // N-m/kPa
  double g = 0.0;  // N-m
  double reference_pressure_kpa = kReferencePressureKpa;

  // Canonicalizes to b <= d; predictions are unchanged.
  static TorqueModel from_params(double a, double b, double c, double d,
                                 double f = 0.0, double g = 0.0) {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) ||
        !std::isfinite(d)) {
      throw DomainError("torque model parameters must be finite");
    }
    if (b > d) {
      std::swap(a, c);
      std::swap(b, d);
    }
    TorqueModel m;
    m.a = a;
    m.b = b;
    m.c = c;
    m.d = d;
    m.f = f;
    m.g = g;
    return m;
  }
};

// Geometry and torque anchors of one actuator build. The catalog variants
// D1/D2/D3 carry eight modules at 25 mm spacing; their anchors come from
// the blocked-torque characterization at 80 kPa.
struct ActuatorVariant {
  std::string name;
  std::vector<ModuleSpec> pattern;
  double spacing_mm = 25.0;
  double peak_torque_nm = 0.0;     // at A = 0 deg
  double torque_90_nm = 0.0;       // at A = 90 deg
  double plateau_torque_nm = 0.0;  // constant over A in [180, 270] deg
  std::optional<TorqueModel> reference_model;

  ActuatorVariant(std::string nm, std::vector<ModuleSpec> mods, double spacing,
                  double peak, double at90, double plateau)
      : name(std::move(nm)),
        pattern(std::move(mods)),
        spacing_mm(spacing),
        peak_torque_nm(peak),
        torque_90_nm(at90),
        plateau_torque_nm(plateau) {
    const bool catalog = name == "D1" || name == "D2" || name == "D3";
    if (catalog) {
      if (pattern.size() != 8) {
        throw DomainError("catalog variants carry exactly 8 modules");
      }
      if (spacing_mm != 25.0) {
        throw DomainError("catalog variants use 25 mm module spacing");
      }
      if (!(peak_torque_nm > torque_90_nm && torque_90_nm > plateau_torque_nm &&
            plateau_torque_nm > 0.0)) {
        throw DomainError("catalog variants require peak > torque@90 > plateau > 0");
      }
    } else {
      if (!(peak_torque_nm > 0.0) || !(torque_90_nm > 0.0) ||
          !(plateau_torque_nm > 0.0)) {
        throw DomainError("torque anchors must be positive");
      }
      if (peak_torque_nm < torque_90_nm || torque_90_nm < plateau_torque_nm) {
        throw DomainError("torque anchors must be non-increasing with angle");
      }
    }
  }
};

// Platform pose of an actuator: bend angle plus out-of-plane twist.
struct AngleConvention {
  double aa_angle_deg = 180.0;
  double bb_angle_deg = 0.0;

  AngleConvention(double aa, double bb) : aa_angle_deg(aa), bb_angle_deg(bb) {
    if (!(aa >= 0.0 && aa <= kAaAngleMaxDeg)) {
      throw DomainError("A-A' angle outside [0, 270] deg");
    }
    if (!(bb >= 0.0 && bb <= kBbAngleMaxDeg)) {
      throw DomainError("B-B' angle outside [0, 45] deg");
    }
  }
};

namespace detail {

inline void check_aa_angle(double aa_angle_deg) {
  if (!std::isfinite(aa_angle_deg) || aa_angle_deg < 0.0 ||
      aa_angle_deg > kAaAngleMaxDeg) {
    throw DomainError("A-A' angle outside [0, 270] deg");
  }
}

inline void check_pressure(double pressure_kpa) {
  if (!std::isfinite(pressure_kpa) || pressure_kpa < 0.0 ||
      pressure_kpa > kMaxPressureKpa) {
    throw DomainError("pressure outside [0, 150] kPa");
  }
}

}  // namespace detail

// T_P(A) at the 80 kPa reference pressure.
inline double torque_at_reference(const TorqueModel& model,
                                  double aa_angle_deg) {
  detail::check_aa_angle(aa_angle_deg);
  if (!std::isfinite(model.a) || !std::isfinite(model.b) ||
      !std::isfinite(model.c) || !std::isfinite(model.d)) {
    throw DomainError("torque model parameters must be finite");
  }
  return model.a * std::exp(model.b * aa_angle_deg) +
         model.c * std::exp(model.d * aa_angle_deg);
}

// T_A(P) = f*P + g at the angle where (f, g) were fitted (90 deg in the
// characterization rig).
inline double torque_at_pressure(const TorqueModel& model,
                                 double pressure_kpa) {
  detail::check_pressure(pressure_kpa);
  return model.f * pressure_kpa + model.g;
}

// Combined predictor: torque at any angle and pressure via the linear
// pressure ratio, T = (P / 80) * T_P(A).
inline double predict_torque(const TorqueModel& model, double aa_angle_deg,
                             double pressure_kpa) {
  detail::check_pressure(pressure_kpa);
  return (pressure_kpa / model.reference_pressure_kpa) *
         torque_at_reference(model, aa_angle_deg);
}

// Unloaded steady-state bend angle. Full bending (360 deg) is reached at
// 10 kPa and further pressure has no effect; the unmeasured region below
// 10 kPa is linearly interpolated for continuity.
inline double free_bend_angle(double pressure_kpa) {
  if (!std::isfinite(pressure_kpa) || pressure_kpa < 0.0) {
    throw DomainError("pressure must be nonnegative");
  }
  if (pressure_kpa >= kFullBendPressureKpa) return kFullBendAngleDeg;
  return kFullBendAngleDeg * (pressure_kpa / kFullBendPressureKpa);
}

// Torque about the B-B' axis. The platform detected no output above its
// 0.5 N-m floor anywhere in the tested range, so the model is zero.
inline double off_axis_torque(const TorqueModel& model, double aa_angle_deg,
                              double bb_angle_deg, double pressure_kpa) {
  detail::check_aa_angle(aa_angle_deg);
  detail::check_pressure(pressure_kpa);
  if (!(bb_angle_deg >= 0.0 && bb_angle_deg <= kBbAngleMaxDeg)) {
    throw DomainError("B-B' angle outside [0, 45] deg");
  }
  (void)model;
  return 0.0;
}

using AttenuationFn = std::function<double(double)>;

// A-A' torque under an out-of-plane twist. The contour magnitudes are not
// tabulated in the characterization, so the default attenuation is the
// identity; callers may supply a measured map bb_angle -> factor in [0, 1].
inline double aa_torque_with_bb(const TorqueModel& model, double aa_angle_deg,
                                double bb_angle_deg, double pressure_kpa,
                                const AttenuationFn& attenuation = {}) {
  if (!(bb_angle_deg >= 0.0 && bb_angle_deg <= kBbAngleMaxDeg)) {
    throw DomainError("B-B' angle outside [0, 45] deg");
  }
  double factor = 1.0;
  if (attenuation) {
    factor = attenuation(bb_angle_deg);
    if (!(factor >= 0.0 && factor <= 1.0)) {
      throw ContractViolation("attenuation factor outside [0, 1]");
    }
  }
  return predict_torque(model, aa_angle_deg, pressure_kpa) * factor;
}

}  // namespace pneusleeve
