#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pneusleeve/actuator.hpp"
#include "pneusleeve/variants.hpp"

using namespace pneusleeve;
using Catch::Matchers::WithinAbs;

namespace {
const TorqueModel& model_of(const std::string& name) {
  return *catalog_variant(name).reference_model;
}
}  // namespace

TEST_CASE("module specs enforce the catalog dimensions") {
  CHECK(ModuleSpec::a().length_mm == 65.0);
  CHECK(ModuleSpec::b().width_mm == 55.0);
  CHECK(ModuleSpec::c().width_mm == 65.0);
  CHECK_THROWS_AS(ModuleSpec("A", 90.0, 55.0), DomainError);
  CHECK_THROWS_AS(ModuleSpec("X", -1.0, 55.0), DomainError);
  CHECK_NOTHROW(ModuleSpec("X", 40.0, 30.0));
}

TEST_CASE("catalog variants carry eight modules at 25 mm spacing") {
  for (const auto* name : {"D1", "D2", "D3"}) {
    const auto& v = catalog_variant(name);
    CHECK(v.pattern.size() == 8);
    CHECK(v.spacing_mm == 25.0);
    CHECK(v.peak_torque_nm > v.torque_90_nm);
    CHECK(v.torque_90_nm > v.plateau_torque_nm);
    CHECK(v.plateau_torque_nm > 0.0);
    REQUIRE(v.reference_model.has_value());
  }
  CHECK_THROWS_AS(catalog_variant("D4"), DomainError);
  CHECK_THROWS_AS(
      ActuatorVariant("D1", {ModuleSpec::a()}, 25.0, 10.24, 1.27, 0.84),
      DomainError);
  CHECK_THROWS_AS(ActuatorVariant("D1",
                                  std::vector<ModuleSpec>(8, ModuleSpec::a()),
                                  25.0, 1.0, 2.0, 0.5),
                  DomainError);
}

TEST_CASE("angle convention enforces platform ranges") {
  CHECK_NOTHROW(AngleConvention(0.0, 0.0));
  CHECK_NOTHROW(AngleConvention(270.0, 45.0));
  CHECK_THROWS_AS(AngleConvention(-1.0, 0.0), DomainError);
  CHECK_THROWS_AS(AngleConvention(271.0, 0.0), DomainError);
  CHECK_THROWS_AS(AngleConvention(90.0, 46.0), DomainError);
}

TEST_CASE("torque_at_reference reproduces the operating anchors") {
  CHECK_THAT(torque_at_reference(model_of("D2"), 0.0), WithinAbs(11.15, 1e-9));
  CHECK_THAT(torque_at_reference(model_of("D2"), 90.0), WithinAbs(4.44, 1e-9));
  CHECK_THAT(torque_at_reference(model_of("D1"), 0.0), WithinAbs(10.24, 1e-9));
  CHECK_THAT(torque_at_reference(model_of("D3"), 0.0), WithinAbs(15.54, 1e-9));

  const auto zero = TorqueModel::from_params(0.0, -0.01, 0.0, 0.0);
  CHECK(torque_at_reference(zero, 135.0) == 0.0);

  CHECK_THROWS_AS(torque_at_reference(model_of("D2"), -5.0), DomainError);
  CHECK_THROWS_AS(torque_at_reference(model_of("D2"), 300.0), DomainError);
}

TEST_CASE("plateau behavior of the derived models") {
  // D1 and D3 anchors are exactly representable: the plateau is pinned at
  // both ends of the 180-270 band.
  for (const auto* name : {"D1", "D3"}) {
    const auto& v = catalog_variant(name);
    CHECK_THAT(torque_at_reference(*v.reference_model, 180.0),
               WithinAbs(v.plateau_torque_nm, 1e-9));
    CHECK_THAT(torque_at_reference(*v.reference_model, 270.0),
               WithinAbs(v.plateau_torque_nm, 1e-9));
  }
  // D1's interpolant is genuinely flat across the band.
  CHECK_THAT(torque_at_reference(model_of("D1"), 225.0), WithinAbs(0.84, 0.01));
  // D3's interpolant sags mid-band: two real exponentials cannot hold a
  // constant 1.80 between pinned ends after the 15.54 -> 4.66 drop. The sag
  // bound is a property of the model class, not of the fitter.
  CHECK_THAT(torque_at_reference(model_of("D3"), 225.0), WithinAbs(1.80, 0.26));
  CHECK(torque_at_reference(model_of("D3"), 225.0) > 1.5);
}

TEST_CASE("torque_at_pressure is the fitted line at 90 degrees") {
  TorqueModel m;
  m.f = 0.0555;
  m.g = 0.0;
  CHECK_THAT(torque_at_pressure(m, 80.0), WithinAbs(4.44, 1e-12));
  CHECK(torque_at_pressure(m, 0.0) == 0.0);
  CHECK_THAT(torque_at_pressure(m, 40.0), WithinAbs(2.22, 1e-12));
  CHECK_THROWS_AS(torque_at_pressure(m, -1.0), DomainError);
  CHECK_THROWS_AS(torque_at_pressure(m, 151.0), DomainError);
}

TEST_CASE("predict_torque scales the reference curve linearly in pressure") {
  const auto& d2 = model_of("D2");
  CHECK_THAT(predict_torque(d2, 90.0, 80.0), WithinAbs(4.44, 1e-9));
  CHECK(predict_torque(d2, 90.0, 0.0) == 0.0);
  CHECK_THAT(predict_torque(d2, 90.0, 40.0), WithinAbs(2.22, 1e-9));
  CHECK_THROWS_AS(predict_torque(d2, 90.0, 200.0), DomainError);

  // At the reference pressure the ratio is exactly 1.
  for (double a = 0.0; a <= 270.0; a += 13.5) {
    CHECK(predict_torque(d2, a, 80.0) == torque_at_reference(d2, a));
  }
  // Linearity in pressure.
  for (double lam : {0.0, 0.25, 0.5, 1.0}) {
    CHECK_THAT(predict_torque(d2, 45.0, lam * 80.0),
               WithinAbs(lam * predict_torque(d2, 45.0, 80.0), 1e-12));
  }
}

TEST_CASE("free bending saturates at 10 kPa") {
  CHECK(free_bend_angle(10.0) == 360.0);
  CHECK(free_bend_angle(0.0) == 0.0);
  CHECK(free_bend_angle(80.0) == 360.0);
  CHECK_THAT(free_bend_angle(5.0), WithinAbs(180.0, 1e-12));
  CHECK_THROWS_AS(free_bend_angle(-1.0), DomainError);
}

TEST_CASE("no significant torque appears along the B-B' axis") {
  CHECK(off_axis_torque(model_of("D2"), 90.0, 30.0, 80.0) == 0.0);
  CHECK(off_axis_torque(model_of("D2"), 90.0, 0.0, 80.0) == 0.0);
  CHECK(off_axis_torque(model_of("D1"), 180.0, 45.0, 80.0) == 0.0);
  CHECK_THROWS_AS(off_axis_torque(model_of("D2"), 90.0, 50.0, 80.0),
                  DomainError);
}

TEST_CASE("A-A' torque under twist applies the attenuation factor") {
  const auto& d2 = model_of("D2");
  CHECK_THAT(aa_torque_with_bb(d2, 90.0, 0.0, 80.0), WithinAbs(4.44, 1e-9));
  const AttenuationFn ramp = [](double bb) { return 1.0 - bb / 90.0; };
  CHECK_THAT(aa_torque_with_bb(d2, 90.0, 45.0, 80.0, ramp),
             WithinAbs(2.22, 1e-9));
  CHECK(aa_torque_with_bb(d2, 90.0, 45.0, 0.0, ramp) == 0.0);
  const AttenuationFn bad = [](double) { return 1.5; };
  CHECK_THROWS_AS(aa_torque_with_bb(d2, 90.0, 30.0, 80.0, bad),
                  ContractViolation);
}

TEST_CASE("derived reference curves are positive and decay monotonically") {
  for (const auto* name : {"D1", "D2", "D3"}) {
    const auto& m = model_of(name);
    double prev = torque_at_reference(m, 0.0);
    for (double a = 0.1; a <= 180.0; a += 0.1) {
      const double t = torque_at_reference(m, a);
      CHECK(t < prev);
      prev = t;
    }
    for (double a = 0.0; a <= 270.0; a += 0.25) {
      CHECK(torque_at_reference(m, a) > 0.0);
    }
  }
}

TEST_CASE("plateau-band variation of the derived models") {
  const auto band_variation = [](const TorqueModel& m) {
    double tv = 0.0;
    double prev = torque_at_reference(m, 180.0);
    for (double a = 180.1; a <= 270.0; a += 0.1) {
      const double t = torque_at_reference(m, a);
      tv += std::abs(t - prev);
      prev = t;
    }
    return tv;
  };
  // D1's anchors are representable with a near-flat tail.
  CHECK(band_variation(model_of("D1")) <
        0.05 * catalog_variant("D1").plateau_torque_nm);
  // D2 and D3 cannot be flat there (see derive_reference_model); pin the
  // actual class-limited variation so regressions are visible.
  CHECK(band_variation(model_of("D2")) <
        0.60 * catalog_variant("D2").plateau_torque_nm);
  CHECK(band_variation(model_of("D3")) <
        0.30 * catalog_variant("D3").plateau_torque_nm);
}
