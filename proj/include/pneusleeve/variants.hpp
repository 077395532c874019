#pragma once

#include <string>
#include <vector>

#include "pneusleeve/actuator.hpp"
#include "pneusleeve/errors.hpp"
#include "pneusleeve/fit.hpp"

// The three characterized builds. Patterns alternate with the bridging
// module A (a homogeneous pattern buckles); anchors are the measured
// blocked torques at 80 kPa.

namespace pneusleeve {

namespace detail {

inline std::vector<ModuleSpec> repeat_pair(const ModuleSpec& first,
                                           const ModuleSpec& second) {
  std::vector<ModuleSpec> out;
  for (int i = 0; i < 4; ++i) {
    out.push_back(first);
    out.push_back(second);
  }
  return out;
}

inline ActuatorVariant make_catalog_variant(const std::string& name) {
  if (name == "D1") {
    ActuatorVariant v(name, repeat_pair(ModuleSpec::a(), ModuleSpec::a()), 25.0,
                      10.24, 1.27, 0.84);
    ensure_reference_model(v);
    return v;
  }
  if (name == "D2") {
    ActuatorVariant v(name, repeat_pair(ModuleSpec::a(), ModuleSpec::b()), 25.0,
                      11.15, 4.44, 1.54);
    ensure_reference_model(v);
    return v;
  }
  if (name == "D3") {
    ActuatorVariant v(name, repeat_pair(ModuleSpec::a(), ModuleSpec::c()), 25.0,
                      15.54, 4.66, 1.80);
    ensure_reference_model(v);
    return v;
  }
  throw DomainError("unknown actuator variant: " + name);
}

}  // namespace detail

// Returns the named catalog variant with its reference model derived.
inline const ActuatorVariant& catalog_variant(const std::string& name) {
  static const ActuatorVariant d1 = detail::make_catalog_variant("D1");
  static const ActuatorVariant d2 = detail::make_catalog_variant("D2");
  static const ActuatorVariant d3 = detail::make_catalog_variant("D3");
  if (name == "D1") return d1;
  if (name == "D2") return d2;
  if (name == "D3") return d3;
  throw DomainError("unknown actuator variant: " + name);
}

inline bool is_catalog_variant(const std::string& name) {
  return name == "D1" || name == "D2" || name == "D3";
}

}  // namespace pneusleeve
