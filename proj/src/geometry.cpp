#include "extherm/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "extherm/errors.hpp"

namespace extherm {

const char* zone_kind_name(ZoneKind k) {
    switch (k) {
        case ZoneKind::Cylinder: return "cylinder";
        case ZoneKind::ScrewConveyor: return "screw_conveyor";
        case ZoneKind::ScrewCore: return "screw_core";
    }
    return "?";
}

void ExtruderGeometry::validate() const {
    if (!(length_L > 0.0))
        throw ConfigError("geometry.length_L must be positive");
    const double r1 = inner_diameter_d1 / 2.0;
    const double r2 = outer_diameter_d2 / 2.0;
    if (!(core_radius_rc > 0.0 && core_radius_rc < r1 && r1 < r2))
        throw ConfigError("geometry: require 0 < core_radius_rc < d1/2 < d2/2");

    std::vector<HeatingTape> sorted = heating_tapes;
    std::sort(sorted.begin(), sorted.end(),
              [](const HeatingTape& a, const HeatingTape& b) { return a.axial_start < b.axial_start; });
    double prev_end = -1.0;
    for (const auto& t : sorted) {
        if (!(t.axial_start < t.axial_end))
            throw ConfigError("geometry.heating_tapes: tape interval is empty or reversed");
        if (t.axial_start < -1e-12 || t.axial_end > length_L + 1e-12)
            throw ConfigError("geometry.heating_tapes: tape extends outside [0, L]");
        if (t.axial_start < prev_end - 1e-12)
            throw ConfigError("geometry.heating_tapes: tape intervals overlap");
        prev_end = t.axial_end;
        if (t.zone_id < 0 || t.zone_id >= num_heating_zones)
            throw ConfigError("geometry.heating_tapes: zone_id out of [0, num_heating_zones)");
    }
    if (num_heating_zones > 0 && !heating_tapes.empty()) {
        if (heating_tapes.size() % static_cast<size_t>(num_heating_zones) != 0)
            throw ConfigError("geometry: heating tape count must be a multiple of num_heating_zones");
    }
    for (const auto& s : sensors) {
        if (s.axial_pos < -1e-12 || s.axial_pos > length_L + 1e-12 ||
            s.radial_pos < -1e-12 || s.radial_pos > r2 + 1e-12)
            throw ConfigError("geometry.sensors: sensor '" + s.label +
                              "' lies outside the modeling rectangle [0,L]x[0,d2/2]");
    }
}

void MaterialZone::validate(const std::string& where) const {
    if (!(density_rho > 0.0 && heat_capacity_cp > 0.0 && conductivity_lambda > 0.0))
        throw ConfigError("materials." + where + ": rho, c_p and lambda must all be positive");
}

const MaterialZone& MaterialSet::for_kind(ZoneKind k) const {
    switch (k) {
        case ZoneKind::Cylinder: return cylinder;
        case ZoneKind::ScrewConveyor: return screw_conveyor;
        case ZoneKind::ScrewCore: return screw_core;
    }
    return cylinder;
}

void MaterialSet::validate() const {
    cylinder.validate("cylinder");
    screw_conveyor.validate("screw_conveyor");
    screw_core.validate("screw_core");
}

} // namespace extherm
