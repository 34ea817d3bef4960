#pragma once

#include <string>
#include <vector>

namespace extherm {

struct HeatingTape {
    double axial_start = 0.0; // [m]
    double axial_end = 0.0;   // [m]
    int zone_id = 0;          // heating zone this tape is wired into
};

struct SensorSpec {
    std::string label;
    double axial_pos = 0.0;  // [m]
    double radial_pos = 0.0; // [m]
};

/// Barrel geometry: cylinder of length L, bore d1, outer diameter d2,
/// screw core up to r_c, band heaters clamped on the outside.
struct ExtruderGeometry {
    double length_L = 0.0;
    double inner_diameter_d1 = 0.0;
    double outer_diameter_d2 = 0.0;
    double core_radius_rc = 0.0;
    std::vector<HeatingTape> heating_tapes;
    int num_heating_zones = 0;
    std::vector<SensorSpec> sensors;

    void validate() const; // throws ConfigError on any violated invariant
};

enum class ZoneKind { Cylinder, ScrewConveyor, ScrewCore };

const char* zone_kind_name(ZoneKind k);

struct MaterialZone {
    double density_rho = 0.0;        // [kg/m^3]
    double heat_capacity_cp = 0.0;   // [J/(kg K)]
    double conductivity_lambda = 0.0; // [W/(m K)]

    void validate(const std::string& where) const;
};

struct MaterialSet {
    MaterialZone cylinder;
    MaterialZone screw_conveyor;
    MaterialZone screw_core;

    const MaterialZone& for_kind(ZoneKind k) const;
    void validate() const;
};

} // namespace extherm
