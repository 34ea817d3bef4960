#pragma once

#include <vector>

#include "extherm/geometry.hpp"

namespace extherm {

enum class Side { XNeg = 0, XPos = 1, RNeg = 2, RPos = 3 };

struct Facet {
    int cell = -1;
    Side side = Side::XNeg;
    friend bool operator==(const Facet&, const Facet&) = default;
    friend bool operator<(const Facet& a, const Facet& b) {
        return a.cell != b.cell ? a.cell < b.cell : static_cast<int>(a.side) < static_cast<int>(b.side);
    }
};

/// One annular control volume (a disk when the inner radius is 0).
struct FvCell {
    int index = -1;
    double x_center = 0.0, delta_x = 0.0; // [m]
    double r_center = 0.0, delta_r = 0.0; // [m]
    int zone = 0;                         // index into FvMesh::zone_materials
    bool is_disk = false;

    double inner_radius() const { return r_center - delta_r / 2.0; }
    double outer_radius() const { return r_center + delta_r / 2.0; }
    double volume() const;
};

/// Tensor-product ring-cell grid. Cell ordering is row-major, axial fastest,
/// radially outward last: index = ir * n_a + ix.
struct FvMesh {
    std::vector<double> axial_edges;  // n_a + 1 entries
    std::vector<double> radial_edges; // n_r + 1 entries
    int n_a = 0, n_r = 0;
    std::vector<FvCell> cells;
    std::vector<int> ring_zone;                // per radial ring: zone index
    std::vector<ZoneKind> zone_kinds;          // per zone
    std::vector<MaterialZone> zone_materials;  // per zone

    std::vector<Facet> gamma1_facets;              // ambient-exposed
    std::vector<std::vector<Facet>> gamma2_facets; // per heating tape
    std::vector<Facet> gamma3_facets;              // cylinder/granulate cut

    int cell_index(int ix, int ir) const { return ir * n_a + ix; }
    const FvCell& cell(int ix, int ir) const { return cells[cell_index(ix, ir)]; }
    const MaterialZone& material(const FvCell& c) const { return zone_materials[c.zone]; }
    ZoneKind kind(const FvCell& c) const { return zone_kinds[c.zone]; }
    int cell_count() const { return n_a * n_r; }

    /// -1 when the facet is on the domain boundary.
    int neighbor(int cell, Side side) const;

    std::vector<Facet> exterior_facets() const; // excludes zero-area axis facets
    double total_volume() const;
};

struct BoundarySets {
    std::vector<Facet> gamma1;
    std::vector<std::vector<Facet>> gamma2_per_tape;
    std::vector<Facet> gamma3;
};

/// Low-level constructor from explicit edge lists and a ring->zone map.
FvMesh make_mesh(std::vector<double> axial_edges, std::vector<double> radial_edges,
                 std::vector<int> ring_zone, std::vector<ZoneKind> zone_kinds,
                 std::vector<MaterialZone> zone_materials);

/// Builds the three-zone extruder grid. Radial zone interfaces (r_c, d1/2)
/// are forced onto cell faces; remaining radial edges are uniform per zone,
/// axial edges uniform. Boundary facet sets are classified on the result.
FvMesh build_mesh(const ExtruderGeometry& geometry, const MaterialSet& materials,
                  int n_a, int n_r, bool snap_axial_edges_to_tapes = false);

/// Total classification of the outer boundary into Gamma1/Gamma2 plus the
/// Gamma3 cut-surface facets (interior radial interface at d1/2 and the
/// axial end facets of the screw region).
BoundarySets classify_boundary(const FvMesh& mesh, const ExtruderGeometry& geometry);

struct SensorBinding {
    std::string label;
    int cell = -1;
    double x_snap = 0.0, r_snap = 0.0;   // cell-center position actually used
    double offset_x = 0.0, offset_r = 0.0; // requested minus snapped
};

/// Maps each sensor to the nearest cell center; offsets are reported so the
/// caller can refine the grid when they exceed dx/2 or dr/2.
std::vector<SensorBinding> bind_sensors(const FvMesh& mesh, const std::vector<SensorSpec>& sensors);

} // namespace extherm
