#include "extherm/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "extherm/errors.hpp"

namespace extherm {

double FvCell::volume() const {
    return 2.0 * std::numbers::pi * r_center * delta_r * delta_x;
}

int FvMesh::neighbor(int cell, Side side) const {
    const int ix = cell % n_a;
    const int ir = cell / n_a;
    switch (side) {
        case Side::XNeg: return ix > 0 ? cell_index(ix - 1, ir) : -1;
        case Side::XPos: return ix < n_a - 1 ? cell_index(ix + 1, ir) : -1;
        case Side::RNeg: return ir > 0 ? cell_index(ix, ir - 1) : -1;
        case Side::RPos: return ir < n_r - 1 ? cell_index(ix, ir + 1) : -1;
    }
    return -1;
}

std::vector<Facet> FvMesh::exterior_facets() const {
    std::vector<Facet> out;
    for (const auto& c : cells) {
        const int ix = c.index % n_a;
        const int ir = c.index / n_a;
        if (ix == 0) out.push_back({c.index, Side::XNeg});
        if (ix == n_a - 1) out.push_back({c.index, Side::XPos});
        if (ir == 0 && !c.is_disk) out.push_back({c.index, Side::RNeg});
        if (ir == n_r - 1) out.push_back({c.index, Side::RPos});
    }
    return out;
}

double FvMesh::total_volume() const {
    double v = 0.0;
    for (const auto& c : cells) v += c.volume();
    return v;
}

FvMesh make_mesh(std::vector<double> axial_edges, std::vector<double> radial_edges,
                 std::vector<int> ring_zone, std::vector<ZoneKind> zone_kinds,
                 std::vector<MaterialZone> zone_materials) {
    if (axial_edges.size() < 2 || radial_edges.size() < 2)
        throw ConfigError("mesh: need at least one cell in each direction");
    if (!std::is_sorted(axial_edges.begin(), axial_edges.end()) ||
        !std::is_sorted(radial_edges.begin(), radial_edges.end()))
        throw ConfigError("mesh: edge coordinates must be sorted");
    if (radial_edges.front() < 0.0)
        throw ConfigError("mesh: radial edges must be nonnegative");
    FvMesh m;
    m.axial_edges = std::move(axial_edges);
    m.radial_edges = std::move(radial_edges);
    m.n_a = static_cast<int>(m.axial_edges.size()) - 1;
    m.n_r = static_cast<int>(m.radial_edges.size()) - 1;
    if (ring_zone.size() != static_cast<size_t>(m.n_r))
        throw ConfigError("mesh: ring_zone size must equal n_r");
    m.ring_zone = std::move(ring_zone);
    m.zone_kinds = std::move(zone_kinds);
    m.zone_materials = std::move(zone_materials);
    m.cells.resize(static_cast<size_t>(m.n_a) * m.n_r);
    for (int ir = 0; ir < m.n_r; ++ir) {
        const double r0 = m.radial_edges[ir], r1 = m.radial_edges[ir + 1];
        for (int ix = 0; ix < m.n_a; ++ix) {
            const double x0 = m.axial_edges[ix], x1 = m.axial_edges[ix + 1];
            FvCell c;
            c.index = m.cell_index(ix, ir);
            c.x_center = 0.5 * (x0 + x1);
            c.delta_x = x1 - x0;
            c.r_center = 0.5 * (r0 + r1);
            c.delta_r = r1 - r0;
            c.zone = m.ring_zone[ir];
            c.is_disk = (r0 == 0.0);
            if (!(c.volume() > 0.0))
                throw ConfigError("mesh: degenerate cell (zero volume)");
            m.cells[c.index] = c;
        }
    }
    m.gamma2_facets.clear();
    return m;
}

namespace {

// Split n_r rings across the zones proportionally to thickness, at least one
// ring per zone, remainders by largest fractional part (deterministic).
std::vector<int> allocate_rings(const std::vector<double>& thickness, int n_r) {
    const int nz = static_cast<int>(thickness.size());
    if (n_r < nz)
        throw ConfigError("grid: n_r must be at least " + std::to_string(nz) +
                          " (one ring per material zone)");
    double total = 0.0;
    for (double t : thickness) total += t;
    std::vector<int> count(nz, 1);
    std::vector<double> frac(nz);
    int assigned = nz;
    for (int z = 0; z < nz; ++z) {
        const double ideal = thickness[z] / total * n_r;
        const int extra = std::max(0, static_cast<int>(std::floor(ideal)) - 1);
        count[z] += extra;
        assigned += extra;
        frac[z] = ideal - std::floor(ideal);
    }
    while (assigned < n_r) {
        int best = 0;
        for (int z = 1; z < nz; ++z)
            if (frac[z] > frac[best]) best = z;
        count[best] += 1;
        frac[best] -= 1.0;
        ++assigned;
    }
    while (assigned > n_r) { // floor sum exceeded n_r; trim largest counts
        int best = 0;
        for (int z = 1; z < nz; ++z)
            if (count[z] > count[best]) best = z;
        if (count[best] <= 1)
            throw ConfigError("grid: cannot place zone boundaries with n_r given");
        count[best] -= 1;
        --assigned;
    }
    return count;
}

} // namespace

FvMesh build_mesh(const ExtruderGeometry& geometry, const MaterialSet& materials,
                  int n_a, int n_r, bool snap_axial_edges_to_tapes) {
    geometry.validate();
    materials.validate();
    if (n_a < 1) throw ConfigError("grid: n_a must be >= 1");
    if (n_r < 3) throw ConfigError("grid: n_r must be >= 3 (one ring per zone)");

    const double rc = geometry.core_radius_rc;
    const double r1 = geometry.inner_diameter_d1 / 2.0;
    const double r2 = geometry.outer_diameter_d2 / 2.0;
    const std::vector<double> zone_lo{0.0, rc, r1};
    const std::vector<double> zone_hi{rc, r1, r2};
    const std::vector<double> thickness{rc, r1 - rc, r2 - r1};
    const std::vector<int> rings = allocate_rings(thickness, n_r);

    std::vector<double> radial_edges;
    std::vector<int> ring_zone;
    radial_edges.push_back(0.0);
    for (int z = 0; z < 3; ++z) {
        for (int k = 1; k <= rings[z]; ++k) {
            radial_edges.push_back(zone_lo[z] + (zone_hi[z] - zone_lo[z]) * k / rings[z]);
            ring_zone.push_back(z);
        }
        radial_edges.back() = zone_hi[z]; // interface lands on a face exactly
    }

    std::vector<double> axial_edges(n_a + 1);
    for (int k = 0; k <= n_a; ++k)
        axial_edges[k] = geometry.length_L * k / n_a;
    if (snap_axial_edges_to_tapes) {
        for (const auto& tape : geometry.heating_tapes) {
            for (double target : {tape.axial_start, tape.axial_end}) {
                int best = 1;
                for (int k = 1; k < n_a; ++k)
                    if (std::abs(axial_edges[k] - target) < std::abs(axial_edges[best] - target))
                        best = k;
                if (axial_edges[best - 1] < target && target < axial_edges[best + 1])
                    axial_edges[best] = target;
            }
        }
    }

    FvMesh mesh = make_mesh(axial_edges, radial_edges, ring_zone,
                            {ZoneKind::ScrewCore, ZoneKind::ScrewConveyor, ZoneKind::Cylinder},
                            {materials.screw_core, materials.screw_conveyor, materials.cylinder});

    BoundarySets sets = classify_boundary(mesh, geometry);
    mesh.gamma1_facets = std::move(sets.gamma1);
    mesh.gamma2_facets = std::move(sets.gamma2_per_tape);
    mesh.gamma3_facets = std::move(sets.gamma3);
    return mesh;
}

BoundarySets classify_boundary(const FvMesh& mesh, const ExtruderGeometry& geometry) {
    BoundarySets sets;
    sets.gamma2_per_tape.resize(geometry.heating_tapes.size());
    const double r1 = geometry.inner_diameter_d1 / 2.0;

    for (const auto& c : mesh.cells) {
        const int ix = c.index % mesh.n_a;
        const int ir = c.index / mesh.n_a;
        const bool is_cylinder = mesh.kind(c) == ZoneKind::Cylinder;

        if (ir == mesh.n_r - 1) { // outer surface r = d2/2
            int tape = -1;
            for (size_t j = 0; j < geometry.heating_tapes.size(); ++j) {
                const auto& t = geometry.heating_tapes[j];
                if (c.x_center >= t.axial_start && c.x_center < t.axial_end) {
                    tape = static_cast<int>(j);
                    break;
                }
            }
            if (tape >= 0)
                sets.gamma2_per_tape[tape].push_back({c.index, Side::RPos});
            else
                sets.gamma1.push_back({c.index, Side::RPos});
        }
        if (ix == 0) {
            if (is_cylinder)
                sets.gamma1.push_back({c.index, Side::XNeg});
            else
                sets.gamma3.push_back({c.index, Side::XNeg});
        }
        if (ix == mesh.n_a - 1) {
            if (is_cylinder)
                sets.gamma1.push_back({c.index, Side::XPos});
            else
                sets.gamma3.push_back({c.index, Side::XPos});
        }
        // interior cut surface at r = d1/2: inward facet of the innermost
        // cylinder ring
        if (is_cylinder && std::abs(c.inner_radius() - r1) < 1e-12 * (1.0 + r1)) {
            if (ir > 0 && mesh.kind(mesh.cells[mesh.cell_index(ix, ir - 1)]) != ZoneKind::Cylinder)
                sets.gamma3.push_back({c.index, Side::RNeg});
        }
    }
    return sets;
}

std::vector<SensorBinding> bind_sensors(const FvMesh& mesh, const std::vector<SensorSpec>& sensors) {
    std::vector<SensorBinding> out;
    out.reserve(sensors.size());
    for (const auto& s : sensors) {
        int best = 0;
        double best_d = 1e300;
        for (const auto& c : mesh.cells) {
            const double dx = c.x_center - s.axial_pos;
            const double dr = c.r_center - s.radial_pos;
            const double d = dx * dx + dr * dr;
            if (d < best_d) {
                best_d = d;
                best = c.index;
            }
        }
        const auto& c = mesh.cells[best];
        out.push_back({s.label, best, c.x_center, c.r_center,
                       s.axial_pos - c.x_center, s.radial_pos - c.r_center});
    }
    return out;
}

} // namespace extherm
