#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "extherm/config.hpp"
#include "extherm/errors.hpp"
#include "extherm/mesh.hpp"
#include "helpers.hpp"

using namespace extherm;

TEST_CASE("reference grid dimensions and zone layout") {
    const ProjectConfig cfg = reference_config();
    const FvMesh m = build_mesh(cfg.geometry, cfg.materials, 35, 6);
    CHECK(m.n_a == 35);
    CHECK(m.n_r == 6);
    CHECK(m.cell_count() == 210);
    // equal radial thirds -> two rings per zone
    REQUIRE(m.ring_zone.size() == 6);
    CHECK(m.zone_kinds[m.ring_zone[0]] == ZoneKind::ScrewCore);
    CHECK(m.zone_kinds[m.ring_zone[1]] == ZoneKind::ScrewCore);
    CHECK(m.zone_kinds[m.ring_zone[2]] == ZoneKind::ScrewConveyor);
    CHECK(m.zone_kinds[m.ring_zone[3]] == ZoneKind::ScrewConveyor);
    CHECK(m.zone_kinds[m.ring_zone[4]] == ZoneKind::Cylinder);
    CHECK(m.zone_kinds[m.ring_zone[5]] == ZoneKind::Cylinder);
    // zone interfaces exactly on faces
    CHECK(m.radial_edges[2] == doctest::Approx(0.03).epsilon(1e-14));
    CHECK(m.radial_edges[4] == doctest::Approx(0.06).epsilon(1e-14));
    CHECK(m.radial_edges[6] == doctest::Approx(0.09).epsilon(1e-14));
    // total volume equals the solid cylinder of radius d2/2
    const double v_exact = std::numbers::pi * 0.09 * 0.09 * 1.75;
    CHECK(m.total_volume() == doctest::Approx(v_exact).epsilon(1e-12));
}

TEST_CASE("cell ordering and neighbors") {
    const ProjectConfig cfg = testing::small_config();
    const FvMesh m = build_mesh(cfg.geometry, cfg.materials, cfg.grid.n_a, cfg.grid.n_r);
    for (int ir = 0; ir < m.n_r; ++ir)
        for (int ix = 0; ix < m.n_a; ++ix) {
            const int i = m.cell_index(ix, ir);
            CHECK(i == ir * m.n_a + ix);
            // neighbor relation is symmetric
            const int right = m.neighbor(i, Side::XPos);
            if (right >= 0) CHECK(m.neighbor(right, Side::XNeg) == i);
            const int up = m.neighbor(i, Side::RPos);
            if (up >= 0) CHECK(m.neighbor(up, Side::RNeg) == i);
        }
    // innermost ring is made of disk cells and has no RNeg exterior facet
    for (const auto& f : m.exterior_facets()) {
        if (f.side == Side::RNeg) CHECK_FALSE(m.cells[f.cell].is_disk);
    }
}

TEST_CASE("boundary classification covers the outer surface exactly once") {
    const ProjectConfig cfg = reference_config();
    const FvMesh m = build_mesh(cfg.geometry, cfg.materials, 35, 6);
    std::set<Facet> seen;
    for (const auto& f : m.gamma1_facets) CHECK(seen.insert(f).second);
    for (const auto& per_tape : m.gamma2_facets)
        for (const auto& f : per_tape) CHECK(seen.insert(f).second);
    int gamma3_exterior = 0;
    for (const auto& f : m.gamma3_facets) {
        if (m.neighbor(f.cell, f.side) < 0) {
            CHECK(seen.insert(f).second);
            ++gamma3_exterior;
        }
    }
    CHECK(seen.size() == m.exterior_facets().size());
    // 12 tapes x 2 cells each on the dx = 0.05 grid
    REQUIRE(m.gamma2_facets.size() == 12);
    for (const auto& per_tape : m.gamma2_facets) CHECK(per_tape.size() == 2);
    // screw region: 4 rings at each end face
    CHECK(gamma3_exterior == 8);
    // radial cut: one interior facet per axial element
    int gamma3_radial = 0;
    for (const auto& f : m.gamma3_facets)
        if (m.neighbor(f.cell, f.side) >= 0) ++gamma3_radial;
    CHECK(gamma3_radial == 35);
}

TEST_CASE("sensor binding snaps to the nearest cell center") {
    const ProjectConfig cfg = reference_config();
    const FvMesh m = build_mesh(cfg.geometry, cfg.materials, 35, 6);
    const auto bindings = bind_sensors(m, cfg.geometry.sensors);
    REQUIRE(bindings.size() == 14);
    for (const auto& b : bindings) {
        CHECK(std::abs(b.offset_x) < 1e-12);
        CHECK(std::abs(b.offset_r) < 1e-12);
        const auto& c = m.cells[b.cell];
        CHECK(m.zone_kinds[c.zone] == ZoneKind::Cylinder);
    }
    // an off-grid request reports its offset
    const auto off = bind_sensors(m, {{"X", 0.026, 0.0675}});
    CHECK(off[0].offset_x == doctest::Approx(0.001).epsilon(1e-9));
}

TEST_CASE("grid validation errors") {
    const ProjectConfig cfg = reference_config();
    CHECK_THROWS_AS(build_mesh(cfg.geometry, cfg.materials, 35, 2), ConfigError);
    CHECK_THROWS_AS(build_mesh(cfg.geometry, cfg.materials, 0, 6), ConfigError);
    ExtruderGeometry bad = cfg.geometry;
    bad.core_radius_rc = 0.07; // exceeds d1/2
    CHECK_THROWS_AS(build_mesh(bad, cfg.materials, 35, 6), ConfigError);
}

TEST_CASE("make_mesh supports annuli with positive inner radius") {
    const MaterialZone steel{7850.0, 460.0, 50.0};
    const FvMesh m = make_mesh({0.0, 0.1}, {0.06, 0.07, 0.08, 0.09}, {0, 0, 0},
                               {ZoneKind::Cylinder}, {steel});
    CHECK(m.cell_count() == 3);
    for (const auto& c : m.cells) CHECK_FALSE(c.is_disk);
    // RNeg of the innermost ring is a real exterior facet here
    bool has_inner = false;
    for (const auto& f : m.exterior_facets())
        if (f.side == Side::RNeg && f.cell == 0) has_inner = true;
    CHECK(has_inner);
}
