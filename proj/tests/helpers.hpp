#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "extherm/config.hpp"
#include "extherm/timeseries.hpp"

namespace extherm::testing {

/// Four-zone exponential heat-up record: tapes rise from T0 towards per-zone
/// targets with time constant tau, ambient held at T0.
inline TimeSeries heatup_record(const ProjectConfig& cfg, double dt, double duration,
                                const std::vector<double>& targets, double tau = 600.0,
                                double T0 = 293.15) {
    TimeSeries u;
    for (const auto& name : cfg.input_labels()) u.add_channel(name);
    const int steps = static_cast<int>(duration / dt) + 1;
    for (int k = 0; k < steps; ++k) {
        const double t = k * dt;
        u.time.push_back(t);
        for (int z = 0; z < cfg.geometry.num_heating_zones; ++z)
            u.columns[z].push_back(T0 + (targets[z] - T0) * (1.0 - std::exp(-t / tau)));
        u.columns.back().push_back(T0);
    }
    return u;
}

/// Small but fully featured configuration (three zones, four tapes in two
/// heating zones, four sensors) for tests that rebuild models repeatedly.
inline ProjectConfig small_config() {
    ProjectConfig cfg;
    cfg.geometry.length_L = 0.8;
    cfg.geometry.inner_diameter_d1 = 0.12;
    cfg.geometry.outer_diameter_d2 = 0.18;
    cfg.geometry.core_radius_rc = 0.03;
    cfg.geometry.num_heating_zones = 2;
    // edges on the n_a = 8 grid (dx = 0.1)
    cfg.geometry.heating_tapes = {{0.0, 0.1, 0}, {0.2, 0.3, 0}, {0.4, 0.5, 1}, {0.6, 0.7, 1}};
    cfg.geometry.sensors = {{"S0", 0.05, 0.0675},
                            {"S1", 0.25, 0.0675},
                            {"S2", 0.45, 0.0675},
                            {"S3", 0.65, 0.0675}};
    cfg.materials.cylinder = {7850.0, 460.0, 50.0};
    cfg.materials.screw_conveyor = {3000.0, 800.0, 2.5};
    cfg.materials.screw_core = {7850.0, 460.0, 50.0};
    cfg.grid.n_a = 8;
    cfg.grid.n_r = 6;
    cfg.boundary.ambient_alpha = {15.0, 15.0};
    cfg.boundary.tape_alpha_ht = {180.0, 180.0, 180.0, 180.0};
    cfg.validate();
    return cfg;
}

/// Randomized but valid configuration; tapes and sensors are grid-aligned.
inline ProjectConfig random_config(std::mt19937& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    ProjectConfig cfg;
    const int n_a = 6 + static_cast<int>(uni(rng) * 10);
    const int n_r = 3 + static_cast<int>(uni(rng) * 5);
    cfg.grid.n_a = n_a;
    cfg.grid.n_r = n_r;
    cfg.geometry.length_L = 0.8 + uni(rng) * 1.2;
    const double rc = 0.02 + uni(rng) * 0.02;
    const double r1 = rc + 0.02 + uni(rng) * 0.03;
    const double r2 = r1 + 0.02 + uni(rng) * 0.03;
    cfg.geometry.core_radius_rc = rc;
    cfg.geometry.inner_diameter_d1 = 2.0 * r1;
    cfg.geometry.outer_diameter_d2 = 2.0 * r2;
    const double dx = cfg.geometry.length_L / n_a;
    // one tape per pair of cells, alternating on/off, two zones
    std::vector<HeatingTape> tapes;
    for (int ix = 0; ix + 1 < n_a && tapes.size() < 4; ix += 3)
        tapes.push_back({ix * dx, (ix + 1) * dx, static_cast<int>(tapes.size() % 2)});
    while (tapes.size() % 2 != 0) tapes.pop_back();
    if (tapes.size() < 2) tapes = {{0.0, dx, 0}, {2 * dx, 3 * dx, 1}};
    cfg.geometry.heating_tapes = tapes;
    cfg.geometry.num_heating_zones = 2;
    const double r_sense = 0.5 * (r1 + r2);
    cfg.geometry.sensors = {{"S0", 0.5 * dx, r_sense},
                            {"S1", (n_a - 0.5) * dx, r_sense}};
    cfg.materials.cylinder = {6000.0 + uni(rng) * 3000.0, 400.0 + uni(rng) * 200.0,
                              20.0 + uni(rng) * 60.0};
    cfg.materials.screw_conveyor = {1500.0 + uni(rng) * 3000.0, 500.0 + uni(rng) * 800.0,
                                    0.5 + uni(rng) * 5.0};
    cfg.materials.screw_core = {6000.0 + uni(rng) * 3000.0, 400.0 + uni(rng) * 200.0,
                                20.0 + uni(rng) * 60.0};
    cfg.boundary.ambient_alpha = {5.0 + uni(rng) * 20.0, 5.0 + uni(rng) * 20.0};
    cfg.boundary.tape_alpha_ht.assign(cfg.geometry.heating_tapes.size(), 50.0 + uni(rng) * 300.0);
    cfg.validate();
    return cfg;
}

} // namespace extherm::testing
