#include "extherm/feref.hpp"

#include <algorithm>
#include <cmath>

#include "extherm/errors.hpp"

namespace extherm {

FeMesh make_fe_mesh(std::vector<double> xs, std::vector<double> rs,
                    std::vector<int> ring_zone, std::vector<ZoneKind> zone_kinds,
                    std::vector<MaterialZone> zone_materials) {
    FeMesh m;
    m.xs = std::move(xs);
    m.rs = std::move(rs);
    m.nx = static_cast<int>(m.xs.size()) - 1;
    m.nr = static_cast<int>(m.rs.size()) - 1;
    if (m.nx < 1 || m.nr < 1)
        throw ConfigError("feref: need at least one element per direction");
    if (ring_zone.size() != static_cast<size_t>(m.nr))
        throw ConfigError("feref: ring_zone size must equal nr");
    m.zone_kinds = std::move(zone_kinds);
    m.zone_materials = std::move(zone_materials);
    m.elem_zone.resize(static_cast<size_t>(m.nx) * m.nr);
    for (int j = 0; j < m.nr; ++j)
        for (int i = 0; i < m.nx; ++i) m.elem_zone[m.elem(i, j)] = ring_zone[j];
    return m;
}

FeMesh build_fe_mesh(const ExtruderGeometry& geometry, const MaterialSet& materials,
                     int n_a, int n_r, int refine) {
    if (refine < 1) throw ConfigError("feref: refine must be >= 1");
    const double rc = geometry.core_radius_rc;
    const double r1 = geometry.inner_diameter_d1 / 2.0;
    const double r2 = geometry.outer_diameter_d2 / 2.0;

    // Same proportional ring allocation as the FV grid, then `refine`x finer.
    const std::vector<double> zone_lo{0.0, rc, r1};
    const std::vector<double> zone_hi{rc, r1, r2};
    const double total = r2;
    std::vector<int> rings(3, 1);
    {
        int assigned = 3;
        std::vector<double> frac(3);
        for (int z = 0; z < 3; ++z) {
            const double ideal = (zone_hi[z] - zone_lo[z]) / total * n_r;
            const int extra = std::max(0, static_cast<int>(std::floor(ideal)) - 1);
            rings[z] += extra;
            assigned += extra;
            frac[z] = ideal - std::floor(ideal);
        }
        while (assigned < n_r) {
            int best = 0;
            for (int z = 1; z < 3; ++z)
                if (frac[z] > frac[best]) best = z;
            rings[best] += 1;
            frac[best] -= 1.0;
            ++assigned;
        }
    }
    std::vector<double> rs{0.0};
    std::vector<int> ring_zone;
    for (int z = 0; z < 3; ++z) {
        const int k_max = rings[z] * refine;
        for (int k = 1; k <= k_max; ++k) {
            rs.push_back(zone_lo[z] + (zone_hi[z] - zone_lo[z]) * k / k_max);
            ring_zone.push_back(z);
        }
        rs.back() = zone_hi[z];
    }
    std::vector<double> xs;
    const int nx = n_a * refine;
    for (int k = 0; k <= nx; ++k) xs.push_back(geometry.length_L * k / nx);

    return make_fe_mesh(std::move(xs), std::move(rs), std::move(ring_zone),
                        {ZoneKind::ScrewCore, ZoneKind::ScrewConveyor, ZoneKind::Cylinder},
                        {materials.screw_core, materials.screw_conveyor, materials.cylinder});
}

namespace {

constexpr double kGauss = 0.5773502691896258; // 1/sqrt(3)

// Bilinear shapes on [-1,1]^2, node order (0,0),(1,0),(0,1),(1,1) in (i,j).
void shapes(double xi, double eta, double N[4], double dNdxi[4], double dNdeta[4]) {
    N[0] = 0.25 * (1 - xi) * (1 - eta);
    N[1] = 0.25 * (1 + xi) * (1 - eta);
    N[2] = 0.25 * (1 - xi) * (1 + eta);
    N[3] = 0.25 * (1 + xi) * (1 + eta);
    dNdxi[0] = -0.25 * (1 - eta);
    dNdxi[1] = 0.25 * (1 - eta);
    dNdxi[2] = -0.25 * (1 + eta);
    dNdxi[3] = 0.25 * (1 + eta);
    dNdeta[0] = -0.25 * (1 - xi);
    dNdeta[1] = -0.25 * (1 + xi);
    dNdeta[2] = 0.25 * (1 - xi);
    dNdeta[3] = 0.25 * (1 + xi);
}

struct Patches {
    // (node_a, node_b, coordinates) for each boundary edge on a side
    struct Edge {
        int na, nb;
        double pa, pb; // coordinate along the side (x or r)
        double r_a, r_b; // radii at the two nodes (for the r-weight)
    };
    std::vector<Edge> edges;
};

Patches side_edges(const FeMesh& m, FeEdgeLoc loc) {
    Patches p;
    if (loc == FeEdgeLoc::RMax || loc == FeEdgeLoc::RMin) {
        const int j = loc == FeEdgeLoc::RMax ? m.nr : 0;
        const double r = m.rs[j];
        for (int i = 0; i < m.nx; ++i)
            p.edges.push_back({m.node(i, j), m.node(i + 1, j), m.xs[i], m.xs[i + 1], r, r});
    } else {
        const int i = loc == FeEdgeLoc::XMin ? 0 : m.nx;
        for (int j = 0; j < m.nr; ++j)
            p.edges.push_back({m.node(i, j), m.node(i, j + 1), m.rs[j], m.rs[j + 1],
                               m.rs[j], m.rs[j + 1]});
    }
    return p;
}

using Triplets = std::vector<Eigen::Triplet<double>>;

void assemble_volume(const FeMesh& m, Triplets& mass, Triplets& stiff) {
    for (int j = 0; j < m.nr; ++j) {
        for (int i = 0; i < m.nx; ++i) {
            const auto& mat = m.zone_materials[m.elem_zone[m.elem(i, j)]];
            const double xa = m.xs[i], xb = m.xs[i + 1];
            const double ra = m.rs[j], rb = m.rs[j + 1];
            const double hx = xb - xa, hr = rb - ra;
            const double jac = hx * hr / 4.0;
            const int nodes[4] = {m.node(i, j), m.node(i + 1, j), m.node(i, j + 1),
                                  m.node(i + 1, j + 1)};
            for (double gx : {-kGauss, kGauss}) {
                for (double gr : {-kGauss, kGauss}) {
                    double N[4], dNx[4], dNr[4];
                    shapes(gx, gr, N, dNx, dNr);
                    const double r = 0.5 * (ra + rb) + 0.5 * hr * gr;
                    const double w = jac * r;
                    for (int a = 0; a < 4; ++a) {
                        const double dax = dNx[a] * 2.0 / hx;
                        const double dar = dNr[a] * 2.0 / hr;
                        for (int b = 0; b < 4; ++b) {
                            const double dbx = dNx[b] * 2.0 / hx;
                            const double dbr = dNr[b] * 2.0 / hr;
                            mass.emplace_back(nodes[a], nodes[b],
                                              w * mat.density_rho * mat.heat_capacity_cp *
                                                  N[a] * N[b]);
                            stiff.emplace_back(nodes[a], nodes[b],
                                               w * mat.conductivity_lambda *
                                                   (dax * dbx + dar * dbr));
                        }
                    }
                }
            }
        }
    }
}

} // namespace

Eigen::VectorXd FeSystem::step(const Eigen::VectorXd& T_prev, const Eigen::VectorXd& u) const {
    Eigen::VectorXd rhs = M * T_prev + Bload * u;
    Eigen::VectorXd T = lu->solve(rhs);
    if (!T.allFinite()) throw NumericError("feref: non-finite FE solution");
    return T;
}

namespace {

struct BoundaryAssembly {
    Triplets robin_mass;
    Eigen::MatrixXd load; // node x input
};

BoundaryAssembly assemble_boundary(const FeProblem& prob) {
    const auto& m = prob.mesh;
    BoundaryAssembly out;
    out.load = Eigen::MatrixXd::Zero(m.node_count(), prob.n_inputs());
    for (const auto& rb : prob.robin) {
        const Patches patches = side_edges(m, rb.loc);
        for (const auto& e : patches.edges) {
            const double mid = 0.5 * (e.pa + e.pb);
            if (mid < rb.s_start || mid > rb.s_end) continue;
            const double h = e.pb - e.pa;
            // 2-point Gauss line integral with r-weight
            for (double g : {-kGauss, kGauss}) {
                const double Na = 0.5 * (1 - g), Nb = 0.5 * (1 + g);
                const double r = Na * e.r_a + Nb * e.r_b;
                const double w = 0.5 * h * r;
                const double N[2] = {Na, Nb};
                const int nodes[2] = {e.na, e.nb};
                const double atot = rb.alpha + rb.alpha_ht;
                for (int a = 0; a < 2; ++a) {
                    for (int b = 0; b < 2; ++b)
                        out.robin_mass.emplace_back(nodes[a], nodes[b], w * atot * N[a] * N[b]);
                    if (rb.ambient_col >= 0)
                        out.load(nodes[a], rb.ambient_col) += w * rb.alpha * N[a];
                    if (rb.tape_col >= 0)
                        out.load(nodes[a], rb.tape_col) += w * rb.alpha_ht * N[a];
                }
            }
        }
    }
    return out;
}

std::vector<std::pair<int, int>> dirichlet_nodes(const FeProblem& prob) {
    const auto& m = prob.mesh;
    std::vector<std::pair<int, int>> out; // node, input column
    for (const auto& d : prob.dirichlet) {
        if (d.loc == FeEdgeLoc::RMax || d.loc == FeEdgeLoc::RMin) {
            const int j = d.loc == FeEdgeLoc::RMax ? m.nr : 0;
            for (int i = 0; i <= m.nx; ++i)
                if (m.xs[i] >= d.s_start - 1e-12 && m.xs[i] <= d.s_end + 1e-12)
                    out.emplace_back(m.node(i, j), d.col);
        } else {
            const int i = d.loc == FeEdgeLoc::XMin ? 0 : m.nx;
            for (int j = 0; j <= m.nr; ++j)
                if (m.rs[j] >= d.s_start - 1e-12 && m.rs[j] <= d.s_end + 1e-12)
                    out.emplace_back(m.node(i, j), d.col);
        }
    }
    return out;
}

} // namespace

FeSystem assemble_variational(const FeProblem& prob, double dt) {
    if (!(dt > 0.0)) throw ConfigError("feref: dt must be positive");
    const auto& m = prob.mesh;
    const int n = m.node_count();

    Triplets mass, stiff;
    assemble_volume(m, mass, stiff);
    BoundaryAssembly bnd = assemble_boundary(prob);

    FeSystem sys;
    sys.dt = dt;
    sys.M.resize(n, n);
    sys.M.setFromTriplets(mass.begin(), mass.end());

    Triplets ksys = mass;
    for (auto t : stiff) ksys.emplace_back(t.row(), t.col(), dt * t.value());
    for (auto t : bnd.robin_mass) ksys.emplace_back(t.row(), t.col(), dt * t.value());
    sys.Ksys.resize(n, n);
    sys.Ksys.setFromTriplets(ksys.begin(), ksys.end());
    sys.Bload = dt * bnd.load;

    sys.is_dirichlet.assign(n, 0);
    const auto dn = dirichlet_nodes(prob);
    if (!dn.empty()) {
        for (const auto& [node, col] : dn) sys.is_dirichlet[node] = 1;
        // Row-replace: identity row, rhs = u[col]; zero the M row too.
        Eigen::SparseMatrix<double> K = sys.Ksys;
        for (int k = 0; k < K.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it)
                if (sys.is_dirichlet[it.row()]) it.valueRef() = (it.row() == it.col()) ? 1.0 : 0.0;
        K.prune(0.0);
        sys.Ksys = K;
        Eigen::SparseMatrix<double> M = sys.M;
        for (int k = 0; k < M.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(M, k); it; ++it)
                if (sys.is_dirichlet[it.row()]) it.valueRef() = 0.0;
        M.prune(0.0);
        sys.M = M;
        for (const auto& [node, col] : dn) {
            sys.Bload.row(node).setZero();
            sys.Bload(node, col) = 1.0;
        }
    }

    sys.lu = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    sys.lu->compute(sys.Ksys);
    if (sys.lu->info() != Eigen::Success)
        throw NumericError("feref: singular backward-Euler system");
    return sys;
}

Eigen::VectorXd fe_steady(const FeProblem& prob, const Eigen::VectorXd& u) {
    const auto& m = prob.mesh;
    const int n = m.node_count();
    Triplets mass, stiff;
    assemble_volume(m, mass, stiff);
    BoundaryAssembly bnd = assemble_boundary(prob);
    for (auto t : bnd.robin_mass) stiff.emplace_back(t.row(), t.col(), t.value());

    Eigen::SparseMatrix<double> K(n, n);
    K.setFromTriplets(stiff.begin(), stiff.end());
    Eigen::VectorXd rhs = bnd.load * u;

    const auto dn = dirichlet_nodes(prob);
    if (dn.empty())
        throw ConfigError("feref: steady solve needs at least one Dirichlet patch");
    std::vector<char> fixed(n, 0);
    for (const auto& [node, col] : dn) fixed[node] = 1;
    for (int k = 0; k < K.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it)
            if (fixed[it.row()]) it.valueRef() = (it.row() == it.col()) ? 1.0 : 0.0;
    K.prune(0.0);
    for (const auto& [node, col] : dn) rhs[node] = u[col];

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(K);
    if (lu.info() != Eigen::Success)
        throw NumericError("feref: singular steady system");
    Eigen::VectorXd T = lu.solve(rhs);
    if (!T.allFinite()) throw NumericError("feref: non-finite steady solution");
    return T;
}

double fe_interpolate(const FeMesh& m, const Eigen::VectorXd& T, double x, double r) {
    auto locate = [](const std::vector<double>& edges, double v) {
        if (v < edges.front() - 1e-9 || v > edges.back() + 1e-9)
            throw DataError("feref: probe point outside the domain");
        const auto it = std::upper_bound(edges.begin(), edges.end(), v);
        int k = static_cast<int>(it - edges.begin()) - 1;
        return std::clamp(k, 0, static_cast<int>(edges.size()) - 2);
    };
    const int i = locate(m.xs, x);
    const int j = locate(m.rs, r);
    const double tx = (x - m.xs[i]) / (m.xs[i + 1] - m.xs[i]);
    const double tr = (r - m.rs[j]) / (m.rs[j + 1] - m.rs[j]);
    return (1 - tx) * (1 - tr) * T[m.node(i, j)] + tx * (1 - tr) * T[m.node(i + 1, j)] +
           (1 - tx) * tr * T[m.node(i, j + 1)] + tx * tr * T[m.node(i + 1, j + 1)];
}

TimeSeries fe_simulate(const FeProblem& prob, const Eigen::VectorXd& T0_field,
                       const TimeSeries& u, double dt,
                       const std::vector<std::pair<double, double>>& probe_points,
                       const std::vector<std::string>& probe_names) {
    if (probe_points.size() != probe_names.size())
        throw ConfigError("feref: probe point/name count mismatch");
    if (T0_field.size() != prob.mesh.node_count())
        throw ConfigError("feref: initial field size mismatch");
    if (!is_uniform(u, dt))
        throw ConfigError("feref: inputs not sampled at dt");
    FeSystem sys = assemble_variational(prob, dt);

    TimeSeries out;
    out.time = u.time;
    for (const auto& name : probe_names) out.add_channel(name);

    std::vector<int> cols(prob.input_labels.size());
    for (size_t c = 0; c < prob.input_labels.size(); ++c) {
        const int idx = u.channel_index(prob.input_labels[c]);
        if (idx < 0)
            throw ConfigError("feref: missing input channel '" + prob.input_labels[c] + "'");
        cols[c] = idx;
    }

    Eigen::VectorXd T = T0_field;
    Eigen::VectorXd uk(prob.n_inputs());
    for (size_t k = 0; k < u.size(); ++k) {
        for (size_t c = 0; c < cols.size(); ++c) uk[static_cast<int>(c)] = u.columns[cols[c]][k];
        if (k > 0) T = sys.step(T, uk);
        for (size_t q = 0; q < probe_points.size(); ++q)
            out.columns[q][k] = fe_interpolate(prob.mesh, T, probe_points[q].first,
                                               probe_points[q].second);
    }
    return out;
}

} // namespace extherm
