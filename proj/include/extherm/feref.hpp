#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <string>
#include <vector>

#include "extherm/geometry.hpp"
#include "extherm/timeseries.hpp"

namespace extherm {

/// Structured bilinear-quad grid over [x0,x1] x [r0,r1]; zone interfaces lie
/// on element edges. The axisymmetric measure r dr dx is used throughout
/// (validated against the annulus log profile); the r = 0 axis is a natural
/// boundary.
struct FeMesh {
    int nx = 0, nr = 0;
    std::vector<double> xs, rs; // node coordinates
    std::vector<int> elem_zone; // per element, row-major (x fastest)
    std::vector<ZoneKind> zone_kinds;
    std::vector<MaterialZone> zone_materials;

    int node(int i, int j) const { return j * (nx + 1) + i; }
    int elem(int i, int j) const { return j * nx + i; }
    int node_count() const { return (nx + 1) * (nr + 1); }
};

FeMesh make_fe_mesh(std::vector<double> xs, std::vector<double> rs,
                    std::vector<int> ring_zone, std::vector<ZoneKind> zone_kinds,
                    std::vector<MaterialZone> zone_materials);

/// Three-zone extruder grid, radial interfaces exact, `refine` grid lines per
/// FV cell of an (n_a, n_r) reference grid.
FeMesh build_fe_mesh(const ExtruderGeometry& geometry, const MaterialSet& materials,
                     int n_a, int n_r, int refine);

enum class FeEdgeLoc { RMax, RMin, XMin, XMax };

/// Robin / heating-tape boundary patch along one side of the rectangle;
/// applies to boundary edges whose midpoint (x for RMax/RMin, r for XMin/XMax)
/// lies in [s_start, s_end].
struct FeRobinEdge {
    FeEdgeLoc loc = FeEdgeLoc::RMax;
    double s_start = 0.0, s_end = 0.0;
    double alpha = 0.0;   // [W/(m^2 K)]
    int ambient_col = -1; // input column for T_0
    double alpha_ht = 0.0;
    int tape_col = -1;    // input column for T_h
};

/// Pinned temperature (input-channel driven) along one side.
struct FeDirichlet {
    FeEdgeLoc loc = FeEdgeLoc::RMax;
    double s_start = 0.0, s_end = 0.0;
    int col = -1;
};

struct FeProblem {
    FeMesh mesh;
    std::vector<FeRobinEdge> robin;
    std::vector<FeDirichlet> dirichlet;
    std::vector<std::string> input_labels;

    int n_inputs() const { return static_cast<int>(input_labels.size()); }
};

/// Backward-Euler system: per step solve Ksys T(k) = M T(k-1) + Bload u(k).
struct FeSystem {
    Eigen::SparseMatrix<double> M;
    Eigen::SparseMatrix<double> Ksys;
    Eigen::MatrixXd Bload;
    std::vector<char> is_dirichlet;
    double dt = 0.0;
    std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu;

    Eigen::VectorXd step(const Eigen::VectorXd& T_prev, const Eigen::VectorXd& u) const;
};

FeSystem assemble_variational(const FeProblem& problem, double dt);

/// Steady-state solve (the dt -> infinity limit), for manufactured-solution
/// checks: (K + Robin) T = loads(u).
Eigen::VectorXd fe_steady(const FeProblem& problem, const Eigen::VectorXd& u);

/// Bilinear interpolation of a nodal field at (x, r).
double fe_interpolate(const FeMesh& mesh, const Eigen::VectorXd& T, double x, double r);

/// Backward-Euler time march; one output channel per probe point.
TimeSeries fe_simulate(const FeProblem& problem, const Eigen::VectorXd& T0_field,
                       const TimeSeries& u, double dt,
                       const std::vector<std::pair<double, double>>& probe_points,
                       const std::vector<std::string>& probe_names);

} // namespace extherm
