#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "extherm/mesh.hpp"

namespace extherm {

/// RC quantities of one ring cell. Resistances in [K/W], areas in [m^2].
/// R1/R2 axial, R3 outward (face at r + dr/2), R4 inward (face at r - dr/2);
/// R4 is infinite for disk cells.
struct CellRc {
    double C = 0.0;
    double R1 = 0.0, R2 = 0.0, R3 = 0.0, R4 = 0.0;
    double A1 = 0.0, A2 = 0.0, A3 = 0.0, A4 = 0.0;
};

CellRc cell_rc(const FvCell& cell, const MaterialZone& mat);

/// Four-port energy balance: dT/dt = sum_s (T_s - T)/(R_s C).
/// Infinite resistances contribute nothing.
double cell_balance(const CellRc& rc, double T, double T1, double T2, double T3, double T4);

/// Facet area of one cell side.
double facet_area(const FvCell& cell, Side side);

/// Resistance from the cell center to the midpoint face on the given side.
/// Infinite for the inward side of a disk cell.
double port_resistance(const FvCell& cell, const MaterialZone& mat, Side side);

/// Temperature of the shared facet node between two half-cell resistances
/// (the unique value equalizing the two one-sided heat flows).
double facet_junction_temperature(double Ta, double Ra, double Tb, double Rb);

/// Series conductance [W/K] through the facet between `cell` and its
/// neighbor on `side`; 0 when there is no neighbor.
double interior_facet_conductance(const FvMesh& mesh, int cell, Side side);

enum class BoundaryKind { Dirichlet, Neumann, Robin, HeatingTape };

/// Per-area coefficients alpha/alpha_ht [W/(m^2 K)] are multiplied by the
/// facet area during assembly. Channels name input columns; an empty Neumann
/// channel means a held zero flow (adiabatic).
struct BoundarySpec {
    BoundaryKind kind = BoundaryKind::Neumann;
    double alpha = 0.0;
    double alpha_ht = 0.0;
    std::string channel;         // Dirichlet temperature or Neumann flow [W]
    std::string ambient_channel; // Robin / HeatingTape
    std::string tape_channel;    // HeatingTape
};

struct ProbeSpec {
    enum class Kind {
        TapeFlow,      // net flow into the cylinder through one tape's facets
        AmbientFlow,   // net flow into the domain through Gamma1
        BoundaryTotal, // net flow into the domain through every boundary facet
        Gamma3Total,   // flow into the granulate region across Gamma3 (r = d1/2)
        Gamma3PerFacet // one row per axial element, same sign convention
    };
    Kind kind = Kind::BoundaryTotal;
    int index = -1; // tape index for TapeFlow
    std::string name;
};

struct Gamma3Link {
    int axial_index = -1;
    int cylinder_cell = -1;
    int screw_cell = -1;
    double conductance = 0.0; // [W/K]
};

/// Continuous-time LTI model, Metzler A with the three-zone block structure.
/// D is nonzero only on probe rows.
struct LtiModel {
    Eigen::MatrixXd A, B, C, D;
    std::vector<std::string> state_labels;
    std::vector<std::string> input_labels;
    std::vector<std::string> output_labels;
    std::vector<int> cylinder_states, screw_states, core_states;
    Eigen::VectorXd capacitance; // per state [J/K]
    int num_sensor_outputs = 0;  // leading outputs are sensors
    std::vector<SensorBinding> sensors;
    std::vector<Gamma3Link> gamma3_links; // radial cut facets, by axial index

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
    int p() const { return static_cast<int>(C.rows()); }
    int input_index(const std::string& name) const;
    int output_index(const std::string& name) const;
};

struct AssemblyOptions {
    bool sever_gamma3 = false; // no conduction across r = d1/2 (cut-model oracle)
};

/// Eliminates the facet port variables and returns xdot = Ax + Bu, y = Cx (+Du
/// on probe rows). Every exterior facet must carry exactly one BoundarySpec.
LtiModel assemble_lti(const FvMesh& mesh,
                      const std::map<Facet, BoundarySpec>& specs,
                      const std::vector<SensorBinding>& sensors,
                      const std::vector<ProbeSpec>& probes,
                      const std::vector<std::string>& input_labels,
                      const AssemblyOptions& opts = {});

} // namespace extherm
