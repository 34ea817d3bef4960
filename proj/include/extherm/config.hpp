#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "extherm/calib.hpp"
#include "extherm/feref.hpp"
#include "extherm/fvnet.hpp"
#include "extherm/mesh.hpp"

namespace extherm {

struct GridConfig {
    int n_a = 35;
    int n_r = 6;
    bool snap_axial_edges_to_tapes = false;
};

enum class AmbientGrouping { PerZone, PerFacet };

struct BoundaryConfig {
    std::vector<double> ambient_alpha; // one per group
    AmbientGrouping grouping = AmbientGrouping::PerZone;
    std::vector<double> tape_alpha_ht; // one per tape
    bool screw_end_faces_ambient = false;
};

struct ObserverConfig {
    double dt = 10.0;
    double sigma_v = 0.25;       // thermocouple noise [K]
    double sigma_w_state = 1e-4; // process noise on x_c [K]
    double sigma_w_q = 1.0;      // process noise on q [W]
    int m_bar = -1;              // -1: all axial-end cylinder cells
    int q_modes = -1;            // -1: one mode per sensor (detectability cap)
};

struct FitConfig {
    double dt = 10.0;
    std::vector<ParamSpec> parameters;
};

struct ProjectConfig {
    ExtruderGeometry geometry;
    MaterialSet materials;
    GridConfig grid;
    BoundaryConfig boundary;
    ObserverConfig observer;
    FitConfig fit;

    void validate() const;
    std::vector<std::string> input_labels() const; // T_h_1..T_h_Nh, T_0
};

ProjectConfig parse_config(const nlohmann::json& j); // rejects unknown keys
ProjectConfig load_config(const std::string& path);
nlohmann::json to_json(const ProjectConfig& cfg);

/// The built-in 35x6 / four-zone / twelve-tape configuration used by the
/// test suites (also shipped as configs/reference.json).
ProjectConfig reference_config();

/// Named physical parameters recognized as overrides / fit targets:
/// c_p_s, lambda_s, alpha_ht_<1..N_th>, alpha_<1..K>.
using ParamMap = std::map<std::string, double>;

ProjectConfig apply_parameters(ProjectConfig cfg, const ParamMap& params);

struct BuiltModel {
    FvMesh mesh;
    std::vector<SensorBinding> sensors;
    LtiModel model;
};

struct BuildOptions {
    bool sever_gamma3 = false;
    std::vector<ProbeSpec> probes;
    /// Extra heat-flow input channels injected straight into named cells
    /// (cell index -> channel); used by twin experiments.
    std::vector<std::pair<int, std::string>> heat_inputs;
};

BuiltModel build_from_config(const ProjectConfig& cfg, const BuildOptions& opts = {});

/// FE oracle problem matching the config's boundary conditions; Robin patches
/// follow the FV facet assignment so both models see identical coefficients.
FeProblem fe_problem_from_config(const ProjectConfig& cfg, const FvMesh& fv_mesh, int refine);

/// Fit problem with p applied through build_from_config. `measured` must
/// contain the input channels and every sensor channel on one time axis.
FitProblem make_fit_problem(const ProjectConfig& cfg, const TimeSeries& measured);

/// Ambient group index of a Gamma1 facet (grouping == PerZone).
int ambient_group_of(const ProjectConfig& cfg, double x_mid);

/// 64-bit FNV-1a digest of a file, hex-encoded; part of the run manifest.
std::string file_digest(const std::string& path);

void write_manifest(const std::string& output_path, const std::string& config_path,
                    const std::vector<std::string>& input_files,
                    const std::vector<std::string>& output_files);

extern const char* const kToolVersion;

} // namespace extherm
