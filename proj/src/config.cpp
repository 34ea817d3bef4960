#include "extherm/config.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "extherm/errors.hpp"

namespace extherm {

const char* const kToolVersion = "0.1.0";

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::vector<std::string>& allowed,
                    const std::string& path) {
    if (!j.is_object())
        throw ConfigError("config: " + path + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("config: unknown key '" + path + "." + key + "'");
    }
}

const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key))
        throw ConfigError("config: missing key '" + path + "." + key + "'");
    return j.at(key);
}

double num(const json& j, const std::string& key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_number())
        throw ConfigError("config: '" + path + "." + key + "' must be a number");
    return v.get<double>();
}

MaterialZone parse_material(const json& j, const std::string& path) {
    reject_unknown(j, {"density", "heat_capacity", "conductivity"}, path);
    MaterialZone m;
    m.density_rho = num(j, "density", path);
    m.heat_capacity_cp = num(j, "heat_capacity", path);
    m.conductivity_lambda = num(j, "conductivity", path);
    return m;
}

json material_json(const MaterialZone& m) {
    return {{"density", m.density_rho},
            {"heat_capacity", m.heat_capacity_cp},
            {"conductivity", m.conductivity_lambda}};
}

} // namespace

std::vector<std::string> ProjectConfig::input_labels() const {
    std::vector<std::string> labels;
    for (int z = 1; z <= geometry.num_heating_zones; ++z)
        labels.push_back("T_h_" + std::to_string(z));
    labels.push_back("T_0");
    return labels;
}

void ProjectConfig::validate() const {
    geometry.validate();
    materials.validate();
    if (grid.n_a < 1 || grid.n_r < 3)
        throw ConfigError("config: grid requires n_a >= 1 and n_r >= 3");
    if (boundary.tape_alpha_ht.size() != geometry.heating_tapes.size())
        throw ConfigError("config: boundary.tape_alpha_ht needs one entry per heating tape");
    if (boundary.grouping == AmbientGrouping::PerZone &&
        static_cast<int>(boundary.ambient_alpha.size()) != geometry.num_heating_zones)
        throw ConfigError("config: boundary.ambient_alpha needs one entry per heating zone");
    for (double a : boundary.ambient_alpha)
        if (a < 0.0) throw ConfigError("config: negative ambient alpha");
    for (double a : boundary.tape_alpha_ht)
        if (a < 0.0) throw ConfigError("config: negative tape alpha_ht");
    if (!(observer.dt > 0.0) || !(fit.dt > 0.0))
        throw ConfigError("config: observer.dt and fit.dt must be positive");
}

ProjectConfig parse_config(const json& j) {
    reject_unknown(j, {"geometry", "materials", "grid", "boundary", "sensors", "observer", "fit"},
                   "$");
    ProjectConfig cfg;

    const json& g = require(j, "geometry", "$");
    reject_unknown(g,
                   {"length_L", "inner_diameter_d1", "outer_diameter_d2", "core_radius_rc",
                    "num_heating_zones", "heating_tapes"},
                   "geometry");
    cfg.geometry.length_L = num(g, "length_L", "geometry");
    cfg.geometry.inner_diameter_d1 = num(g, "inner_diameter_d1", "geometry");
    cfg.geometry.outer_diameter_d2 = num(g, "outer_diameter_d2", "geometry");
    cfg.geometry.core_radius_rc = num(g, "core_radius_rc", "geometry");
    cfg.geometry.num_heating_zones =
        static_cast<int>(num(g, "num_heating_zones", "geometry"));
    for (const auto& t : require(g, "heating_tapes", "geometry")) {
        reject_unknown(t, {"start", "end", "zone"}, "geometry.heating_tapes[]");
        cfg.geometry.heating_tapes.push_back({num(t, "start", "tape"), num(t, "end", "tape"),
                                              static_cast<int>(num(t, "zone", "tape"))});
    }

    const json& mats = require(j, "materials", "$");
    reject_unknown(mats, {"cylinder", "screw_conveyor", "screw_core"}, "materials");
    cfg.materials.cylinder = parse_material(require(mats, "cylinder", "materials"),
                                            "materials.cylinder");
    cfg.materials.screw_conveyor =
        parse_material(require(mats, "screw_conveyor", "materials"), "materials.screw_conveyor");
    cfg.materials.screw_core =
        parse_material(require(mats, "screw_core", "materials"), "materials.screw_core");

    const json& grid = require(j, "grid", "$");
    reject_unknown(grid, {"n_a", "n_r", "snap_axial_edges_to_tapes"}, "grid");
    cfg.grid.n_a = static_cast<int>(num(grid, "n_a", "grid"));
    cfg.grid.n_r = static_cast<int>(num(grid, "n_r", "grid"));
    if (grid.contains("snap_axial_edges_to_tapes"))
        cfg.grid.snap_axial_edges_to_tapes = grid.at("snap_axial_edges_to_tapes").get<bool>();

    const json& b = require(j, "boundary", "$");
    reject_unknown(b, {"ambient_alpha", "ambient_grouping", "tape_alpha_ht", "screw_end_faces"},
                   "boundary");
    for (const auto& v : require(b, "ambient_alpha", "boundary"))
        cfg.boundary.ambient_alpha.push_back(v.get<double>());
    if (b.contains("ambient_grouping")) {
        const std::string s = b.at("ambient_grouping").get<std::string>();
        if (s == "per_zone")
            cfg.boundary.grouping = AmbientGrouping::PerZone;
        else if (s == "per_facet")
            cfg.boundary.grouping = AmbientGrouping::PerFacet;
        else
            throw ConfigError("config: boundary.ambient_grouping must be per_zone or per_facet");
    }
    for (const auto& v : require(b, "tape_alpha_ht", "boundary"))
        cfg.boundary.tape_alpha_ht.push_back(v.get<double>());
    if (b.contains("screw_end_faces")) {
        const std::string s = b.at("screw_end_faces").get<std::string>();
        if (s == "ambient")
            cfg.boundary.screw_end_faces_ambient = true;
        else if (s != "adiabatic")
            throw ConfigError("config: boundary.screw_end_faces must be adiabatic or ambient");
    }

    for (const auto& s : require(j, "sensors", "$")) {
        reject_unknown(s, {"label", "x", "r"}, "sensors[]");
        cfg.geometry.sensors.push_back({require(s, "label", "sensors").get<std::string>(),
                                        num(s, "x", "sensors"), num(s, "r", "sensors")});
    }

    if (j.contains("observer")) {
        const json& o = j.at("observer");
        reject_unknown(o, {"dt", "sigma_v", "sigma_w_state", "sigma_w_q", "m_bar", "q_modes"},
                       "observer");
        if (o.contains("dt")) cfg.observer.dt = o.at("dt").get<double>();
        if (o.contains("sigma_v")) cfg.observer.sigma_v = o.at("sigma_v").get<double>();
        if (o.contains("sigma_w_state"))
            cfg.observer.sigma_w_state = o.at("sigma_w_state").get<double>();
        if (o.contains("sigma_w_q")) cfg.observer.sigma_w_q = o.at("sigma_w_q").get<double>();
        if (o.contains("m_bar")) cfg.observer.m_bar = o.at("m_bar").get<int>();
        if (o.contains("q_modes")) cfg.observer.q_modes = o.at("q_modes").get<int>();
    }

    if (j.contains("fit")) {
        const json& f = j.at("fit");
        reject_unknown(f, {"dt", "parameters"}, "fit");
        if (f.contains("dt")) cfg.fit.dt = f.at("dt").get<double>();
        if (f.contains("parameters")) {
            for (const auto& ps : f.at("parameters")) {
                reject_unknown(ps, {"name", "lower", "init", "upper"}, "fit.parameters[]");
                cfg.fit.parameters.push_back({require(ps, "name", "fit").get<std::string>(),
                                              num(ps, "lower", "fit"), num(ps, "upper", "fit"),
                                              num(ps, "init", "fit")});
            }
        }
    }

    cfg.validate();
    return cfg;
}

ProjectConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config: parse error in '" + path + "': " + e.what());
    }
    return parse_config(j);
}

nlohmann::json to_json(const ProjectConfig& cfg) {
    json tapes = json::array();
    for (const auto& t : cfg.geometry.heating_tapes)
        tapes.push_back({{"start", t.axial_start}, {"end", t.axial_end}, {"zone", t.zone_id}});
    json sensors = json::array();
    for (const auto& s : cfg.geometry.sensors)
        sensors.push_back({{"label", s.label}, {"x", s.axial_pos}, {"r", s.radial_pos}});
    json params = json::array();
    for (const auto& p : cfg.fit.parameters)
        params.push_back(
            {{"name", p.name}, {"lower", p.lower}, {"init", p.init}, {"upper", p.upper}});
    return json{
        {"geometry",
         {{"length_L", cfg.geometry.length_L},
          {"inner_diameter_d1", cfg.geometry.inner_diameter_d1},
          {"outer_diameter_d2", cfg.geometry.outer_diameter_d2},
          {"core_radius_rc", cfg.geometry.core_radius_rc},
          {"num_heating_zones", cfg.geometry.num_heating_zones},
          {"heating_tapes", tapes}}},
        {"materials",
         {{"cylinder", material_json(cfg.materials.cylinder)},
          {"screw_conveyor", material_json(cfg.materials.screw_conveyor)},
          {"screw_core", material_json(cfg.materials.screw_core)}}},
        {"grid",
         {{"n_a", cfg.grid.n_a},
          {"n_r", cfg.grid.n_r},
          {"snap_axial_edges_to_tapes", cfg.grid.snap_axial_edges_to_tapes}}},
        {"boundary",
         {{"ambient_alpha", cfg.boundary.ambient_alpha},
          {"ambient_grouping",
           cfg.boundary.grouping == AmbientGrouping::PerZone ? "per_zone" : "per_facet"},
          {"tape_alpha_ht", cfg.boundary.tape_alpha_ht},
          {"screw_end_faces", cfg.boundary.screw_end_faces_ambient ? "ambient" : "adiabatic"}}},
        {"sensors", sensors},
        {"observer",
         {{"dt", cfg.observer.dt},
          {"sigma_v", cfg.observer.sigma_v},
          {"sigma_w_state", cfg.observer.sigma_w_state},
          {"sigma_w_q", cfg.observer.sigma_w_q},
          {"m_bar", cfg.observer.m_bar},
          {"q_modes", cfg.observer.q_modes}}},
        {"fit", {{"dt", cfg.fit.dt}, {"parameters", params}}}};
}

ProjectConfig reference_config() {
    ProjectConfig cfg;
    cfg.geometry.length_L = 1.75;
    cfg.geometry.inner_diameter_d1 = 0.12;
    cfg.geometry.outer_diameter_d2 = 0.18;
    cfg.geometry.core_radius_rc = 0.03;
    cfg.geometry.num_heating_zones = 4;
    for (int k = 0; k < 12; ++k)
        cfg.geometry.heating_tapes.push_back({0.15 * k, 0.15 * k + 0.10, k / 3});
    // all axial positions sit under a heating tape (cells 3k and 3k+1)
    const int sensor_cells[14] = {1, 3, 6, 9, 10, 13, 15, 18, 21, 24, 25, 28, 31, 33};
    for (int s = 0; s < 14; ++s)
        cfg.geometry.sensors.push_back(
            {"S" + std::to_string(s), 0.025 + 0.05 * sensor_cells[s], 0.0675});
    cfg.materials.cylinder = {7850.0, 460.0, 50.0};
    cfg.materials.screw_conveyor = {3000.0, 800.0, 2.5};
    cfg.materials.screw_core = {7850.0, 460.0, 50.0};
    cfg.grid.n_a = 35;
    cfg.grid.n_r = 6;
    cfg.boundary.ambient_alpha = {15.0, 15.0, 15.0, 15.0};
    cfg.boundary.tape_alpha_ht = std::vector<double>(12, 180.0);
    cfg.observer.dt = 10.0;
    cfg.fit.dt = 10.0;
    cfg.fit.parameters.push_back({"c_p_s", 50.0, 5000.0, 800.0});
    cfg.fit.parameters.push_back({"lambda_s", 0.05, 50.0, 2.5});
    for (int k = 1; k <= 12; ++k)
        cfg.fit.parameters.push_back({"alpha_ht_" + std::to_string(k), 5.0, 2000.0, 180.0});
    for (int k = 1; k <= 4; ++k)
        cfg.fit.parameters.push_back({"alpha_" + std::to_string(k), 0.5, 200.0, 15.0});
    cfg.validate();
    return cfg;
}

ProjectConfig apply_parameters(ProjectConfig cfg, const ParamMap& params) {
    for (const auto& [name, value] : params) {
        if (name == "c_p_s") {
            cfg.materials.screw_conveyor.heat_capacity_cp = value;
        } else if (name == "lambda_s") {
            cfg.materials.screw_conveyor.conductivity_lambda = value;
        } else if (name.rfind("alpha_ht_", 0) == 0) {
            const int idx = std::stoi(name.substr(9)) - 1;
            if (idx < 0 || idx >= static_cast<int>(cfg.boundary.tape_alpha_ht.size()))
                throw ConfigError("config: parameter '" + name + "' out of range");
            cfg.boundary.tape_alpha_ht[idx] = value;
        } else if (name.rfind("alpha_", 0) == 0) {
            const int idx = std::stoi(name.substr(6)) - 1;
            if (idx < 0 || idx >= static_cast<int>(cfg.boundary.ambient_alpha.size()))
                throw ConfigError("config: parameter '" + name + "' out of range");
            cfg.boundary.ambient_alpha[idx] = value;
        } else {
            throw ConfigError("config: unknown parameter '" + name + "'");
        }
    }
    return cfg;
}

int ambient_group_of(const ProjectConfig& cfg, double x_mid) {
    if (cfg.boundary.grouping == AmbientGrouping::PerFacet)
        throw ConfigError("config: ambient_group_of is only defined for per_zone grouping");
    const int nz = cfg.geometry.num_heating_zones;
    std::vector<double> lo(nz, 1e300), hi(nz, -1e300);
    for (const auto& t : cfg.geometry.heating_tapes) {
        lo[t.zone_id] = std::min(lo[t.zone_id], t.axial_start);
        hi[t.zone_id] = std::max(hi[t.zone_id], t.axial_end);
    }
    int best = 0;
    double best_d = 1e300;
    for (int z = 0; z < nz; ++z) {
        double d = 0.0;
        if (x_mid < lo[z]) d = lo[z] - x_mid;
        else if (x_mid > hi[z]) d = x_mid - hi[z];
        if (d < best_d) {
            best_d = d;
            best = z;
        }
    }
    return best;
}

BuiltModel build_from_config(const ProjectConfig& cfg, const BuildOptions& opts) {
    cfg.validate();
    BuiltModel out;
    out.mesh = build_mesh(cfg.geometry, cfg.materials, cfg.grid.n_a, cfg.grid.n_r,
                          cfg.grid.snap_axial_edges_to_tapes);
    out.sensors = bind_sensors(out.mesh, cfg.geometry.sensors);

    std::vector<std::string> inputs = cfg.input_labels();
    for (const auto& [cell, channel] : opts.heat_inputs) inputs.push_back(channel);

    std::map<Facet, BoundarySpec> specs;
    // Gamma1: ambient Robin; per-facet grouping allocates one alpha per facet
    // in Gamma1 iteration order.
    int facet_counter = 0;
    for (const auto& f : out.mesh.gamma1_facets) {
        const auto& c = out.mesh.cells[f.cell];
        double alpha;
        if (cfg.boundary.grouping == AmbientGrouping::PerFacet) {
            if (facet_counter >= static_cast<int>(cfg.boundary.ambient_alpha.size()))
                throw ConfigError("config: per_facet ambient_alpha list too short");
            alpha = cfg.boundary.ambient_alpha[facet_counter++];
        } else {
            alpha = cfg.boundary.ambient_alpha[ambient_group_of(cfg, c.x_center)];
        }
        BoundarySpec spec;
        spec.kind = BoundaryKind::Robin;
        spec.alpha = alpha;
        spec.ambient_channel = "T_0";
        specs[f] = spec;
    }
    // Gamma2: heating tapes, ambient leak included.
    for (size_t j = 0; j < out.mesh.gamma2_facets.size(); ++j) {
        const auto& tape = cfg.geometry.heating_tapes[j];
        for (const auto& f : out.mesh.gamma2_facets[j]) {
            const auto& c = out.mesh.cells[f.cell];
            BoundarySpec spec;
            spec.kind = BoundaryKind::HeatingTape;
            spec.alpha = cfg.boundary.grouping == AmbientGrouping::PerZone
                             ? cfg.boundary.ambient_alpha[ambient_group_of(cfg, c.x_center)]
                             : 0.0;
            spec.alpha_ht = cfg.boundary.tape_alpha_ht[j];
            spec.ambient_channel = "T_0";
            spec.tape_channel = "T_h_" + std::to_string(tape.zone_id + 1);
            specs[f] = spec;
        }
    }
    // Screw-region end faces (the exterior part of Gamma3).
    for (const auto& f : out.mesh.gamma3_facets) {
        if (out.mesh.neighbor(f.cell, f.side) >= 0) continue;
        BoundarySpec spec;
        if (cfg.boundary.screw_end_faces_ambient) {
            spec.kind = BoundaryKind::Robin;
            const double x = out.mesh.cells[f.cell].x_center;
            spec.alpha = cfg.boundary.ambient_alpha[cfg.boundary.grouping ==
                                                            AmbientGrouping::PerZone
                                                        ? ambient_group_of(cfg, x)
                                                        : 0];
            spec.ambient_channel = "T_0";
        } else {
            spec.kind = BoundaryKind::Neumann; // held zero flow
        }
        specs[f] = spec;
    }

    AssemblyOptions asmopts;
    asmopts.sever_gamma3 = opts.sever_gamma3;
    out.model = assemble_lti(out.mesh, specs, out.sensors, opts.probes, inputs, asmopts);

    // Direct heat-flow inputs into named cells (twin-experiment plumbing).
    for (const auto& [cell, channel] : opts.heat_inputs) {
        const int col = out.model.input_index(channel);
        out.model.B(cell, col) += 1.0 / out.model.capacitance[cell];
    }
    return out;
}

FeProblem fe_problem_from_config(const ProjectConfig& cfg, const FvMesh& fv_mesh, int refine) {
    FeProblem prob;
    prob.mesh = build_fe_mesh(cfg.geometry, cfg.materials, cfg.grid.n_a, cfg.grid.n_r, refine);
    prob.input_labels = cfg.input_labels();
    auto col_of = [&](const std::string& name) {
        const auto it = std::find(prob.input_labels.begin(), prob.input_labels.end(), name);
        return static_cast<int>(it - prob.input_labels.begin());
    };
    const int t0_col = col_of("T_0");

    // Outer surface: one patch per FV facet span so coefficients match exactly.
    for (const auto& f : fv_mesh.gamma1_facets) {
        if (f.side != Side::RPos) continue;
        const auto& c = fv_mesh.cells[f.cell];
        FeRobinEdge e;
        e.loc = FeEdgeLoc::RMax;
        e.s_start = c.x_center - c.delta_x / 2.0;
        e.s_end = c.x_center + c.delta_x / 2.0;
        e.alpha = cfg.boundary.ambient_alpha[ambient_group_of(cfg, c.x_center)];
        e.ambient_col = t0_col;
        prob.robin.push_back(e);
    }
    for (size_t j = 0; j < fv_mesh.gamma2_facets.size(); ++j) {
        const auto& tape = cfg.geometry.heating_tapes[j];
        for (const auto& f : fv_mesh.gamma2_facets[j]) {
            const auto& c = fv_mesh.cells[f.cell];
            FeRobinEdge e;
            e.loc = FeEdgeLoc::RMax;
            e.s_start = c.x_center - c.delta_x / 2.0;
            e.s_end = c.x_center + c.delta_x / 2.0;
            e.alpha = cfg.boundary.ambient_alpha[ambient_group_of(cfg, c.x_center)];
            e.ambient_col = t0_col;
            e.alpha_ht = cfg.boundary.tape_alpha_ht[j];
            e.tape_col = col_of("T_h_" + std::to_string(tape.zone_id + 1));
            prob.robin.push_back(e);
        }
    }
    // Cylinder end faces: ambient Robin over r in [d1/2, d2/2].
    const double r1 = cfg.geometry.inner_diameter_d1 / 2.0;
    const double r2 = cfg.geometry.outer_diameter_d2 / 2.0;
    for (FeEdgeLoc loc : {FeEdgeLoc::XMin, FeEdgeLoc::XMax}) {
        const double x = loc == FeEdgeLoc::XMin ? 0.0 : cfg.geometry.length_L;
        FeRobinEdge e;
        e.loc = loc;
        e.s_start = r1;
        e.s_end = r2;
        e.alpha = cfg.boundary.ambient_alpha[ambient_group_of(cfg, x)];
        e.ambient_col = t0_col;
        prob.robin.push_back(e);
        if (cfg.boundary.screw_end_faces_ambient) {
            FeRobinEdge s = e;
            s.s_start = 0.0;
            s.s_end = r1;
            prob.robin.push_back(s);
        }
    }
    return prob;
}

FitProblem make_fit_problem(const ProjectConfig& cfg, const TimeSeries& measured) {
    if (cfg.fit.parameters.empty())
        throw ConfigError("config: fit.parameters is empty");
    TimeSeries uniform = is_uniform(measured, cfg.fit.dt)
                             ? measured
                             : resample_hold(measured, cfg.fit.dt);
    FitProblem prob;
    prob.params = cfg.fit.parameters;
    prob.dt = cfg.fit.dt;
    prob.input.time = uniform.time;
    for (const auto& name : cfg.input_labels()) {
        prob.input.add_channel(name) = uniform.channel(name);
    }
    prob.measurement.time = uniform.time;
    for (const auto& s : cfg.geometry.sensors)
        prob.measurement.add_channel(s.label) = uniform.channel(s.label);

    std::vector<std::string> names;
    for (const auto& ps : cfg.fit.parameters) names.push_back(ps.name);
    prob.build = [cfg, names](const Eigen::VectorXd& p) {
        ParamMap pm;
        for (size_t j = 0; j < names.size(); ++j) pm[names[j]] = p[static_cast<int>(j)];
        return build_from_config(apply_parameters(cfg, pm)).model;
    };
    return prob;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("manifest: cannot open '" + path + "' for digest");
    std::uint64_t h = 1469598103934665603ull;
    char buf[1 << 14];
    while (in) {
        in.read(buf, sizeof(buf));
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

void write_manifest(const std::string& output_path, const std::string& config_path,
                    const std::vector<std::string>& input_files,
                    const std::vector<std::string>& output_files) {
    nlohmann::json j;
    j["tool_version"] = kToolVersion;
    j["config"] = {{"path", config_path}, {"digest", file_digest(config_path)}};
    const auto now = std::chrono::system_clock::now();
    j["timestamp_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    nlohmann::json inputs = nlohmann::json::array();
    for (const auto& f : input_files)
        inputs.push_back({{"path", f}, {"digest", file_digest(f)}});
    j["inputs"] = inputs;
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& f : output_files)
        outputs.push_back({{"path", f}, {"digest", file_digest(f)}});
    j["outputs"] = outputs;
    std::ofstream out(output_path);
    if (!out) throw DataError("manifest: cannot write '" + output_path + "'");
    out << j.dump(2) << "\n";
}

} // namespace extherm
