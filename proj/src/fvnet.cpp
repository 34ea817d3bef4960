#include "extherm/fvnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "extherm/errors.hpp"

namespace extherm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;
} // namespace

CellRc cell_rc(const FvCell& cell, const MaterialZone& mat) {
    CellRc rc;
    const double r = cell.r_center, dr = cell.delta_r, dx = cell.delta_x;
    const double lam = mat.conductivity_lambda;
    rc.A1 = rc.A2 = 2.0 * kPi * r * dr;
    rc.A3 = 2.0 * kPi * (r + dr / 2.0) * dx;
    rc.A4 = cell.is_disk ? 0.0 : 2.0 * kPi * (r - dr / 2.0) * dx;
    rc.C = cell.volume() * mat.density_rho * mat.heat_capacity_cp;
    rc.R1 = rc.R2 = dx / (rc.A1 * lam);
    rc.R3 = dr / (rc.A3 * lam);
    rc.R4 = cell.is_disk ? kInf : dr / (rc.A4 * lam);
    return rc;
}

double cell_balance(const CellRc& rc, double T, double T1, double T2, double T3, double T4) {
    double q = 0.0;
    const double Ts[4] = {T1, T2, T3, T4};
    const double Rs[4] = {rc.R1, rc.R2, rc.R3, rc.R4};
    for (int s = 0; s < 4; ++s)
        if (std::isfinite(Rs[s])) q += (Ts[s] - T) / Rs[s];
    return q / rc.C;
}

double facet_area(const FvCell& cell, Side side) {
    switch (side) {
        case Side::XNeg:
        case Side::XPos: return 2.0 * kPi * cell.r_center * cell.delta_r;
        case Side::RNeg: return 2.0 * kPi * cell.inner_radius() * cell.delta_x;
        case Side::RPos: return 2.0 * kPi * cell.outer_radius() * cell.delta_x;
    }
    return 0.0;
}

double port_resistance(const FvCell& cell, const MaterialZone& mat, Side side) {
    const double A = facet_area(cell, side);
    if (A <= 0.0) return kInf;
    const double half = (side == Side::XNeg || side == Side::XPos) ? cell.delta_x / 2.0
                                                                   : cell.delta_r / 2.0;
    return half / (A * mat.conductivity_lambda);
}

double facet_junction_temperature(double Ta, double Ra, double Tb, double Rb) {
    return (Ta / Ra + Tb / Rb) / (1.0 / Ra + 1.0 / Rb);
}

namespace {
Side opposite(Side s) {
    switch (s) {
        case Side::XNeg: return Side::XPos;
        case Side::XPos: return Side::XNeg;
        case Side::RNeg: return Side::RPos;
        case Side::RPos: return Side::RNeg;
    }
    return s;
}
} // namespace

double interior_facet_conductance(const FvMesh& mesh, int cell, Side side) {
    const int nb = mesh.neighbor(cell, side);
    if (nb < 0) return 0.0;
    const auto& a = mesh.cells[cell];
    const auto& b = mesh.cells[nb];
    const double Ra = port_resistance(a, mesh.material(a), side);
    const double Rb = port_resistance(b, mesh.material(b), opposite(side));
    return 1.0 / (Ra + Rb);
}

int LtiModel::input_index(const std::string& name) const {
    const auto it = std::find(input_labels.begin(), input_labels.end(), name);
    return it == input_labels.end() ? -1 : static_cast<int>(it - input_labels.begin());
}

int LtiModel::output_index(const std::string& name) const {
    const auto it = std::find(output_labels.begin(), output_labels.end(), name);
    return it == output_labels.end() ? -1 : static_cast<int>(it - output_labels.begin());
}

namespace {

// Linear form in (x, u) for the net heat flow [W] into a cell through one
// boundary facet, after eliminating the facet node.
struct FlowForm {
    int cell = -1;
    double x_coeff = 0.0;                      // multiplies T_cell
    std::vector<std::pair<int, double>> u_coeffs;
};

FlowForm boundary_flow_form(const FvMesh& mesh, const Facet& f, const BoundarySpec& spec,
                            const std::vector<std::string>& input_labels) {
    const auto& cell = mesh.cells[f.cell];
    const auto& mat = mesh.material(cell);
    const double gP = 1.0 / port_resistance(cell, mat, f.side);
    const double A = facet_area(cell, f.side);

    auto col = [&](const std::string& name) {
        const auto it = std::find(input_labels.begin(), input_labels.end(), name);
        if (it == input_labels.end())
            throw ConfigError("fvnet: boundary channel '" + name + "' is not an input");
        return static_cast<int>(it - input_labels.begin());
    };

    FlowForm form;
    form.cell = f.cell;
    switch (spec.kind) {
        case BoundaryKind::Dirichlet: {
            form.x_coeff = -gP;
            form.u_coeffs.emplace_back(col(spec.channel), gP);
            break;
        }
        case BoundaryKind::Neumann: {
            if (!spec.channel.empty())
                form.u_coeffs.emplace_back(col(spec.channel), 1.0);
            break;
        }
        case BoundaryKind::Robin: {
            const double gb = spec.alpha * A;
            if (gb > 0.0) {
                const double k = gP * gb / (gP + gb);
                form.x_coeff = -k;
                form.u_coeffs.emplace_back(col(spec.ambient_channel), k);
            }
            break;
        }
        case BoundaryKind::HeatingTape: {
            const double gb0 = spec.alpha * A;
            const double gbh = spec.alpha_ht * A;
            if (gb0 + gbh > 0.0) {
                const double S = gP + gb0 + gbh;
                const double k0 = gP * gb0 / S;
                const double kh = gP * gbh / S;
                form.x_coeff = -(k0 + kh);
                if (k0 > 0.0) form.u_coeffs.emplace_back(col(spec.ambient_channel), k0);
                if (kh > 0.0) form.u_coeffs.emplace_back(col(spec.tape_channel), kh);
            }
            break;
        }
    }
    if (spec.alpha < 0.0 || spec.alpha_ht < 0.0)
        throw ConfigError("fvnet: negative heat transfer coefficient");
    return form;
}

} // namespace

LtiModel assemble_lti(const FvMesh& mesh,
                      const std::map<Facet, BoundarySpec>& specs,
                      const std::vector<SensorBinding>& sensors,
                      const std::vector<ProbeSpec>& probes,
                      const std::vector<std::string>& input_labels,
                      const AssemblyOptions& opts) {
    const int n = mesh.cell_count();
    const int m = static_cast<int>(input_labels.size());

    // Coverage check: every exterior facet needs exactly one spec.
    for (const auto& f : mesh.exterior_facets()) {
        if (!specs.count(f))
            throw ConfigError("fvnet: uncovered exterior facet at cell " +
                              std::to_string(f.cell));
    }
    for (const auto& [f, s] : specs) {
        if (mesh.neighbor(f.cell, f.side) >= 0)
            throw ConfigError("fvnet: boundary spec placed on an interior facet");
    }

    LtiModel model;
    model.A = Eigen::MatrixXd::Zero(n, n);
    model.B = Eigen::MatrixXd::Zero(n, m);
    model.input_labels = input_labels;
    model.capacitance = Eigen::VectorXd::Zero(n);

    for (const auto& c : mesh.cells) {
        model.capacitance[c.index] = c.volume() * mesh.material(c).density_rho *
                                     mesh.material(c).heat_capacity_cp;
        const int ix = c.index % mesh.n_a;
        const int ir = c.index / mesh.n_a;
        model.state_labels.push_back("T[" + std::to_string(ix) + "," + std::to_string(ir) + "]");
        switch (mesh.kind(c)) {
            case ZoneKind::Cylinder: model.cylinder_states.push_back(c.index); break;
            case ZoneKind::ScrewConveyor: model.screw_states.push_back(c.index); break;
            case ZoneKind::ScrewCore: model.core_states.push_back(c.index); break;
        }
    }

    // Interior conduction.
    for (const auto& c : mesh.cells) {
        for (Side side : {Side::XPos, Side::RPos}) {
            const int nb = mesh.neighbor(c.index, side);
            if (nb < 0) continue;
            if (opts.sever_gamma3 && side == Side::RPos) {
                const bool a_cyl = mesh.kind(c) == ZoneKind::Cylinder;
                const bool b_cyl = mesh.kind(mesh.cells[nb]) == ZoneKind::Cylinder;
                if (a_cyl != b_cyl) continue;
            }
            const double G = interior_facet_conductance(mesh, c.index, side);
            const double Ci = model.capacitance[c.index];
            const double Cj = model.capacitance[nb];
            model.A(c.index, c.index) -= G / Ci;
            model.A(c.index, nb) += G / Ci;
            model.A(nb, nb) -= G / Cj;
            model.A(nb, c.index) += G / Cj;
        }
    }

    // Boundary conditions (facet nodes eliminated).
    std::vector<FlowForm> facet_forms;
    std::map<Facet, int> form_of_facet;
    for (const auto& [f, spec] : specs) {
        FlowForm form = boundary_flow_form(mesh, f, spec, input_labels);
        const double Ci = model.capacitance[f.cell];
        model.A(f.cell, f.cell) += form.x_coeff / Ci;
        for (const auto& [colIdx, w] : form.u_coeffs)
            model.B(f.cell, colIdx) += w / Ci;
        form_of_facet[f] = static_cast<int>(facet_forms.size());
        facet_forms.push_back(std::move(form));
    }

    // Gamma3 radial cut links, ordered by axial index.
    model.gamma3_links.resize(mesh.n_a);
    for (auto& l : model.gamma3_links) l = Gamma3Link{};
    for (const auto& f : mesh.gamma3_facets) {
        if (f.side != Side::RNeg) continue;
        const int ix = f.cell % mesh.n_a;
        Gamma3Link link;
        link.axial_index = ix;
        link.cylinder_cell = f.cell;
        link.screw_cell = mesh.neighbor(f.cell, Side::RNeg);
        link.conductance = opts.sever_gamma3 ? 0.0
                                             : interior_facet_conductance(mesh, f.cell, Side::RNeg);
        model.gamma3_links[ix] = link;
    }
    if (mesh.gamma3_facets.empty()) model.gamma3_links.clear();

    // Outputs: sensors first, then probe rows.
    const int p = static_cast<int>(sensors.size() + 0);
    std::vector<Eigen::VectorXd> c_rows, d_rows;
    for (const auto& s : sensors) {
        Eigen::VectorXd cr = Eigen::VectorXd::Zero(n);
        cr[s.cell] = 1.0;
        c_rows.push_back(cr);
        d_rows.push_back(Eigen::VectorXd::Zero(m));
        model.output_labels.push_back(s.label);
    }
    model.num_sensor_outputs = p;
    model.sensors = sensors;

    auto add_facet_flows = [&](Eigen::VectorXd& cr, Eigen::VectorXd& dr,
                               const std::vector<Facet>& facets) {
        for (const auto& f : facets) {
            const auto it = form_of_facet.find(f);
            if (it == form_of_facet.end()) continue;
            const auto& form = facet_forms[it->second];
            cr[form.cell] += form.x_coeff;
            for (const auto& [colIdx, w] : form.u_coeffs) dr[colIdx] += w;
        }
    };

    for (const auto& probe : probes) {
        using K = ProbeSpec::Kind;
        if (probe.kind == K::Gamma3PerFacet) {
            for (const auto& link : model.gamma3_links) {
                Eigen::VectorXd cr = Eigen::VectorXd::Zero(n);
                Eigen::VectorXd dr = Eigen::VectorXd::Zero(m);
                if (link.cylinder_cell >= 0) {
                    cr[link.cylinder_cell] += link.conductance;
                    cr[link.screw_cell] -= link.conductance;
                }
                c_rows.push_back(cr);
                d_rows.push_back(dr);
                model.output_labels.push_back(probe.name + "[" +
                                              std::to_string(link.axial_index) + "]");
            }
            continue;
        }
        Eigen::VectorXd cr = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd dr = Eigen::VectorXd::Zero(m);
        switch (probe.kind) {
            case K::TapeFlow:
                if (probe.index < 0 || probe.index >= static_cast<int>(mesh.gamma2_facets.size()))
                    throw ConfigError("fvnet: tape probe index out of range");
                add_facet_flows(cr, dr, mesh.gamma2_facets[probe.index]);
                break;
            case K::AmbientFlow:
                add_facet_flows(cr, dr, mesh.gamma1_facets);
                break;
            case K::BoundaryTotal: {
                std::vector<Facet> all;
                for (const auto& [f, s] : specs) all.push_back(f);
                add_facet_flows(cr, dr, all);
                break;
            }
            case K::Gamma3Total:
                for (const auto& link : model.gamma3_links) {
                    if (link.cylinder_cell < 0) continue;
                    cr[link.cylinder_cell] += link.conductance;
                    cr[link.screw_cell] -= link.conductance;
                }
                break;
            case K::Gamma3PerFacet: break; // handled above
        }
        c_rows.push_back(cr);
        d_rows.push_back(dr);
        model.output_labels.push_back(probe.name);
    }

    model.C = Eigen::MatrixXd::Zero(static_cast<int>(c_rows.size()), n);
    model.D = Eigen::MatrixXd::Zero(static_cast<int>(c_rows.size()), m);
    for (size_t i = 0; i < c_rows.size(); ++i) {
        model.C.row(static_cast<int>(i)) = c_rows[i].transpose();
        model.D.row(static_cast<int>(i)) = d_rows[i].transpose();
    }
    if (!model.A.allFinite() || !model.B.allFinite())
        throw NumericError("fvnet: non-finite entries after assembly");
    return model;
}

} // namespace extherm
