// extherm: config-driven thermal models of a plastics extruder.
// Subcommands: build, simulate, fe-compare, fit, observe.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "extherm/config.hpp"
#include "extherm/errors.hpp"
#include "extherm/lti.hpp"
#include "extherm/sensor.hpp"

using namespace extherm;

namespace {

bool g_verbose = false;

void vlog(const std::string& msg) {
    if (g_verbose) std::cerr << "[extherm] " << msg << "\n";
}

double infer_dt(const TimeSeries& ts, double cli_dt) {
    if (cli_dt > 0.0) return cli_dt;
    if (ts.size() < 2) throw DataError("cannot infer dt from fewer than two samples; pass --dt");
    const double d = ts.time[1] - ts.time[0];
    if (!is_uniform(ts, d))
        throw DataError("input time axis is not uniform; pass --dt to resample");
    return d;
}

TimeSeries load_input(const std::string& path) {
    TimeSeries ts = read_csv(path);
    if (ts.size() == 0) throw DataError("input file '" + path + "' has no samples");
    return ts;
}

std::string stem_suffix(const std::string& path, const std::string& suffix) {
    const size_t dot = path.rfind('.');
    if (dot == std::string::npos || path.find('/', dot) != std::string::npos)
        return path + suffix;
    return path.substr(0, dot) + suffix + path.substr(dot);
}

int cmd_build(const std::string& config_path, const std::string& output) {
    const ProjectConfig cfg = load_config(config_path);
    const BuiltModel built = build_from_config(cfg);
    const double margin = max_real_eigenvalue(built.model.A);
    std::ostringstream report;
    report << "states=" << built.model.n() << ", inputs=" << built.model.m()
           << ", outputs=" << built.model.p() << ", stable=" << (margin < 0.0 ? "true" : "false")
           << "\n";
    report << "max_real_eigenvalue=" << format_double(margin) << "\n";
    report << "metzler=" << (is_metzler(built.model.A, 1e-12) ? "true" : "false") << "\n";
    for (const auto& s : built.sensors)
        report << "sensor " << s.label << ": cell=" << s.cell << " x=" << format_double(s.x_snap)
               << " r=" << format_double(s.r_snap) << " offset_x=" << format_double(s.offset_x)
               << " offset_r=" << format_double(s.offset_r) << "\n";
    std::cout << report.str();
    std::string manifest_path = "build.manifest.json";
    std::vector<std::string> outputs;
    if (!output.empty()) {
        std::ofstream out(output);
        if (!out) throw DataError("cannot write '" + output + "'");
        out << report.str();
        out.close();
        outputs.push_back(output);
        manifest_path = output + ".manifest.json";
    }
    write_manifest(manifest_path, config_path, {}, outputs);
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& input,
                 const std::string& output, double dt_cli, double x0_temp, bool probes,
                 double noise_sigma, unsigned seed, bool record_states) {
    const ProjectConfig cfg = load_config(config_path);
    TimeSeries u = load_input(input);
    const double dt = infer_dt(u, dt_cli);
    if (!is_uniform(u, dt)) u = resample_hold(u, dt);

    BuildOptions opts;
    if (probes) {
        for (size_t k = 0; k < cfg.geometry.heating_tapes.size(); ++k) {
            ProbeSpec p;
            p.kind = ProbeSpec::Kind::TapeFlow;
            p.index = static_cast<int>(k);
            p.name = "P_tape_" + std::to_string(k + 1);
            opts.probes.push_back(p);
        }
        opts.probes.push_back({ProbeSpec::Kind::AmbientFlow, -1, "P_ambient"});
        opts.probes.push_back({ProbeSpec::Kind::Gamma3Total, -1, "P_gamma3"});
    }
    const BuiltModel built = build_from_config(cfg, opts);

    Eigen::VectorXd u0(built.model.m());
    for (int c = 0; c < built.model.m(); ++c)
        u0[c] = u.channel(built.model.input_labels[c])[0];
    Eigen::VectorXd x0;
    if (std::isfinite(x0_temp))
        x0 = Eigen::VectorXd::Constant(built.model.n(), x0_temp);
    else
        x0 = equilibrium(built.model, u0);

    const DiscreteLti d = discretize(built.model, dt, DiscretizeMethod::Zoh);
    SimOptions sim_opts;
    sim_opts.record_states = record_states;
    TimeSeries y = simulate(d, x0, u, sim_opts);

    if (noise_sigma > 0.0) {
        std::mt19937 rng(seed);
        std::normal_distribution<double> gauss(0.0, noise_sigma);
        for (int r = 0; r < built.model.num_sensor_outputs; ++r)
            for (double& v : y.columns[r]) v += gauss(rng);
    }
    // ship the inputs alongside the outputs so the file feeds fit/observe directly
    for (const auto& name : built.model.input_labels)
        if (!y.has_channel(name)) y.add_channel(name) = u.channel(name);

    write_csv(y, output);
    write_manifest(output + ".manifest.json", config_path, {input}, {output});
    vlog("simulate: " + std::to_string(y.size()) + " samples at dt=" + format_double(dt));
    return 0;
}

int cmd_fe_compare(const std::string& config_path, const std::string& input,
                   const std::string& output, double dt_cli, int refine) {
    const ProjectConfig cfg = load_config(config_path);
    TimeSeries u = load_input(input);
    const double dt = infer_dt(u, dt_cli);
    if (!is_uniform(u, dt)) u = resample_hold(u, dt);

    const BuiltModel built = build_from_config(cfg);
    const double T_init = u.channel("T_0")[0];
    const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(built.model.n(), T_init);
    const DiscreteLti d = discretize(built.model, dt, DiscretizeMethod::Zoh);
    const TimeSeries y_fv = simulate(d, x0, u);

    const FeProblem prob = fe_problem_from_config(cfg, built.mesh, refine);
    const Eigen::VectorXd T0_field =
        Eigen::VectorXd::Constant(prob.mesh.node_count(), T_init);
    std::vector<std::pair<double, double>> points;
    std::vector<std::string> names;
    for (const auto& s : built.sensors) {
        points.emplace_back(s.x_snap, s.r_snap);
        names.push_back(s.label);
    }
    const TimeSeries y_fe = fe_simulate(prob, T0_field, u, dt, points, names);

    std::ostringstream report;
    report << "sensor,max_abs_dev,rms_dev\n";
    double overall_max = 0.0, overall_sq = 0.0;
    size_t overall_n = 0;
    for (const auto& name : names) {
        const auto& a = y_fv.channel(name);
        const auto& b = y_fe.channel(name);
        double mx = 0.0, sq = 0.0;
        for (size_t k = 0; k < a.size(); ++k) {
            const double e = std::abs(a[k] - b[k]);
            mx = std::max(mx, e);
            sq += e * e;
        }
        overall_max = std::max(overall_max, mx);
        overall_sq += sq;
        overall_n += a.size();
        report << name << "," << format_double(mx) << ","
               << format_double(std::sqrt(sq / static_cast<double>(a.size()))) << "\n";
    }
    report << "overall," << format_double(overall_max) << ","
           << format_double(std::sqrt(overall_sq / static_cast<double>(overall_n))) << "\n";
    std::cout << report.str();
    std::ofstream out(output);
    if (!out) throw DataError("cannot write '" + output + "'");
    out << report.str();
    out.close();
    write_manifest(output + ".manifest.json", config_path, {input}, {output});
    return 0;
}

int cmd_fit(const std::string& config_path, const std::string& input, const std::string& output,
            double dt_cli, int max_iter) {
    ProjectConfig cfg = load_config(config_path);
    TimeSeries measured = load_input(input);
    if (dt_cli > 0.0) cfg.fit.dt = dt_cli;
    else if (is_uniform(measured, measured.size() > 1 ? measured.time[1] - measured.time[0] : 1.0)
             && measured.size() > 1)
        cfg.fit.dt = measured.time[1] - measured.time[0];

    const FitProblem prob = make_fit_problem(cfg, measured);
    FitOptions opts;
    if (max_iter > 0) opts.max_iterations = max_iter;
    const FitResult res = fit(prob, opts);

    ParamMap fitted;
    std::ostringstream report;
    report << "residual_norm=" << format_double(res.residual_norm) << "\n";
    report << "iterations=" << res.iterations << "\n";
    report << "convergence=" << res.convergence_reason << "\n";
    for (size_t j = 0; j < prob.params.size(); ++j) {
        fitted[prob.params[j].name] = res.p_hat[static_cast<int>(j)];
        report << prob.params[j].name << "=" << format_double(res.p_hat[static_cast<int>(j)])
               << " sigma=" << format_double(res.confidence[static_cast<int>(j)])
               << " identifiable=" << (res.identifiable[j] ? "true" : "false") << "\n";
    }
    std::cout << report.str();

    const ProjectConfig fitted_cfg = apply_parameters(cfg, fitted);
    std::ofstream out(output);
    if (!out) throw DataError("cannot write '" + output + "'");
    out << to_json(fitted_cfg).dump(2) << "\n";
    out.close();
    write_manifest(output + ".manifest.json", config_path, {input}, {output});
    return 0;
}

AugmentedObserver make_observer(const ProjectConfig& cfg, double dt) {
    const BuiltModel built = build_from_config(cfg);
    const CutModel cut = cut_model(built.model, built.mesh, cfg.observer.m_bar);
    AugmentedObserver obs =
        augment_and_discretize(cut, dt, q_mode_basis(cut, cfg.observer.q_modes));
    Eigen::MatrixXd Qw = Eigen::MatrixXd::Zero(obs.n(), obs.n());
    Qw.topLeftCorner(obs.n_xc, obs.n_xc) =
        cfg.observer.sigma_w_state * cfg.observer.sigma_w_state *
        Eigen::MatrixXd::Identity(obs.n_xc, obs.n_xc);
    Qw.bottomRightCorner(obs.n_q, obs.n_q) =
        cfg.observer.sigma_w_q * cfg.observer.sigma_w_q *
        Eigen::MatrixXd::Identity(obs.n_q, obs.n_q);
    const Eigen::MatrixXd Rv =
        cfg.observer.sigma_v * cfg.observer.sigma_v *
        Eigen::MatrixXd::Identity(static_cast<int>(obs.output_labels.size()),
                                   static_cast<int>(obs.output_labels.size()));
    return design_gain(std::move(obs), Qw, Rv);
}

void write_profile(const AugmentedObserver& obs, const FvMesh& mesh,
                   const Eigen::VectorXd& qhat, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "axial_index,x_center,qhat\n";
    for (int q = 0; q < obs.n_q_full(); ++q) {
        const std::string& lbl = obs.q_labels[q];
        if (lbl.rfind("q_a[", 0) != 0) continue;
        const int ix = std::stoi(lbl.substr(4));
        const double xc = (mesh.axial_edges[ix] + mesh.axial_edges[ix + 1]) / 2.0;
        out << ix << "," << format_double(xc) << "," << format_double(qhat[q]) << "\n";
    }
}

int cmd_observe(const std::string& config_path, const std::string& input,
                const std::string& output, double dt_cli, bool follow, double idle_timeout,
                bool record_states) {
    const ProjectConfig cfg = load_config(config_path);
    const BuiltModel built = build_from_config(cfg); // for the profile axis

    if (!follow) {
        TimeSeries u_o = load_input(input);
        const double dt = dt_cli > 0.0 ? dt_cli
                          : (u_o.size() > 1 && is_uniform(u_o, u_o.time[1] - u_o.time[0]))
                              ? u_o.time[1] - u_o.time[0]
                              : cfg.observer.dt;
        if (!is_uniform(u_o, dt)) u_o = resample_hold(u_o, dt);
        const AugmentedObserver obs = make_observer(cfg, dt);
        EstimateOptions eopts;
        eopts.record_states = record_states;
        const TimeSeries est = estimate(obs, u_o, eopts);
        write_csv(est, output);
        Eigen::VectorXd q_last(obs.n_q_full());
        for (int q = 0; q < obs.n_q_full(); ++q)
            q_last[q] = est.channel("qhat." + obs.q_labels[q]).back();
        const std::string profile_path = stem_suffix(output, "_profile");
        write_profile(obs, built.mesh, q_last, profile_path);
        write_manifest(output + ".manifest.json", config_path, {input}, {output, profile_path});
        return 0;
    }

    // Tail-follow: consume complete lines as they appear, emit one estimate
    // row per sample, stop after idle_timeout seconds without new data.
    const double dt = dt_cli > 0.0 ? dt_cli : cfg.observer.dt;
    const AugmentedObserver obs = make_observer(cfg, dt);
    const int m = static_cast<int>(obs.input_labels.size());
    const int p = static_cast<int>(obs.output_labels.size());

    std::ifstream in(input, std::ios::binary);
    if (!in) throw DataError("cannot open '" + input + "'");
    std::ofstream out(output, std::ios::binary);
    if (!out) throw DataError("cannot write '" + output + "'");
    out << "time";
    for (const auto& q : obs.q_labels) out << ",qhat." << q;
    if (record_states)
        for (int i = 0; i < obs.n_xc; ++i) out << ",xhat[" << i << "]";
    out << "\n" << std::flush;

    std::string buf;
    std::vector<int> ucols, ycols;
    int time_col = -1, n_cols = -1;
    bool header_done = false, initialized = false;
    Eigen::VectorXd xhat, uk(m), yk(p), u_prev;
    auto last_data = std::chrono::steady_clock::now();
    size_t row = 0;

    auto process_line = [&](const std::string& line) {
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (!header_done) {
            n_cols = static_cast<int>(fields.size());
            auto col = [&](const std::string& name) {
                for (int c = 0; c < n_cols; ++c)
                    if (fields[c] == name) return c;
                throw DataError("stream is missing channel '" + name + "'");
            };
            time_col = col("time");
            for (const auto& name : obs.input_labels) ucols.push_back(col(name));
            for (const auto& name : obs.output_labels) ycols.push_back(col(name));
            header_done = true;
            return;
        }
        if (static_cast<int>(fields.size()) != n_cols)
            throw DataError("stream row " + std::to_string(row) + " has wrong field count");
        auto val = [&](int c) { return std::strtod(fields[c].c_str(), nullptr); };
        for (int c = 0; c < m; ++c) uk[c] = val(ucols[c]);
        bool y_ok = true;
        for (int r = 0; r < p; ++r) {
            yk[r] = val(ycols[r]);
            if (!std::isfinite(yk[r])) y_ok = false;
        }
        if (!initialized) {
            xhat = Eigen::VectorXd::Zero(obs.n());
            xhat.head(obs.n_xc) =
                Eigen::PartialPivLU<Eigen::MatrixXd>(obs.A11_cont).solve(-obs.Bc_cont * uk);
            initialized = true;
        } else {
            xhat = obs.Abar * xhat + obs.Bbar * u_prev;
        }
        if (y_ok) xhat += obs.K * (yk - obs.Cbar * xhat);
        u_prev = uk;
        const Eigen::VectorXd qfull = obs.expand_q(xhat);
        out << fields[time_col];
        for (int q = 0; q < obs.n_q_full(); ++q) out << "," << format_double(qfull[q]);
        if (record_states)
            for (int i = 0; i < obs.n_xc; ++i) out << "," << format_double(xhat[i]);
        out << "\n" << std::flush;
        ++row;
    };

    while (true) {
        char chunk[4096];
        in.clear();
        in.read(chunk, sizeof(chunk));
        const std::streamsize got = in.gcount();
        if (got > 0) {
            buf.append(chunk, static_cast<size_t>(got));
            size_t nl;
            while ((nl = buf.find('\n')) != std::string::npos) {
                std::string line = buf.substr(0, nl);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                buf.erase(0, nl + 1);
                if (!line.empty()) process_line(line);
            }
            last_data = std::chrono::steady_clock::now();
        } else {
            const auto idle = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                            last_data)
                                  .count();
            if (idle >= idle_timeout) break;
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
    }
    if (!buf.empty()) {
        if (buf.back() == '\r') buf.pop_back();
        process_line(buf);
    }
    out.close();
    std::vector<std::string> outputs{output};
    if (initialized) {
        const std::string profile_path = stem_suffix(output, "_profile");
        write_profile(obs, built.mesh, obs.expand_q(xhat), profile_path);
        outputs.push_back(profile_path);
    }
    write_manifest(output + ".manifest.json", config_path, {input}, outputs);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"extherm: reduced-order thermal models of a plastics extruder"};
    app.require_subcommand(1);

    std::string config_path, input, output;
    double dt = -1.0, x0_temp = std::nan(""), noise = 0.0, idle_timeout = 5.0;
    unsigned seed = 0;
    int refine = 4, max_iter = -1;
    bool probes = false, record_states = false, follow = false;

    auto add_common = [&](CLI::App* sub, bool needs_input, bool needs_output) {
        sub->add_option("--config", config_path, "project config file")->required();
        if (needs_input) sub->add_option("--input", input, "input CSV")->required();
        if (needs_output) sub->add_option("--output", output, "output file")->required();
        sub->add_flag("--verbose", g_verbose, "log progress to stderr");
    };

    CLI::App* build = app.add_subcommand("build", "assemble the model and report dimensions");
    add_common(build, false, false);
    build->add_option("--output", output, "also write the report to a file");

    CLI::App* sim = app.add_subcommand("simulate", "simulate sensor outputs for an input CSV");
    add_common(sim, true, true);
    sim->add_option("--dt", dt, "sample period [s] (default: inferred)");
    sim->add_option("--x0", x0_temp, "uniform initial temperature [K] (default: equilibrium)");
    sim->add_flag("--probes", probes, "append heat-flow probe channels");
    sim->add_option("--noise", noise, "Gaussian sensor noise sigma [K]");
    sim->add_option("--seed", seed, "noise generator seed");
    sim->add_flag("--states", record_states, "append state channels");

    CLI::App* fec = app.add_subcommand("fe-compare", "deviation report against the FE reference");
    add_common(fec, true, true);
    fec->add_option("--dt", dt, "sample period [s] (default: inferred)");
    fec->add_option("--refine", refine, "FE grid lines per volume cell")->check(CLI::PositiveNumber);

    CLI::App* fitc = app.add_subcommand("fit", "calibrate parameters against measured data");
    add_common(fitc, true, true);
    fitc->add_option("--dt", dt, "resample period [s] (default: inferred)");
    fitc->add_option("--max-iter", max_iter, "iteration cap");

    CLI::App* obsc = app.add_subcommand("observe", "estimate interface heat flows");
    add_common(obsc, true, true);
    obsc->add_option("--dt", dt, "observer period [s] (default: from the file)");
    obsc->add_flag("--follow", follow, "tail-follow a growing CSV");
    obsc->add_option("--idle-timeout", idle_timeout, "stop after this many idle seconds");
    obsc->add_flag("--states", record_states, "append state estimate channels");

    try {
        app.parse(argc, argv);
        if (build->parsed()) return cmd_build(config_path, output);
        if (sim->parsed())
            return cmd_simulate(config_path, input, output, dt, x0_temp, probes, noise, seed,
                                record_states);
        if (fec->parsed()) return cmd_fe_compare(config_path, input, output, dt, refine);
        if (fitc->parsed()) return cmd_fit(config_path, input, output, dt, max_iter);
        if (obsc->parsed())
            return cmd_observe(config_path, input, output, dt, follow, idle_timeout,
                               record_states);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ConfigError::exit_code;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return DataError::exit_code;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return NumericError::exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
