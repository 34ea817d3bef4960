#include <doctest.h>

#include <cmath>

#include "extherm/calib.hpp"
#include "extherm/config.hpp"
#include "extherm/errors.hpp"
#include "extherm/lti.hpp"
#include "helpers.hpp"

using namespace extherm;

namespace {

// synthetic measurement record: inputs plus noiseless simulated sensor
// channels on one time axis, plant started at the t=0 equilibrium
TimeSeries synth_measured(const ProjectConfig& cfg, double dt, double duration) {
    const TimeSeries u = testing::heatup_record(cfg, dt, duration, {420.0, 450.0});
    const BuiltModel built = build_from_config(cfg);
    Eigen::VectorXd u0(built.model.m());
    for (int c = 0; c < built.model.m(); ++c)
        u0[c] = u.channel(built.model.input_labels[c]).front();
    const DiscreteLti d = discretize(built.model, dt, DiscretizeMethod::Zoh);
    const TimeSeries y = simulate(d, equilibrium(built.model, u0), u);
    TimeSeries merged = u;
    for (const auto& name : built.model.output_labels) {
        merged.add_channel(name);
        merged.columns.back() = y.channel(name);
    }
    return merged;
}

ProjectConfig fit_config(std::vector<ParamSpec> params) {
    ProjectConfig cfg = testing::small_config();
    cfg.fit.dt = 10.0;
    cfg.fit.parameters = std::move(params);
    return cfg;
}

} // namespace

TEST_CASE("residual vanishes at the true parameters") {
    const ProjectConfig cfg = fit_config({{"c_p_s", 100.0, 3000.0, 800.0},
                                          {"lambda_s", 0.1, 20.0, 2.5}});
    const TimeSeries measured = synth_measured(cfg, 10.0, 3000.0);
    const FitProblem prob = make_fit_problem(cfg, measured);
    Eigen::VectorXd p(2);
    p << 800.0, 2.5;
    CHECK(residual(p, prob).lpNorm<Eigen::Infinity>() < 1e-8);
    // moving a parameter must change the residual
    p[1] = 5.0;
    CHECK(residual(p, prob).lpNorm<Eigen::Infinity>() > 1e-3);
}

TEST_CASE("pathological parameters give a penalty instead of throwing") {
    const ProjectConfig cfg = fit_config({{"c_p_s", 100.0, 3000.0, 800.0},
                                          {"lambda_s", 0.1, 20.0, 2.5}});
    const TimeSeries measured = synth_measured(cfg, 10.0, 200.0);
    const FitProblem prob = make_fit_problem(cfg, measured);
    Eigen::VectorXd p(2);
    p << 800.0, -2.5;
    const Eigen::VectorXd r = residual(p, prob);
    CHECK(r.allFinite());
    CHECK(r.minCoeff() >= 1e6);
}

TEST_CASE("recovers granulate heat capacity and conductivity from clean data") {
    // truth is c_p_s = 800, lambda_s = 2.5; start well off
    const ProjectConfig cfg = fit_config({{"c_p_s", 100.0, 3000.0, 1400.0},
                                          {"lambda_s", 0.1, 20.0, 1.2}});
    const TimeSeries measured = synth_measured(cfg, 10.0, 4000.0);
    const FitProblem prob = make_fit_problem(cfg, measured);
    const FitResult res = fit(prob);
    CHECK(std::abs(res.p_hat[0] - 800.0) < 0.01 * 800.0);
    CHECK(std::abs(res.p_hat[1] - 2.5) < 0.01 * 2.5);
    CHECK(res.residual_norm < 1e-6);
    REQUIRE(res.identifiable.size() == 2);
    CHECK(res.identifiable[0]);
    CHECK(res.identifiable[1]);
    REQUIRE(res.confidence.size() == 2);
    CHECK(std::isfinite(res.confidence[0]));
    CHECK(std::isfinite(res.confidence[1]));
    CHECK(res.confidence[0] >= 0.0);
}

TEST_CASE("bounds are hard constraints") {
    // truth c_p_s = 800 lies above the box; the fit must stop at the bound
    const ProjectConfig cfg = fit_config({{"c_p_s", 100.0, 500.0, 300.0}});
    const TimeSeries measured = synth_measured(cfg, 10.0, 2000.0);
    const FitProblem prob = make_fit_problem(cfg, measured);
    const FitResult res = fit(prob);
    CHECK(res.p_hat[0] >= 100.0 - 1e-9);
    CHECK(res.p_hat[0] <= 500.0 + 1e-6);
    CHECK(res.p_hat[0] > 450.0); // pushed towards the truth side of the box
}

TEST_CASE("problem validation rejects inconsistent setups") {
    ProjectConfig cfg = fit_config({{"c_p_s", 100.0, 3000.0, 800.0}});
    const TimeSeries measured = synth_measured(cfg, 10.0, 100.0);
    FitProblem prob = make_fit_problem(cfg, measured);
    prob.params[0].init = 5000.0; // init above upper
    CHECK_THROWS_AS(fit(prob), ConfigError);

    FitProblem bad_dt = make_fit_problem(cfg, measured);
    bad_dt.dt = 0.0;
    CHECK_THROWS_AS(fit(bad_dt), ConfigError);

    ProjectConfig none = cfg;
    none.fit.parameters.clear();
    CHECK_THROWS_AS(fit(make_fit_problem(none, measured)), ConfigError);
}
