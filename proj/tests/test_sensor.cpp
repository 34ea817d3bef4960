#include <doctest.h>

#include <cmath>

#include "extherm/config.hpp"
#include "extherm/errors.hpp"
#include "extherm/lti.hpp"
#include "extherm/sensor.hpp"
#include "helpers.hpp"

using namespace extherm;

namespace {

AugmentedObserver scalar_integrator() {
    AugmentedObserver obs;
    obs.Abar = Eigen::MatrixXd::Ones(1, 1);
    obs.Bbar = Eigen::MatrixXd::Zero(1, 0);
    obs.Cbar = Eigen::MatrixXd::Ones(1, 1);
    obs.q_expand = Eigen::MatrixXd::Identity(1, 1);
    obs.n_xc = 0;
    obs.n_q = 1;
    obs.q_labels = {"q"};
    obs.output_labels = {"y"};
    obs.dt = 1.0;
    obs.A11_cont = Eigen::MatrixXd::Zero(0, 0);
    obs.Bc_cont = Eigen::MatrixXd::Zero(0, 0);
    return obs;
}

// toy observer on the small configuration: axial cut flows only, four modes
struct Toy {
    BuiltModel built;
    CutModel cut;
    AugmentedObserver obs;
};

Toy make_toy(double dt = 20.0) {
    Toy t;
    t.built = build_from_config(testing::small_config());
    t.cut = cut_model(t.built.model, t.built.mesh, /*m_bar=*/0);
    t.obs = augment_and_discretize(t.cut, dt, q_mode_basis(t.cut, 4));
    const int n = t.obs.n();
    Eigen::MatrixXd Qw = Eigen::MatrixXd::Identity(n, n) * 1e-8;
    Qw.bottomRightCorner(t.obs.n_q, t.obs.n_q) = Eigen::MatrixXd::Identity(t.obs.n_q, t.obs.n_q);
    const Eigen::MatrixXd Rv = 0.0625 * Eigen::MatrixXd::Identity(4, 4);
    t.obs = design_gain(std::move(t.obs), Qw, Rv);
    return t;
}

// drives the augmented model with constant mode amplitudes w and constant
// inputs; returns the observer input record (inputs + sensor channels)
TimeSeries twin_record(const Toy& t, const Eigen::VectorXd& w, const Eigen::VectorXd& u,
                       int steps) {
    TimeSeries rec;
    for (const auto& name : t.obs.input_labels) rec.add_channel(name);
    for (const auto& name : t.obs.output_labels) rec.add_channel(name);
    const int m = static_cast<int>(t.obs.input_labels.size());
    const int p = static_cast<int>(t.obs.output_labels.size());
    Eigen::VectorXd z = Eigen::VectorXd::Zero(t.obs.n());
    // start the plant at its q-loaded equilibrium so the record is stationary
    z.head(t.obs.n_xc) = -t.cut.A11.lu().solve(t.cut.Bq * t.obs.q_expand * w + t.cut.Bc * u);
    z.tail(t.obs.n_q) = w;
    for (int k = 0; k < steps; ++k) {
        rec.time.push_back(k * t.obs.dt);
        for (int c = 0; c < m; ++c) rec.columns[c].push_back(u[c]);
        const Eigen::VectorXd y = t.obs.Cbar * z;
        for (int r = 0; r < p; ++r) rec.columns[m + r].push_back(y[r]);
        z = t.obs.Abar * z + t.obs.Bbar * u;
    }
    return rec;
}

} // namespace

TEST_CASE("scalar DARE closed form: golden-ratio covariance") {
    const Eigen::MatrixXd A = Eigen::MatrixXd::Ones(1, 1);
    const Eigen::MatrixXd C = Eigen::MatrixXd::Ones(1, 1);
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Ones(1, 1);
    const Eigen::MatrixXd R = Eigen::MatrixXd::Ones(1, 1);
    const Eigen::MatrixXd P = solve_dare(A, C, Q, R);
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    CHECK(std::abs(P(0, 0) - golden) < 1e-10);

    AugmentedObserver obs = design_gain(scalar_integrator(), Q, R);
    CHECK(obs.K(0, 0) == doctest::Approx(golden / (golden + 1.0)).epsilon(1e-10));
    CHECK(observer_error_spectral_radius(obs) < 1.0);
}

TEST_CASE("no trust in the measurement: K -> 0 as Rv -> infinity") {
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Ones(1, 1);
    AugmentedObserver obs =
        design_gain(scalar_integrator(), Q, 1e14 * Eigen::MatrixXd::Ones(1, 1));
    CHECK(std::abs(obs.K(0, 0)) < 1e-6);
}

TEST_CASE("cut model dimensions and consistency with the severed full model") {
    const ProjectConfig cfg = reference_config();
    const BuiltModel built = build_from_config(cfg);
    const CutModel cut = cut_model(built.model, built.mesh);
    CHECK(cut.n_c() == 70);
    CHECK(cut.n_axial == 35);
    CHECK(cut.m_bar == 4); // two cylinder rings at each end face
    CHECK(cut.n_q() == 39);
    CHECK(cut.q_labels.front() == "q_a[0]");
    CHECK(cut.q_labels.back() == "q_r[3]");
    // A11 alone is Hurwitz (grounded through the outer Robin facets)
    CHECK(max_real_eigenvalue(cut.A11) < 0.0);

    // q = 0 reproduces the full model with an adiabatic Gamma3 cut
    BuildOptions sever;
    sever.sever_gamma3 = true;
    const BuiltModel severed = build_from_config(cfg, sever);
    double worst = 0.0;
    for (int i = 0; i < cut.n_c(); ++i) {
        for (int j = 0; j < cut.n_c(); ++j)
            worst = std::max(worst, std::abs(cut.A11(i, j) -
                                             severed.model.A(cut.cut_states[i],
                                                             cut.cut_states[j])));
        worst = std::max(worst,
                         (cut.Bc.row(i) - severed.model.B.row(cut.cut_states[i])).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-12);

    // each axial flow loads exactly one innermost cylinder cell with 1/C
    for (int k = 0; k < cut.n_axial; ++k) {
        int nonzeros = 0;
        for (int i = 0; i < cut.n_c(); ++i)
            if (cut.Bq(i, k) != 0.0) ++nonzeros;
        CHECK(nonzeros == 1);
    }
}

TEST_CASE("augmentation: identity disturbance block and ZOH consistency") {
    const Toy t = make_toy();
    const int nq = t.obs.n_q;
    CHECK((t.obs.Abar.bottomRightCorner(nq, nq) -
           Eigen::MatrixXd::Identity(nq, nq)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(t.obs.Abar.bottomLeftCorner(nq, t.obs.n_xc).cwiseAbs().maxCoeff() == 0.0);

    // dt -> 0: Abar -> I
    const AugmentedObserver tiny =
        augment_and_discretize(t.cut, 1e-6, q_mode_basis(t.cut, 4));
    CHECK((tiny.Abar - Eigen::MatrixXd::Identity(tiny.n(), tiny.n())).cwiseAbs().maxCoeff() <
          1e-4);

    // constant w, constant u: discrete simulation settles at -A11^{-1}(Bq q + Bc u)
    Eigen::VectorXd w(4);
    w << 30.0, -20.0, 10.0, 5.0;
    Eigen::VectorXd u(3);
    u << 420.0, 440.0, 293.15;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(t.obs.n());
    z.head(t.obs.n_xc).setConstant(293.15);
    z.tail(4) = w;
    const AugmentedObserver big = augment_and_discretize(t.cut, 2000.0, q_mode_basis(t.cut, 4));
    for (int k = 0; k < 3000; ++k) z = big.Abar * z + big.Bbar * u;
    const Eigen::VectorXd x_inf =
        -t.cut.A11.lu().solve(t.cut.Bq * t.obs.q_expand * w + t.cut.Bc * u);
    CHECK((z.head(t.obs.n_xc) - x_inf).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("one integrator per cut flow is not detectable from 14 sensors") {
    const ProjectConfig cfg = reference_config();
    const BuiltModel built = build_from_config(cfg);
    const CutModel cut = cut_model(built.model, built.mesh);
    AugmentedObserver obs = augment_and_discretize(cut, 10.0); // identity basis
    const int n = obs.n();
    const Eigen::MatrixXd Qw = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd Rv = Eigen::MatrixXd::Identity(14, 14);
    CHECK_THROWS_WITH_AS(design_gain(std::move(obs), Qw, Rv),
                         doctest::Contains("not detectable"), NumericError);
}

TEST_CASE("reduced mode basis restores detectability on the reference model") {
    const ProjectConfig cfg = reference_config();
    const BuiltModel built = build_from_config(cfg);
    const CutModel cut = cut_model(built.model, built.mesh);
    const Eigen::MatrixXd phi = q_mode_basis(cut); // min(14 sensors, 39 flows) modes
    CHECK(phi.rows() == 39);
    CHECK(phi.cols() == 14);
    // partition of unity over the axial flows
    for (int i = 0; i < cut.n_axial; ++i)
        CHECK(phi.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    AugmentedObserver obs = augment_and_discretize(cut, 10.0, phi);
    const int n = obs.n();
    Eigen::MatrixXd Qw = 1e-8 * Eigen::MatrixXd::Identity(n, n);
    Qw.bottomRightCorner(14, 14).setIdentity();
    const Eigen::MatrixXd Rv = 0.0625 * Eigen::MatrixXd::Identity(14, 14);
    obs = design_gain(std::move(obs), Qw, Rv);
    CHECK(observer_error_spectral_radius(obs) < 1.0);
}

TEST_CASE("stationary estimate is unbiased for in-basis constant disturbances") {
    const Toy t = make_toy();
    Eigen::VectorXd w(4);
    w << 120.0, -40.0, 0.0, 60.0;
    Eigen::VectorXd u(3);
    u << 430.0, 410.0, 293.15;
    const Eigen::VectorXd x_true =
        -t.cut.A11.lu().solve(t.cut.Bq * t.obs.q_expand * w + t.cut.Bc * u);
    const Eigen::VectorXd y = t.cut.C1 * x_true;

    // fixed point of the filter recursion under constant (u, y)
    const int n = t.obs.n();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd IKC = I - t.obs.K * t.obs.Cbar;
    const Eigen::VectorXd rhs = IKC * t.obs.Bbar * u + t.obs.K * y;
    const Eigen::VectorXd xhat = (I - IKC * t.obs.Abar).lu().solve(rhs);
    const Eigen::VectorXd q_hat = t.obs.expand_q(xhat);
    const Eigen::VectorXd q_true = t.obs.q_expand * w;
    CHECK((q_hat - q_true).cwiseAbs().maxCoeff() < 1e-6 * q_true.cwiseAbs().maxCoeff());
}

TEST_CASE("estimate() converges to a constant disturbance and is linear") {
    const Toy t = make_toy();
    Eigen::VectorXd w(4);
    w << 80.0, -30.0, 20.0, 0.0;
    Eigen::VectorXd u(3);
    u << 420.0, 440.0, 293.15;
    const int steps = 4000;
    const TimeSeries rec = twin_record(t, w, u, steps);
    const TimeSeries est = estimate(t.obs, rec, {false});
    const Eigen::VectorXd q_true = t.obs.q_expand * w;
    const double peak = q_true.cwiseAbs().maxCoeff();
    for (int i = 0; i < t.obs.n_q_full(); ++i) {
        const double qi = est.channel("qhat." + t.obs.q_labels[i]).back();
        CHECK(std::abs(qi - q_true[i]) < 0.02 * peak);
    }

    // linearity of the whole pipeline (equilibrium init included)
    Eigen::VectorXd w2(4), u2(3);
    w2 << -10.0, 50.0, 5.0, -25.0;
    u2 << 10.0, -20.0, 5.0;
    const TimeSeries rec2 = twin_record(t, w2, u2, 50);
    TimeSeries sum = rec2;
    const TimeSeries rec1 = twin_record(t, w, u, 50);
    for (size_t c = 0; c < sum.columns.size(); ++c)
        for (size_t k = 0; k < sum.size(); ++k) sum.columns[c][k] += rec1.columns[c][k];
    const TimeSeries e1 = estimate(t.obs, rec1, {false});
    const TimeSeries e2 = estimate(t.obs, rec2, {false});
    const TimeSeries es = estimate(t.obs, sum, {false});
    for (size_t c = 0; c < es.columns.size(); ++c)
        for (size_t k = 0; k < es.size(); ++k)
            CHECK(es.columns[c][k] ==
                  doctest::Approx(e1.columns[c][k] + e2.columns[c][k]).epsilon(1e-9));
}

TEST_CASE("estimate() validates channels and skips non-finite samples") {
    const Toy t = make_toy();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(4);
    Eigen::VectorXd u(3);
    u << 400.0, 400.0, 293.15;
    TimeSeries rec = twin_record(t, w, u, 20);
    rec.columns[rec.channel_index(t.obs.output_labels[0])][5] = std::nan("");
    const TimeSeries est = estimate(t.obs, rec, {false});
    for (const auto& col : est.columns)
        for (double v : col) CHECK(std::isfinite(v));

    TimeSeries missing = rec;
    missing.names[0] = "renamed";
    CHECK_THROWS_AS(estimate(t.obs, missing, {false}), ConfigError);
}
