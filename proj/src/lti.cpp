#include "extherm/lti.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "extherm/errors.hpp"

namespace extherm {

void zoh_pair(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double dt,
              Eigen::MatrixXd& Ad, Eigen::MatrixXd& Bd) {
    const int n = static_cast<int>(A.rows());
    const int m = static_cast<int>(B.cols());
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = A * dt;
    aug.topRightCorner(n, m) = B * dt;
    const Eigen::MatrixXd e = aug.exp();
    Ad = e.topLeftCorner(n, n);
    Bd = e.topRightCorner(n, m);
}

DiscreteLti discretize(const LtiModel& model, double dt, DiscretizeMethod method) {
    if (!(dt > 0.0)) throw NumericError("discretize: dt must be positive");
    DiscreteLti d;
    d.dt = dt;
    d.method = method;
    d.Cd = model.C;
    d.Dd = model.D;
    d.input_labels = model.input_labels;
    d.output_labels = model.output_labels;
    const int n = model.n();
    if (method == DiscretizeMethod::Zoh) {
        zoh_pair(model.A, model.B, dt, d.Ad, d.Bd);
    } else {
        const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) - dt * model.A;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
        d.Ad = lu.solve(Eigen::MatrixXd::Identity(n, n));
        d.Bd = lu.solve(dt * model.B);
    }
    if (!d.Ad.allFinite() || !d.Bd.allFinite())
        throw NumericError("discretize: non-finite result");
    return d;
}

Eigen::VectorXd equilibrium(const LtiModel& model, const Eigen::VectorXd& u_const) {
    if (u_const.size() != model.m())
        throw ConfigError("equilibrium: input dimension mismatch");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(model.A);
    if (!lu.isInvertible())
        throw NumericError("equilibrium: A is singular (fully adiabatic model?)");
    return lu.solve(-model.B * u_const);
}

TimeSeries simulate(const DiscreteLti& model, const Eigen::VectorXd& x0,
                    const TimeSeries& u, const SimOptions& opts) {
    u.validate();
    if (x0.size() != model.n())
        throw ConfigError("simulate: x0 dimension mismatch");
    if (!is_uniform(u, model.dt))
        throw ConfigError("simulate: input not sampled at the model dt");

    const int m = static_cast<int>(model.input_labels.size());
    std::vector<int> cols(m);
    for (int c = 0; c < m; ++c) {
        cols[c] = u.channel_index(model.input_labels[c]);
        if (cols[c] < 0)
            throw ConfigError("simulate: missing input channel '" + model.input_labels[c] + "'");
    }

    const int p = static_cast<int>(model.output_labels.size());
    TimeSeries out;
    out.time = u.time;
    for (const auto& name : model.output_labels) out.add_channel(name);
    std::vector<std::vector<double>*> state_cols;
    if (opts.record_states) {
        for (int i = 0; i < model.n(); ++i)
            state_cols.push_back(&out.add_channel("x[" + std::to_string(i) + "]"));
    }

    Eigen::VectorXd x = x0;
    Eigen::VectorXd uk(m);
    for (size_t k = 0; k < u.size(); ++k) {
        for (int c = 0; c < m; ++c) uk[c] = u.columns[cols[c]][k];
        const Eigen::VectorXd y = model.Cd * x + model.Dd * uk;
        for (int r = 0; r < p; ++r) out.columns[r][k] = y[r];
        if (opts.record_states)
            for (int i = 0; i < model.n(); ++i) (*state_cols[i])[k] = x[i];
        if (k + 1 < u.size()) x = model.Ad * x + model.Bd * uk;
    }
    return out;
}

double max_real_eigenvalue(const Eigen::MatrixXd& A) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    return es.eigenvalues().real().maxCoeff();
}

double spectral_radius(const Eigen::MatrixXd& M) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_metzler(const Eigen::MatrixXd& A, double tol) {
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j)
            if (i != j && A(i, j) < -tol) return false;
    return true;
}

} // namespace extherm
