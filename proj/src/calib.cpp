#include "extherm/calib.hpp"

#include <cmath>
#include <future>

#include "extherm/errors.hpp"
#include "extherm/lti.hpp"

namespace extherm {

void FitProblem::validate() const {
    if (params.empty()) throw ConfigError("fit: no parameters");
    for (const auto& ps : params) {
        if (!(ps.lower > 0.0 && ps.lower <= ps.init && ps.init <= ps.upper))
            throw ConfigError("fit: parameter '" + ps.name +
                              "' violates 0 < lower <= init <= upper");
    }
    if (!(dt > 0.0)) throw ConfigError("fit: dt must be positive");
    measurement.validate();
    input.validate();
    if (measurement.time != input.time)
        throw DataError("fit: measurement and input time axes differ");
    if (!channel_weights.empty() && channel_weights.size() != measurement.names.size())
        throw ConfigError("fit: channel weight count mismatch");
}

Eigen::VectorXd residual(const Eigen::VectorXd& p, const FitProblem& prob) {
    const size_t n_samp = prob.measurement.size();
    const size_t n_chan = prob.measurement.names.size();
    Eigen::VectorXd r(static_cast<Eigen::Index>(n_samp * n_chan));
    try {
        const LtiModel model = prob.build(p);
        Eigen::VectorXd x0;
        if (prob.init_rule == FitProblem::InitRule::EquilibriumFromMeasured) {
            Eigen::VectorXd u0(model.m());
            for (int c = 0; c < model.m(); ++c)
                u0[c] = prob.input.channel(model.input_labels[c]).front();
            x0 = equilibrium(model, u0);
        } else {
            x0 = prob.x0_explicit;
        }
        const DiscreteLti d = discretize(model, prob.dt, DiscretizeMethod::Zoh);
        const TimeSeries y = simulate(d, x0, prob.input);
        Eigen::Index k = 0;
        for (size_t c = 0; c < n_chan; ++c) {
            const auto& meas = prob.measurement.columns[c];
            const auto& sim = y.channel(prob.measurement.names[c]);
            const double w = prob.channel_weights.empty() ? 1.0 : prob.channel_weights[c];
            for (size_t s = 0; s < n_samp; ++s) r[k++] = w * (meas[s] - sim[s]);
        }
    } catch (const std::exception&) {
        r.setConstant(1e6); // large-penalty residual for pathological p
    }
    return r;
}

namespace {

Eigen::MatrixXd fd_jacobian(const Eigen::VectorXd& theta, const Eigen::VectorXd& r0,
                            const FitProblem& prob, const FitOptions& opt,
                            const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    const int np = static_cast<int>(theta.size());
    Eigen::MatrixXd J(r0.size(), np);
    auto column = [&](int j) {
        Eigen::VectorXd th = theta;
        double h = opt.fd_rel_step;
        if (th[j] + h > hi[j]) h = -h; // stay inside the box
        th[j] += h;
        const Eigen::VectorXd rj = residual(th.array().exp(), prob);
        return Eigen::VectorXd(((rj - r0) / h).eval());
    };
    if (opt.parallel_jacobian) {
        std::vector<std::future<Eigen::VectorXd>> futs;
        futs.reserve(np);
        for (int j = 0; j < np; ++j)
            futs.push_back(std::async(std::launch::async, column, j));
        for (int j = 0; j < np; ++j) J.col(j) = futs[j].get();
    } else {
        for (int j = 0; j < np; ++j) J.col(j) = column(j);
    }
    (void)lo;
    return J;
}

} // namespace

FitResult fit(const FitProblem& prob, const FitOptions& opt) {
    prob.validate();
    const int np = static_cast<int>(prob.params.size());
    Eigen::VectorXd theta(np), lo(np), hi(np);
    for (int j = 0; j < np; ++j) {
        theta[j] = std::log(prob.params[j].init);
        lo[j] = std::log(prob.params[j].lower);
        hi[j] = std::log(prob.params[j].upper);
    }
    auto project = [&](Eigen::VectorXd th) {
        for (int j = 0; j < np; ++j) th[j] = std::clamp(th[j], lo[j], hi[j]);
        return th;
    };

    Eigen::VectorXd r = residual(theta.array().exp(), prob);
    double cost = r.squaredNorm();
    double mu = 1e-3;
    std::string reason = "max_iterations";
    int it = 0;
    Eigen::MatrixXd J;
    for (; it < opt.max_iterations; ++it) {
        J = fd_jacobian(theta, r, prob, opt, lo, hi);
        const Eigen::VectorXd g = J.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() < opt.gradient_tol * std::max(1.0, cost)) {
            reason = "gradient";
            break;
        }
        const Eigen::MatrixXd JtJ = J.transpose() * J;
        bool accepted = false;
        for (int trial = 0; trial < 25; ++trial) {
            Eigen::MatrixXd H = JtJ;
            for (int j = 0; j < np; ++j)
                H(j, j) += mu * std::max(JtJ(j, j), 1e-12);
            const Eigen::VectorXd step = H.ldlt().solve(-g);
            const Eigen::VectorXd theta_try = project(theta + step);
            const Eigen::VectorXd r_try = residual(theta_try.array().exp(), prob);
            const double cost_try = r_try.squaredNorm();
            if (cost_try < cost) {
                if ((theta_try - theta).lpNorm<Eigen::Infinity>() < opt.step_tol) {
                    theta = theta_try;
                    r = r_try;
                    cost = cost_try;
                    reason = "step";
                    accepted = true;
                    break;
                }
                theta = theta_try;
                r = r_try;
                cost = cost_try;
                mu = std::max(mu / 3.0, 1e-12);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if (!accepted) {
            reason = "stalled";
            break;
        }
        if (reason == "step") break;
    }

    FitResult res;
    res.p_hat = theta.array().exp();
    res.residual_norm = cost;
    res.iterations = it;
    res.convergence_reason = reason;

    // Identifiability + confidence proxy from the final Jacobian.
    if (J.size() == 0) J = fd_jacobian(theta, r, prob, opt, lo, hi);
    Eigen::VectorXd colnorm(np);
    for (int j = 0; j < np; ++j) colnorm[j] = J.col(j).norm();
    const double cmax = colnorm.maxCoeff();
    res.identifiable.resize(np);
    for (int j = 0; j < np; ++j) res.identifiable[j] = colnorm[j] >= 1e-8 * cmax;
    const Eigen::Index dof =
        std::max<Eigen::Index>(1, r.size() - np);
    const double sigma2 = cost / static_cast<double>(dof);
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::MatrixXd cov =
        sigma2 * (JtJ + 1e-30 * Eigen::MatrixXd::Identity(np, np))
                     .ldlt()
                     .solve(Eigen::MatrixXd::Identity(np, np));
    res.confidence.resize(np);
    for (int j = 0; j < np; ++j) {
        // theta is log p, so the proxy is relative: sigma_p ~ p * sigma_theta
        res.confidence[j] = res.p_hat[j] * std::sqrt(std::max(0.0, cov(j, j)));
    }
    return res;
}

} // namespace extherm
