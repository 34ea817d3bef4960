#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "extherm/fvnet.hpp"
#include "extherm/timeseries.hpp"

namespace extherm {

struct ParamSpec {
    std::string name;
    double lower = 0.0;
    double upper = 0.0;
    double init = 0.0;
};

/// Nonlinear least-squares problem fitting the physical parameter vector p
/// against measured sensor trajectories. `build` rebuilds the model for a
/// candidate p (ordered as `params`).
struct FitProblem {
    std::vector<ParamSpec> params;
    std::function<LtiModel(const Eigen::VectorXd&)> build;
    TimeSeries measurement; // sensor channels, uniform at dt
    TimeSeries input;       // input channels, same time axis
    double dt = 0.0;
    enum class InitRule { EquilibriumFromMeasured, Explicit };
    InitRule init_rule = InitRule::EquilibriumFromMeasured;
    Eigen::VectorXd x0_explicit;
    std::vector<double> channel_weights; // optional, per sensor channel

    void validate() const;
};

/// Stacked (y_meas - y) over all sensor channels and samples, channel-major.
/// Pathological p (assembly/simulation failure) yields a large-penalty
/// residual instead of throwing.
Eigen::VectorXd residual(const Eigen::VectorXd& p, const FitProblem& problem);

struct FitOptions {
    int max_iterations = 200;
    double fd_rel_step = 1e-6;
    double gradient_tol = 1e-9;
    double step_tol = 1e-12;
    bool parallel_jacobian = true;
};

struct FitResult {
    Eigen::VectorXd p_hat;
    double residual_norm = 0.0; // ||y_meas - y||_2^2 at p_hat
    int iterations = 0;
    std::string convergence_reason;
    Eigen::VectorXd confidence;     // Jacobian-based 1-sigma proxy per parameter
    std::vector<bool> identifiable; // Jacobian column norm >= 1e-8 of the largest
};

/// Bound-constrained Levenberg-Marquardt in log-parameter space (positivity
/// by construction). Accepted steps never increase the objective.
FitResult fit(const FitProblem& problem, const FitOptions& options = {});

} // namespace extherm
