#pragma once

#include <Eigen/Dense>

#include "extherm/fvnet.hpp"
#include "extherm/timeseries.hpp"

namespace extherm {

enum class DiscretizeMethod { Zoh, BackwardEuler };

struct DiscreteLti {
    Eigen::MatrixXd Ad, Bd, Cd, Dd;
    double dt = 0.0;
    DiscretizeMethod method = DiscretizeMethod::Zoh;
    std::vector<std::string> input_labels, output_labels;

    int n() const { return static_cast<int>(Ad.rows()); }
};

/// ZOH pair via the augmented matrix exponential (robust for singular A).
void zoh_pair(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double dt,
              Eigen::MatrixXd& Ad, Eigen::MatrixXd& Bd);

DiscreteLti discretize(const LtiModel& model, double dt, DiscretizeMethod method);

/// x* = -A^{-1} B u; throws NumericError when A is singular.
Eigen::VectorXd equilibrium(const LtiModel& model, const Eigen::VectorXd& u_const);

struct SimOptions {
    bool record_states = false; // append x[i] channels to the output
};

/// Steps x_{k+1} = Ad x_k + Bd u_k with y_k = Cd x_k + Dd u_k. Inputs must be
/// sampled at the model dt (resample beforehand otherwise).
TimeSeries simulate(const DiscreteLti& model, const Eigen::VectorXd& x0,
                    const TimeSeries& u, const SimOptions& opts = {});

/// Largest real part of the eigenvalues of A (stability margin).
double max_real_eigenvalue(const Eigen::MatrixXd& A);

/// Spectral radius of a (possibly nonsymmetric) matrix.
double spectral_radius(const Eigen::MatrixXd& M);

bool is_metzler(const Eigen::MatrixXd& A, double tol = 0.0);

} // namespace extherm
