#pragma once

#include <Eigen/Dense>

#include "extherm/fvnet.hpp"
#include "extherm/timeseries.hpp"

namespace extherm {

/// Cylinder-zone model obtained by severing the full model along Gamma3.
/// A11 is the cylinder block with the cut couplings removed (adiabatic cut),
/// so A11 xc + Bq q + Bc u reproduces the full dynamics when q carries the
/// true interface flows [W].
struct CutModel {
    Eigen::MatrixXd A11; // n_c x n_c
    Eigen::MatrixXd Bq;  // n_c x (n_axial + m_bar)
    Eigen::MatrixXd Bc;  // n_c x m
    Eigen::MatrixXd C1;  // sensors x n_c
    std::vector<std::string> q_labels;
    std::vector<std::string> input_labels;
    std::vector<std::string> output_labels;
    std::vector<int> cut_states; // global state indices of the cylinder zone
    int n_axial = 0, m_bar = 0;

    int n_c() const { return static_cast<int>(A11.rows()); }
    int n_q() const { return static_cast<int>(Bq.cols()); }
};

/// m_bar < 0 selects the default: one radial entry per axial-end cylinder
/// cell (inner to outer rings at x = 0, then at x = L).
CutModel cut_model(const LtiModel& full, const FvMesh& mesh, int m_bar = -1);

/// Disturbance mode basis Phi (n_q x n_modes): q = Phi w. With p sensors the
/// integrator-augmented pair is detectable only when the number of estimated
/// disturbance modes is at most p, so the axial flows are parameterized by
/// piecewise-linear hat modes over the axial index (partition of unity); the
/// radial end entries keep one mode each. n_modes < 0 selects
/// min(p, n_q); n_modes >= n_q returns the identity (one mode per flow).
Eigen::MatrixXd q_mode_basis(const CutModel& cut, int n_modes = -1);

/// Discrete cut model augmented with constant heat-flow disturbance states
/// (one per mode of the chosen basis; q = q_expand * w).
struct AugmentedObserver {
    Eigen::MatrixXd Abar; // [[Ad, Bqd Phi],[0, I]]
    Eigen::MatrixXd Bbar;
    Eigen::MatrixXd Cbar; // [C1 0]
    Eigen::MatrixXd K;    // steady-state filter gain (empty until designed)
    Eigen::MatrixXd Qw, Rv;
    Eigen::MatrixXd q_expand; // n_q_full x n_q, maps mode amplitudes to flows
    double dt = 0.0;
    int n_xc = 0, n_q = 0; // n_q counts disturbance modes
    std::vector<std::string> q_labels; // full per-flow labels (q_expand rows)
    std::vector<std::string> input_labels, output_labels;
    Eigen::MatrixXd A11_cont, Bc_cont; // kept for equilibrium initialization

    int n() const { return n_xc + n_q; }
    int n_q_full() const { return static_cast<int>(q_expand.rows()); }
    Eigen::VectorXd expand_q(const Eigen::VectorXd& xhat) const {
        return q_expand * xhat.tail(n_q);
    }
};

/// An empty basis means the identity (one integrator per cut flow).
AugmentedObserver augment_and_discretize(const CutModel& cut, double dt,
                                         const Eigen::MatrixXd& basis = Eigen::MatrixXd());

/// Fixed-point DARE iteration: P <- A P A' - A P C'(C P C'+R)^{-1} C P A' + Q.
Eigen::MatrixXd solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                           double rel_tol = 1e-10, int max_iter = 500000);

/// Steady-state Kalman gain for the filter form
/// xhat_k|k = xhat_k|k-1 + K (y_k - C xhat_k|k-1). Checks detectability and
/// the error-dynamics spectral radius; throws NumericError on failure.
AugmentedObserver design_gain(AugmentedObserver obs, const Eigen::MatrixXd& Qw,
                              const Eigen::MatrixXd& Rv);

/// Spectral radius of the designed error dynamics (I - K Cbar) Abar.
double observer_error_spectral_radius(const AugmentedObserver& obs);

struct EstimateOptions {
    bool record_states = true; // include xhat channels, not just qhat
};

/// Runs the recursion over u_o, which must contain every input channel and
/// every sensor channel at the observer dt. Initial xhat from the cut-model
/// equilibrium at the first inputs, initial qhat = 0. Non-finite measurements
/// get a time-update-only step.
TimeSeries estimate(const AugmentedObserver& obs, const TimeSeries& u_o,
                    const EstimateOptions& opts = {});

} // namespace extherm
