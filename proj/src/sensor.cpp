#include "extherm/sensor.hpp"

#include <algorithm>
#include <cmath>

#include "extherm/errors.hpp"
#include "extherm/lti.hpp"

namespace extherm {

CutModel cut_model(const LtiModel& full, const FvMesh& mesh, int m_bar) {
    if (full.cylinder_states.empty() || full.gamma3_links.empty())
        throw ConfigError("sensor: model is not zone-partitioned with a Gamma3 cut");

    const auto& cut = full.cylinder_states;
    const int n_c = static_cast<int>(cut.size());
    std::vector<int> local(full.n(), -1);
    for (int i = 0; i < n_c; ++i) local[cut[i]] = i;

    CutModel cm;
    cm.cut_states = cut;
    cm.input_labels = full.input_labels;
    cm.A11.resize(n_c, n_c);
    for (int i = 0; i < n_c; ++i)
        for (int j = 0; j < n_c; ++j) cm.A11(i, j) = full.A(cut[i], cut[j]);
    cm.Bc.resize(n_c, full.m());
    for (int i = 0; i < n_c; ++i) cm.Bc.row(i) = full.B.row(cut[i]);

    // Remove the cut couplings from the diagonal (adiabatic Gamma3).
    for (const auto& link : full.gamma3_links) {
        if (link.cylinder_cell < 0) continue;
        const int i = local[link.cylinder_cell];
        cm.A11(i, i) += link.conductance / full.capacitance[link.cylinder_cell];
    }

    // Axial cut flows: one per Gamma3 radial facet, gain 1/C into the
    // innermost cylinder ring cell of that axial element.
    cm.n_axial = static_cast<int>(full.gamma3_links.size());

    // Radial entries at the axial end faces of the cylinder zone.
    std::vector<int> end_cells;
    {
        std::vector<std::pair<double, int>> left, right; // (r, local index), sorted inner->outer
        for (int i = 0; i < n_c; ++i) {
            const auto& c = mesh.cells[cut[i]];
            const int ix = c.index % mesh.n_a;
            if (ix == 0) left.emplace_back(c.r_center, i);
            if (ix == mesh.n_a - 1) right.emplace_back(c.r_center, i);
        }
        std::sort(left.begin(), left.end());
        std::sort(right.begin(), right.end());
        for (const auto& [r, i] : left) end_cells.push_back(i);
        for (const auto& [r, i] : right) end_cells.push_back(i);
    }
    if (m_bar < 0) m_bar = static_cast<int>(end_cells.size());
    if (m_bar > static_cast<int>(end_cells.size()))
        throw ConfigError("sensor: m_bar exceeds the number of axial-end cylinder cells");
    cm.m_bar = m_bar;

    cm.Bq = Eigen::MatrixXd::Zero(n_c, cm.n_axial + cm.m_bar);
    for (int k = 0; k < cm.n_axial; ++k) {
        const auto& link = full.gamma3_links[k];
        if (link.cylinder_cell < 0)
            throw ConfigError("sensor: Gamma3 link missing for axial element " + std::to_string(k));
        cm.Bq(local[link.cylinder_cell], k) = 1.0 / full.capacitance[link.cylinder_cell];
        cm.q_labels.push_back("q_a[" + std::to_string(k) + "]");
    }
    for (int k = 0; k < cm.m_bar; ++k) {
        const int i = end_cells[k];
        cm.Bq(i, cm.n_axial + k) = 1.0 / full.capacitance[cut[i]];
        cm.q_labels.push_back("q_r[" + std::to_string(k) + "]");
    }

    // Sensor rows restricted to the cylinder zone.
    const int p = full.num_sensor_outputs;
    cm.C1 = Eigen::MatrixXd::Zero(p, n_c);
    for (int r = 0; r < p; ++r) {
        for (int j = 0; j < full.n(); ++j) {
            const double v = full.C(r, j);
            if (v == 0.0) continue;
            if (local[j] < 0)
                throw ConfigError("sensor: sensor '" + full.output_labels[r] +
                                  "' is not in the cylinder zone");
            cm.C1(r, local[j]) = v;
        }
        cm.output_labels.push_back(full.output_labels[r]);
    }
    return cm;
}

Eigen::MatrixXd q_mode_basis(const CutModel& cut, int n_modes) {
    const int nq = cut.n_q();
    const int p = static_cast<int>(cut.C1.rows());
    if (n_modes < 0) n_modes = std::min(p, nq);
    if (n_modes >= nq) return Eigen::MatrixXd::Identity(nq, nq);
    const int n_ax_modes = n_modes - cut.m_bar;
    if (n_ax_modes < 2)
        throw ConfigError("sensor: need at least m_bar + 2 disturbance modes, got " +
                          std::to_string(n_modes));
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(nq, n_modes);
    // hat functions over the axial index, nodes at the ends included
    for (int i = 0; i < cut.n_axial; ++i) {
        const double s = cut.n_axial == 1
                             ? 0.0
                             : static_cast<double>(i) * (n_ax_modes - 1) / (cut.n_axial - 1);
        const int j0 = std::min(static_cast<int>(s), n_ax_modes - 2);
        const double w = s - j0;
        phi(i, j0) = 1.0 - w;
        phi(i, j0 + 1) = w;
    }
    for (int k = 0; k < cut.m_bar; ++k) phi(cut.n_axial + k, n_ax_modes + k) = 1.0;
    return phi;
}

AugmentedObserver augment_and_discretize(const CutModel& cut, double dt,
                                         const Eigen::MatrixXd& basis) {
    if (!(dt > 0.0)) throw NumericError("sensor: dt must be positive");
    const int n_c = cut.n_c();
    const Eigen::MatrixXd phi =
        basis.size() == 0 ? Eigen::MatrixXd::Identity(cut.n_q(), cut.n_q()) : basis;
    if (phi.rows() != cut.n_q())
        throw ConfigError("sensor: disturbance basis has wrong row count");
    const int n_q = static_cast<int>(phi.cols());
    const int m = static_cast<int>(cut.Bc.cols());

    // ZOH on the augmented (x_c, w) system; the w block stays exactly I.
    Eigen::MatrixXd Aaug = Eigen::MatrixXd::Zero(n_c + n_q, n_c + n_q);
    Aaug.topLeftCorner(n_c, n_c) = cut.A11;
    Aaug.topRightCorner(n_c, n_q) = cut.Bq * phi;
    Eigen::MatrixXd Baug = Eigen::MatrixXd::Zero(n_c + n_q, m);
    Baug.topRows(n_c) = cut.Bc;

    AugmentedObserver obs;
    zoh_pair(Aaug, Baug, dt, obs.Abar, obs.Bbar);
    obs.Abar.bottomLeftCorner(n_q, n_c).setZero();
    obs.Abar.bottomRightCorner(n_q, n_q).setIdentity();
    obs.Cbar = Eigen::MatrixXd::Zero(cut.C1.rows(), n_c + n_q);
    obs.Cbar.leftCols(n_c) = cut.C1;
    obs.dt = dt;
    obs.n_xc = n_c;
    obs.n_q = n_q;
    obs.q_expand = phi;
    obs.q_labels = cut.q_labels;
    obs.input_labels = cut.input_labels;
    obs.output_labels = cut.output_labels;
    obs.A11_cont = cut.A11;
    obs.Bc_cont = cut.Bc;
    return obs;
}

Eigen::MatrixXd solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                           double rel_tol, int max_iter) {
    // Structure-preserving doubling on the dual (control-form) equation with
    // system matrix A', input matrix C'. H_k converges quadratically to P;
    // each doubling squares the closed-loop poles, which for slow thermal
    // plants sit very close to the unit circle.
    const int n = static_cast<int>(A.rows());
    Eigen::MatrixXd Ak = A.transpose();
    Eigen::MatrixXd Gk = C.transpose() * R.llt().solve(C);
    Eigen::MatrixXd Hk = Q;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(I + Gk * Hk);
        const Eigen::MatrixXd W = lu.solve(Ak);      // (I + G H)^{-1} A
        const Eigen::MatrixXd V = lu.solve(Gk);      // (I + G H)^{-1} G
        Eigen::MatrixXd Hn = Hk + Ak.transpose() * Hk * W;
        Hn = 0.5 * (Hn + Hn.transpose());
        Gk += Ak * V * Ak.transpose();
        Gk = 0.5 * (Gk + Gk.transpose());
        Ak = Ak * W;
        const double delta = (Hn - Hk).cwiseAbs().maxCoeff();
        const double scale = std::max(1e-300, Hn.cwiseAbs().maxCoeff());
        Hk = Hn;
        if (delta <= rel_tol * scale) return Hk;
        if (!Hk.allFinite()) break;
    }
    throw NumericError("sensor: DARE iteration did not converge");
}

namespace {

// PBH rank test at the marginal/unstable eigenvalues of Abar; reports the
// q components with the largest weight in any undetectable direction.
void check_detectability(const AugmentedObserver& obs) {
    const int n = obs.n();
    Eigen::EigenSolver<Eigen::MatrixXd> es(obs.Abar, true);
    std::vector<int> bad_q;
    for (int k = 0; k < n; ++k) {
        const std::complex<double> lam = es.eigenvalues()[k];
        if (std::abs(lam) < 1.0 - 1e-9) continue;
        Eigen::MatrixXcd pbh(n + obs.Cbar.rows(), n);
        pbh.topRows(n) = obs.Abar.cast<std::complex<double>>() -
                         lam * Eigen::MatrixXcd::Identity(n, n);
        pbh.bottomRows(obs.Cbar.rows()) = obs.Cbar.cast<std::complex<double>>();
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
        const auto& sv = svd.singularValues();
        if (sv[sv.size() - 1] < 1e-10 * sv[0]) {
            // Identify the dominant q entry of the undetectable eigenvector.
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd_v(pbh, Eigen::ComputeThinV);
            const Eigen::VectorXcd v = svd_v.matrixV().col(n - 1);
            const Eigen::VectorXcd qfull =
                obs.q_expand.cast<std::complex<double>>() * v.tail(obs.n_q);
            int worst = -1;
            double worst_mag = 0.0;
            for (int i = 0; i < qfull.size(); ++i)
                if (std::abs(qfull[i]) > worst_mag) {
                    worst_mag = std::abs(qfull[i]);
                    worst = static_cast<int>(i);
                }
            if (worst >= 0) bad_q.push_back(worst);
        }
    }
    if (!bad_q.empty()) {
        std::sort(bad_q.begin(), bad_q.end());
        bad_q.erase(std::unique(bad_q.begin(), bad_q.end()), bad_q.end());
        std::string msg = "sensor: (Abar, Cbar) not detectable; unobservable q components:";
        for (int q : bad_q) msg += " " + obs.q_labels[q];
        throw NumericError(msg);
    }
}

} // namespace

AugmentedObserver design_gain(AugmentedObserver obs, const Eigen::MatrixXd& Qw,
                              const Eigen::MatrixXd& Rv) {
    if (Qw.rows() != obs.n() || Rv.rows() != obs.Cbar.rows())
        throw ConfigError("sensor: covariance dimension mismatch");
    check_detectability(obs);
    const Eigen::MatrixXd P = solve_dare(obs.Abar, obs.Cbar, Qw, Rv);
    const Eigen::MatrixXd S = obs.Cbar * P * obs.Cbar.transpose() + Rv;
    obs.K = S.llt().solve(obs.Cbar * P.transpose()).transpose(); // P C' S^{-1}
    obs.Qw = Qw;
    obs.Rv = Rv;
    const double rho = observer_error_spectral_radius(obs);
    if (!(rho < 1.0))
        throw NumericError("sensor: designed error dynamics not stable (rho = " +
                           std::to_string(rho) + ")");
    return obs;
}

double observer_error_spectral_radius(const AugmentedObserver& obs) {
    if (obs.K.size() == 0) throw NumericError("sensor: gain not designed");
    const Eigen::MatrixXd M =
        (Eigen::MatrixXd::Identity(obs.n(), obs.n()) - obs.K * obs.Cbar) * obs.Abar;
    return spectral_radius(M);
}

TimeSeries estimate(const AugmentedObserver& obs, const TimeSeries& u_o,
                    const EstimateOptions& opts) {
    if (obs.K.size() == 0) throw NumericError("sensor: gain not designed");
    u_o.validate();
    const int m = static_cast<int>(obs.input_labels.size());
    const int p = static_cast<int>(obs.output_labels.size());
    std::vector<int> ucols(m), ycols(p);
    for (int c = 0; c < m; ++c) {
        ucols[c] = u_o.channel_index(obs.input_labels[c]);
        if (ucols[c] < 0)
            throw ConfigError("sensor: missing input channel '" + obs.input_labels[c] + "'");
    }
    for (int r = 0; r < p; ++r) {
        ycols[r] = u_o.channel_index(obs.output_labels[r]);
        if (ycols[r] < 0)
            throw ConfigError("sensor: missing sensor channel '" + obs.output_labels[r] + "'");
    }

    TimeSeries out;
    out.time = u_o.time;
    for (const auto& q : obs.q_labels) out.add_channel("qhat." + q);
    if (opts.record_states)
        for (int i = 0; i < obs.n_xc; ++i) out.add_channel("xhat[" + std::to_string(i) + "]");

    // x_c from equilibrium at the first inputs, qhat = 0.
    Eigen::VectorXd u0(m);
    for (int c = 0; c < m; ++c) u0[c] = u_o.columns[ucols[c]][0];
    Eigen::VectorXd xhat = Eigen::VectorXd::Zero(obs.n());
    {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(obs.A11_cont);
        xhat.head(obs.n_xc) = lu.solve(-obs.Bc_cont * u0);
    }

    Eigen::VectorXd uk(m), yk(p);
    for (size_t k = 0; k < u_o.size(); ++k) {
        for (int c = 0; c < m; ++c) uk[c] = u_o.columns[ucols[c]][k];
        bool y_ok = true;
        for (int r = 0; r < p; ++r) {
            yk[r] = u_o.columns[ycols[r]][k];
            if (!std::isfinite(yk[r])) y_ok = false;
        }
        if (y_ok) {
            const Eigen::VectorXd innov = yk - obs.Cbar * xhat;
            xhat += obs.K * innov;
        } // else: time update only (sample skipped)
        const Eigen::VectorXd qfull = obs.expand_q(xhat);
        for (int q = 0; q < obs.n_q_full(); ++q) out.columns[q][k] = qfull[q];
        if (opts.record_states)
            for (int i = 0; i < obs.n_xc; ++i) out.columns[obs.n_q_full() + i][k] = xhat[i];
        if (k + 1 < u_o.size()) xhat = obs.Abar * xhat + obs.Bbar * uk;
    }
    return out;
}

} // namespace extherm
