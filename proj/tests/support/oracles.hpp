#pragma once

// Reference implementations used only to check the library against
// independent algorithms. Deliberately simple and slow.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracle {

/// l1-ball projection by bisection on the shrinkage threshold (no sorting).
inline Eigen::VectorXd project_l1_bisect(const Eigen::VectorXd& v, double tau) {
    if (tau <= 0.0) return Eigen::VectorXd::Zero(v.size());
    const Eigen::VectorXd a = v.cwiseAbs();
    if (a.sum() <= tau) return v;
    double lo = 0.0, hi = a.maxCoeff();
    for (int it = 0; it < 200; ++it) {
        const double theta = 0.5 * (lo + hi);
        const double mass = (a.array() - theta).max(0.0).sum();
        (mass > tau ? lo : hi) = theta;
    }
    const double theta = 0.5 * (lo + hi);
    return v.array().sign() * (a.array() - theta).max(0.0);
}

/// Cyclic coordinate descent for 0.5|Ax-b|^2 + mu|x|_1. Columns may have
/// any norm. Runs until the duality-free stationarity test passes.
inline Eigen::VectorXd cd_lasso(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double mu,
                                int max_sweeps = 20000, double tol = 1e-12) {
    const Eigen::Index n = A.cols();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = b;  // b - A x
    Eigen::VectorXd col_sq(n);
    for (Eigen::Index j = 0; j < n; ++j) col_sq[j] = A.col(j).squaredNorm();

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_move = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (col_sq[j] == 0.0) continue;
            const double old = x[j];
            const double rho = A.col(j).dot(r) + col_sq[j] * old;
            const double next = (std::abs(rho) <= mu)
                                    ? 0.0
                                    : (rho - (rho > 0 ? mu : -mu)) / col_sq[j];
            if (next != old) {
                r -= (next - old) * A.col(j);
                x[j] = next;
                max_move = std::max(max_move, std::abs(next - old));
            }
        }
        if (max_move <= tol * (1.0 + x.cwiseAbs().maxCoeff())) break;
    }
    return x;
}

struct CdBpdnResult {
    Eigen::VectorXd x;
    double residual_norm = 0.0;
    double mu = 0.0;
};

/// Residual-constrained reference solver: bisects the l1 penalty mu of
/// cd_lasso until |b - Ax| matches sigma_bound. Independent of the
/// projected-gradient / root-finding approach under test.
inline CdBpdnResult cd_bpdn(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                            double sigma_bound, int bisect_iters = 60) {
    const double bnorm = b.norm();
    if (sigma_bound >= bnorm) return {Eigen::VectorXd::Zero(A.cols()), bnorm, 0.0};

    double mu_hi = (A.transpose() * b).cwiseAbs().maxCoeff();  // x = 0 above this
    double mu_lo = 0.0;
    Eigen::VectorXd x;
    for (int it = 0; it < bisect_iters; ++it) {
        const double mu = 0.5 * (mu_lo + mu_hi);
        x = cd_lasso(A, b, mu);
        const double rnorm = (b - A * x).norm();
        (rnorm > sigma_bound ? mu_hi : mu_lo) = mu;
    }
    const double mu = 0.5 * (mu_lo + mu_hi);
    x = cd_lasso(A, b, mu);
    return {x, (b - A * x).norm(), mu};
}

/// Two-sample Kolmogorov distance between sorted sample values and a uniform
/// CDF on [lo, hi].
inline double ks_uniform(std::vector<double> samples, double lo, double hi) {
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        const double cdf = (samples[i] - lo) / (hi - lo);
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
        d = std::max(d, std::abs(cdf - static_cast<double>(i + 1) / n));
    }
    return d;
}

/// Textbook DBSCAN semantics check: core points (>= min_pts neighbours
/// within eps, self included) in the same eps-connected component share a
/// label; border points carry a label of some adjacent core; everything
/// else is noise (-1). Returns an empty string when labels comply.
inline std::string check_dbscan(const Eigen::MatrixXd& pts, double eps, int min_pts,
                                const Eigen::VectorXi& labels, int n_clusters) {
    const Eigen::Index n = pts.rows();
    const double eps2 = eps * eps;
    auto near = [&](Eigen::Index i, Eigen::Index j) {
        return (pts.row(i) - pts.row(j)).squaredNorm() <= eps2;
    };
    std::vector<bool> core(static_cast<size_t>(n), false);
    for (Eigen::Index i = 0; i < n; ++i) {
        int cnt = 0;
        for (Eigen::Index j = 0; j < n; ++j) cnt += near(i, j) ? 1 : 0;
        core[static_cast<size_t>(i)] = cnt >= min_pts;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (labels[i] < -1 || labels[i] >= n_clusters) return "label out of range";
        if (core[static_cast<size_t>(i)] && labels[i] < 0) return "core point marked noise";
    }
    // Core points connected through core chains must share a label.
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (core[static_cast<size_t>(i)] && core[static_cast<size_t>(j)] && near(i, j) &&
                labels[i] != labels[j])
                return "adjacent core points in different clusters";
    for (Eigen::Index i = 0; i < n; ++i) {
        if (core[static_cast<size_t>(i)]) continue;
        bool has_core_near = false;
        bool label_matches = false;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i || !core[static_cast<size_t>(j)] || !near(i, j)) continue;
            has_core_near = true;
            label_matches = label_matches || labels[i] == labels[j];
        }
        if (!has_core_near && labels[i] != -1) return "isolated point not noise";
        if (has_core_near && labels[i] != -1 && !label_matches)
            return "border point labelled unlike any adjacent core";
        if (has_core_near && labels[i] == -1) return "border point marked noise";
    }
    return "";
}

}  // namespace oracle
