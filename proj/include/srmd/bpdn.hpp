#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace srmd {

/// Euclidean projection onto the l1 ball of radius tau (sort-based,
/// O(n log n)). Ties in the sort resolve by index order.
template <typename Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> project_l1(const Eigen::Vector<Scalar, Eigen::Dynamic>& v,
                                                 Scalar tau) {
    if (tau < Scalar(0)) throw std::invalid_argument("project_l1: tau must be >= 0");
    const Eigen::Index n = v.size();
    if (tau == Scalar(0)) return Eigen::Vector<Scalar, Eigen::Dynamic>::Zero(n);
    Eigen::Vector<Scalar, Eigen::Dynamic> a = v.cwiseAbs();
    if (a.sum() <= tau) return v;

    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::stable_sort(order.begin(), order.end(),
                     [&a](Eigen::Index i, Eigen::Index j) { return a[i] > a[j]; });

    Scalar css = Scalar(0);
    Scalar theta = Scalar(0);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Scalar u = a[order[static_cast<size_t>(j)]];
        css += u;
        const Scalar cand = (css - tau) / static_cast<Scalar>(j + 1);
        if (u > cand)
            theta = cand;
        else
            break;
    }
    Eigen::Vector<Scalar, Eigen::Dynamic> w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar mag = a[i] - theta;
        w[i] = mag > Scalar(0) ? (v[i] > Scalar(0) ? mag : -mag) : Scalar(0);
    }
    return w;
}

/// Forward/adjoint pair; the solver never sees the matrix itself, so a
/// matrix-free dictionary can be swapped in without solver changes.
struct LinearOperator {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> forward;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> adjoint;

    /// Views the matrix; the caller keeps it alive for the operator's lifetime.
    static LinearOperator from_matrix(const Eigen::MatrixXd& a);
};

struct BpdnProblem {
    LinearOperator op;
    Eigen::VectorXd target;
    double sigma_bound = 0.0;  // residual bound sqrt(m)*sigma
};

struct SparseSolution {
    Eigen::VectorXd coefficients;
    double residual_norm = 0.0;
    double dual_norm = 0.0;  // |Psi^T r|_inf at the returned iterate
    int iterations = 0;      // projected-gradient steps used
    long matvec_count = 0;   // forward plus adjoint applications
    bool converged = false;
};

struct LassoOptions {
    int max_iter = 1000;
    double tol_gap = 1e-5;  // relative duality gap
    int ls_memory = 10;     // nonmonotone line search window
};

/// min |Psi c - x|_2 s.t. |c|_1 <= tau, by spectral (Barzilai-Borwein)
/// projected gradient with a nonmonotone line search.
SparseSolution solve_lasso(const LinearOperator& op, const Eigen::VectorXd& x, double tau,
                           const Eigen::VectorXd& c0, const LassoOptions& opt = {});

struct BpdnTraceRow {
    int iter = 0;  // cumulative inner iterations
    double tau = 0.0;
    double residual_norm = 0.0;
    double dual_norm = 0.0;
    long matvecs = 0;
};

struct BpdnOptions {
    int max_iter = 1000;     // total inner iteration budget
    double tol_feas = 1e-4;  // relative residual tolerance around sigma_bound
    double tol_gap = 1e-5;
    std::vector<BpdnTraceRow>* trace = nullptr;  // optional per-root-step record
};

/// min |c|_1 s.t. |Psi c - x|_2 <= sigma_bound: Newton root finding on the
/// Pareto curve phi(tau), each LASSO subproblem warm-started from the last.
SparseSolution solve_bpdn(const BpdnProblem& problem, const BpdnOptions& opt = {});

}  // namespace srmd
