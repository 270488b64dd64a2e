#include "srmd/bpdn.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <string>

namespace srmd {

namespace {

constexpr double kStepMin = 1e-10;
constexpr double kStepMax = 1e10;
constexpr double kLsSufficient = 1e-4;
constexpr int kLsMaxBacktracks = 40;
constexpr int kMaxRootSteps = 100;

struct InnerResult {
    Eigen::VectorXd c;
    double f = 0.0;  // 0.5 |x - Psi c|^2
    double rnorm = 0.0;
    double gnorm_inf = 0.0;  // |Psi^T r|_inf
    double last_rgap = std::numeric_limits<double>::infinity();
    int iterations = 0;
    long matvecs = 0;
    bool gap_met = false;  // relative duality gap reached gap_tol
    bool stalled = false;  // projected gradient could not move the iterate
};

// Spectral projected gradient for min 0.5|x - Psi c|^2 s.t. |c|_1 <= tau.
// Stops when the relative duality gap falls below target(rnorm), which lets
// the root-finding caller solve distant subproblems loosely. target(rnorm)
// never returns less than gap_tol.
InnerResult spg_lasso_loop(const LinearOperator& op, const Eigen::VectorXd& x, double tau,
                           Eigen::VectorXd c0, int iter_allowance, double gap_tol, int ls_memory,
                           const std::function<double(double)>& target) {
    InnerResult out;
    Eigen::VectorXd c = project_l1<double>(std::move(c0), tau);
    Eigen::VectorXd r = x - op.forward(c);
    Eigen::VectorXd g = -op.adjoint(r);
    out.matvecs += 2;
    double f = 0.5 * r.squaredNorm();

    std::deque<double> fhist{f};
    const double g0 = g.lpNorm<Eigen::Infinity>();
    double step = g0 > 0 ? std::clamp(1.0 / g0, kStepMin, kStepMax) : 1.0;

    while (true) {
        if (!std::isfinite(f))
            throw std::runtime_error("solve_lasso: non-finite objective at iteration " +
                                     std::to_string(out.iterations));
        const double rnorm = std::sqrt(2.0 * f);
        const double gnorm = g.lpNorm<Eigen::Infinity>();
        const double gap = c.dot(g) + tau * gnorm;
        const double rgap = std::abs(gap) / std::max(1.0, f);

        out.rnorm = rnorm;
        out.gnorm_inf = gnorm;
        out.last_rgap = rgap;
        if (rgap <= gap_tol) out.gap_met = true;
        if (rgap <= target(rnorm)) break;
        if (out.iterations >= iter_allowance) break;

        // Nonmonotone (memory ls_memory) backtracking line search along the
        // projected gradient arc.
        const double fmax = *std::max_element(fhist.begin(), fhist.end());
        double trial = step;
        Eigen::VectorXd cand, rcand, d;
        double fcand = 0.0;
        bool accepted = false;
        for (int bt = 0; bt < kLsMaxBacktracks; ++bt) {
            cand = project_l1<double>(Eigen::VectorXd(c - trial * g), tau);
            d = cand - c;
            const double dnorm = d.norm();
            if (dnorm <= 1e-15 * (1.0 + c.norm())) break;  // stationary point
            rcand = x - op.forward(cand);
            ++out.matvecs;
            fcand = 0.5 * rcand.squaredNorm();
            const double gtd = g.dot(d);
            if (fcand <= fmax + kLsSufficient * std::min(gtd, 0.0)) {
                accepted = true;
                break;
            }
            trial *= 0.5;
        }
        if (!accepted) {
            out.stalled = true;
            break;
        }

        Eigen::VectorXd gcand = -op.adjoint(rcand);
        ++out.matvecs;
        const Eigen::VectorXd y = gcand - g;
        const double sy = d.dot(y);
        step = sy > 0 ? std::clamp(d.squaredNorm() / sy, kStepMin, kStepMax) : kStepMax;

        c.swap(cand);
        r.swap(rcand);
        g.swap(gcand);
        f = fcand;
        fhist.push_back(f);
        if (fhist.size() > static_cast<size_t>(std::max(1, ls_memory))) fhist.pop_front();
        ++out.iterations;
    }
    out.c = std::move(c);
    return out;
}

}  // namespace

LinearOperator LinearOperator::from_matrix(const Eigen::MatrixXd& a) {
    LinearOperator op;
    op.rows = a.rows();
    op.cols = a.cols();
    op.forward = [&a](const Eigen::VectorXd& v) -> Eigen::VectorXd { return a * v; };
    op.adjoint = [&a](const Eigen::VectorXd& v) -> Eigen::VectorXd { return a.transpose() * v; };
    return op;
}

SparseSolution solve_lasso(const LinearOperator& op, const Eigen::VectorXd& x, double tau,
                           const Eigen::VectorXd& c0, const LassoOptions& opt) {
    if (x.size() != op.rows)
        throw std::invalid_argument("solve_lasso: target length does not match operator rows");
    if (c0.size() != op.cols)
        throw std::invalid_argument("solve_lasso: warm start length does not match operator cols");
    if (tau < 0) throw std::invalid_argument("solve_lasso: tau must be >= 0");

    auto fixed_target = [&opt](double) { return opt.tol_gap; };
    InnerResult res =
        spg_lasso_loop(op, x, tau, c0, opt.max_iter, opt.tol_gap, opt.ls_memory, fixed_target);

    SparseSolution sol;
    sol.coefficients = std::move(res.c);
    sol.residual_norm = res.rnorm;
    sol.dual_norm = res.gnorm_inf;
    sol.iterations = res.iterations;
    sol.matvec_count = res.matvecs;
    sol.converged = res.gap_met;
    return sol;
}

SparseSolution solve_bpdn(const BpdnProblem& problem, const BpdnOptions& opt) {
    const LinearOperator& op = problem.op;
    const Eigen::VectorXd& x = problem.target;
    const double sigma = problem.sigma_bound;
    if (x.size() != op.rows)
        throw std::invalid_argument("solve_bpdn: target length does not match operator rows");
    if (sigma < 0) throw std::invalid_argument("solve_bpdn: sigma_bound must be >= 0");

    const double bnorm = x.norm();
    SparseSolution sol;
    sol.coefficients = Eigen::VectorXd::Zero(op.cols);

    // c = 0 is already feasible (and l1-minimal) when the target sits inside
    // the residual ball.
    if (bnorm <= sigma || bnorm == 0.0) {
        sol.residual_norm = bnorm;
        sol.dual_norm = op.adjoint(x).lpNorm<Eigen::Infinity>();
        sol.matvec_count = 1;
        sol.converged = true;
        return sol;
    }

    const double feas_tol = sigma > 0 ? opt.tol_feas * sigma : 1e-8 * bnorm;
    double tau = 0.0;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(op.cols);
    int used = 0;
    long matvecs = 0;

    Eigen::VectorXd best_c = c;
    double best_dist = std::numeric_limits<double>::infinity();
    bool converged = false;

    for (int root_step = 0; root_step < kMaxRootSteps; ++root_step) {
        const int allowance = opt.max_iter - used;
        if (allowance < 0) break;

        // Distant subproblems only need a gap proportional to how far the
        // residual still is from sigma; the final one gets the full tol_gap.
        auto target = [&](double rnorm) {
            const double dist = std::abs(rnorm - sigma);
            if (dist <= feas_tol) return opt.tol_gap;
            return std::max(opt.tol_gap, 0.3 * std::min(1.0, dist / std::max(1.0, rnorm)));
        };
        InnerResult res =
            spg_lasso_loop(op, x, tau, c, allowance, opt.tol_gap, LassoOptions{}.ls_memory,
                           target);
        used += res.iterations;
        matvecs += res.matvecs;
        c = res.c;

        if (opt.trace) opt.trace->push_back({used, tau, res.rnorm, res.gnorm_inf, matvecs});

        const double dist = std::abs(res.rnorm - sigma);
        if (dist < best_dist) {
            best_dist = dist;
            best_c = c;
        }
        const bool feasible = sigma > 0 ? dist <= feas_tol : res.rnorm <= feas_tol;
        if (feasible && (res.gap_met || res.stalled)) {
            converged = true;
            break;
        }
        if (used >= opt.max_iter) break;

        // Newton step on phi(tau) = |x - Psi c_tau|, phi'(tau) = -gnorm/rnorm.
        if (res.gnorm_inf <= 1e-13 * std::max(1.0, bnorm)) break;  // cannot reduce further
        const double tau_next =
            std::max(0.0, tau + res.rnorm * (res.rnorm - sigma) / res.gnorm_inf);
        if (std::abs(tau_next - tau) <= 1e-12 * std::max(1.0, tau)) break;
        tau = tau_next;
    }

    sol.coefficients = converged ? std::move(c) : std::move(best_c);
    Eigen::VectorXd r = x - op.forward(sol.coefficients);
    sol.residual_norm = r.norm();
    sol.dual_norm = op.adjoint(r).lpNorm<Eigen::Infinity>();
    matvecs += 2;
    sol.iterations = used;
    sol.matvec_count = matvecs;
    sol.converged = converged;
    return sol;
}

}  // namespace srmd
