#include "srmd/baseline.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

#include "srmd/noise.hpp"
#include "srmd/rng.hpp"

namespace srmd {

namespace {

std::vector<Eigen::Index> neighbours_of(const Eigen::MatrixXd& points, Eigen::Index i,
                                        double eps2) {
    std::vector<Eigen::Index> out;
    for (Eigen::Index j = 0; j < points.rows(); ++j)
        if ((points.row(j) - points.row(i)).squaredNorm() <= eps2) out.push_back(j);
    return out;
}

}  // namespace

ClusterLabeling dbscan(const Eigen::MatrixXd& points, double eps, int min_pts) {
    if (eps <= 0.0) throw std::invalid_argument("dbscan: eps must be > 0");
    if (min_pts < 1) throw std::invalid_argument("dbscan: min_pts must be >= 1");
    const Eigen::Index n = points.rows();
    const double eps2 = eps * eps;

    ClusterLabeling out;
    out.labels = Eigen::VectorXi::Constant(n, -1);
    std::vector<bool> visited(static_cast<size_t>(n), false);

    for (Eigen::Index i = 0; i < n; ++i) {
        if (visited[static_cast<size_t>(i)]) continue;
        visited[static_cast<size_t>(i)] = true;
        std::vector<Eigen::Index> seeds = neighbours_of(points, i, eps2);
        if (std::ssize(seeds) < min_pts) continue;  // stays noise unless claimed later

        const int cluster = out.n_clusters++;
        out.labels[i] = cluster;
        std::deque<Eigen::Index> queue(seeds.begin(), seeds.end());
        while (!queue.empty()) {
            const Eigen::Index j = queue.front();
            queue.pop_front();
            if (!visited[static_cast<size_t>(j)]) {
                visited[static_cast<size_t>(j)] = true;
                std::vector<Eigen::Index> more = neighbours_of(points, j, eps2);
                if (std::ssize(more) >= min_pts)
                    queue.insert(queue.end(), more.begin(), more.end());
            }
            if (out.labels[j] == -1) out.labels[j] = cluster;
        }
    }
    return out;
}

SrmdResult srmd_decompose(const Signal& signal, const SrmdConfig& config) {
    signal.validate();
    if (config.n_features < 1)
        throw std::invalid_argument("srmd_decompose: n_features must be >= 1");
    const Eigen::Index m = signal.samples.size();
    const double duration = signal.duration();
    const double f_max = signal.sample_rate / 2.0;
    const double alpha =
        config.alpha > 0.0 ? config.alpha : (duration / 80.0) * (duration / 80.0);

    std::vector<FeatureAtom> atoms = sample_uniform_2d(
        config.n_features, duration, f_max, derive_seed(config.seed, 1));

    auto [dict, psi] = build_dictionary({std::move(atoms)}, signal.time_grid(), alpha);

    SrmdResult result;
    result.dictionary = std::move(dict);

    double sigma = config.sigma_override;
    if (sigma < 0.0) {
        const NoiseEstimate est = estimate_noise(signal, alpha);
        sigma = std::sqrt(std::max(est.sigma2, 0.0));
    }
    // Floor keeps the residual target away from zero on clean inputs, where
    // exact recovery over a random dictionary is unattainable.
    const double rms = std::sqrt(signal.samples.square().mean());
    sigma = std::max(sigma, 1e-5 * rms);
    result.sigma = sigma;

    BpdnProblem problem{LinearOperator::from_matrix(psi), signal.samples.matrix(),
                        std::sqrt(static_cast<double>(m)) * sigma};
    BpdnOptions options;
    options.max_iter = config.max_iter;
    result.solution = solve_bpdn(problem, options);
    result.coefficients = result.solution.coefficients;

    // Cluster the surviving atoms in normalized (tau, xi) coordinates.
    const Eigen::VectorXd& c = result.coefficients;
    const double floor = config.weight_floor * c.cwiseAbs().maxCoeff();
    std::vector<Eigen::Index> kept;
    for (Eigen::Index i = 0; i < c.size(); ++i)
        if (std::abs(c[i]) > floor) kept.push_back(i);

    result.atom_labels = Eigen::VectorXi::Constant(c.size(), -2);
    if (!kept.empty()) {
        Eigen::MatrixXd points(std::ssize(kept), 2);
        for (Eigen::Index k = 0; k < std::ssize(kept); ++k) {
            const FeatureAtom& a = result.dictionary.atoms[static_cast<size_t>(kept[k])];
            points(k, 0) = a.tau / duration;
            points(k, 1) = a.xi / f_max;
        }
        const ClusterLabeling labeling =
            dbscan(points, config.cluster_eps, config.cluster_min_pts);
        for (Eigen::Index k = 0; k < std::ssize(kept); ++k)
            result.atom_labels[kept[k]] = labeling.labels[k];

        result.modes.reserve(static_cast<size_t>(labeling.n_clusters));
        for (int cluster = 0; cluster < labeling.n_clusters; ++cluster) {
            Eigen::VectorXd mode = Eigen::VectorXd::Zero(m);
            for (Eigen::Index k = 0; k < std::ssize(kept); ++k)
                if (labeling.labels[k] == cluster) mode += c[kept[k]] * psi.col(kept[k]);
            result.modes.push_back(
                Signal{mode.array(), signal.sample_rate, signal.start_time});
        }
    }
    return result;
}

}  // namespace srmd
