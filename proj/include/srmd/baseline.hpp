#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "srmd/bpdn.hpp"
#include "srmd/features.hpp"
#include "srmd/signal.hpp"

namespace srmd {

struct ClusterLabeling {
    Eigen::VectorXi labels;  // -1 = noise, otherwise cluster id in [0, n_clusters)
    int n_clusters = 0;
};

/// Density-based clustering over the rows of `points`. Neighborhoods use
/// Euclidean distance <= eps; a point with at least min_pts neighbours
/// (itself included) is a core point. Deterministic: clusters are numbered
/// in order of their first core point's row index.
ClusterLabeling dbscan(const Eigen::MatrixXd& points, double eps, int min_pts);

struct SrmdConfig {
    double alpha = -1.0;          // window variance s^2; <= 0 picks (duration/80)^2
    int n_features = 5000;        // uniformly sampled (tau, xi) atoms
    int max_iter = 1000;          // sparse solver iteration budget
    std::uint64_t seed = 0;
    double sigma_override = -1.0;  // per-sample noise std; < 0 estimates it
    double cluster_eps = 0.03;     // in (tau/duration, xi/f_max) coordinates
    int cluster_min_pts = 4;
    double weight_floor = 1e-3;  // drop atoms below this fraction of max |c|
};

struct SrmdResult {
    std::vector<Signal> modes;       // one per recovered cluster
    Eigen::VectorXd coefficients;    // all atoms, solver output
    Eigen::VectorXi atom_labels;     // -2 below weight floor, -1 noise, else cluster
    FeatureDictionary dictionary;
    SparseSolution solution;
    double sigma = 0.0;  // per-sample noise std handed to the solver
};

/// Sparse random mode decomposition over a time-frequency dictionary:
/// uniformly sampled Gabor atoms, basis-pursuit denoise, then density
/// clustering of the surviving atoms into modes.
SrmdResult srmd_decompose(const Signal& signal, const SrmdConfig& config = {});

}  // namespace srmd
