#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "srmd/ridge.hpp"

namespace srmd {

/// One random feature: a Gaussian-windowed chirped sinusoid
///   exp(-(t-tau)^2/(2*alpha)) * cos(2*pi*xi*t + pi*beta*(t-tau)^2 - (pi/2)*phi).
struct FeatureAtom {
    double tau = 0.0;    // s
    double xi = 0.0;     // Hz
    double beta = 0.0;   // Hz/s
    int phi = 0;         // 0: cosine phase, 1: sine phase
    int mode_index = 0;  // 0 for baseline/unassigned
};

struct FeatureDictionary {
    std::vector<FeatureAtom> atoms;    // grouped contiguously by mode_index
    double window_param_alpha = 0.0;   // s^2
    Eigen::ArrayXd time_grid;          // s, length m
    std::vector<Eigen::Index> group_offsets;  // per-group start, plus total

    Eigen::Index cols() const { return static_cast<Eigen::Index>(atoms.size()); }
    Eigen::Index n_groups() const {
        return static_cast<Eigen::Index>(group_offsets.empty() ? 0 : group_offsets.size() - 1);
    }
};

/// (tau, xi) i.i.d. uniform on [0,L] x [0,f_max], beta = 0, phi ~ B(1, 0.5).
std::vector<FeatureAtom> sample_uniform_2d(Eigen::Index n, double duration, double f_max,
                                           std::uint64_t seed);

struct ConcentratedSample {
    std::vector<FeatureAtom> atoms;
    double clamped_fraction = 0.0;  // share of xi draws clamped to [0, freq_max]
    bool edge_warning = false;      // clamped_fraction > 5%: ridge hugs the band edge
};

/// Band-limited uniform sampling around a ridge: tau ~ U[-tau_pad, L+tau_pad],
/// xi ~ U[f(tau) +/- lambda/2], beta ~ U[f'(tau) +/- lambda/2]. A tau_pad of a
/// few window standard deviations lets atoms centered past the signal edges
/// carry the first and last samples, which half-clipped windows fit poorly.
ConcentratedSample sample_concentrated_3d(const RidgeCurve& ridge, Eigen::Index n, double lambda,
                                          std::uint64_t seed, int mode_index = 1,
                                          double tau_pad = 0.0);

/// Single dictionary column on the given time grid.
Eigen::ArrayXd evaluate_atom(const FeatureAtom& atom, const Eigen::ArrayXd& time_grid,
                             double alpha);

/// Assembles the m x (sum of group sizes) dictionary matrix, columns ordered
/// group by group. Rejects builds whose dense size exceeds memory_cap_bytes.
std::pair<FeatureDictionary, Eigen::MatrixXd> build_dictionary(
    const std::vector<std::vector<FeatureAtom>>& atom_groups, const Eigen::ArrayXd& time_grid,
    double alpha, std::uint64_t memory_cap_bytes = 2ull << 30);

}  // namespace srmd
