#include "srmd/features.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "srmd/rng.hpp"

namespace srmd {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::vector<FeatureAtom> sample_uniform_2d(Eigen::Index n, double duration, double f_max,
                                           std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_uniform_2d: n must be >= 1");
    if (duration <= 0.0 || f_max <= 0.0)
        throw std::invalid_argument("sample_uniform_2d: duration and f_max must be positive");
    Rng rng(seed);
    std::vector<FeatureAtom> atoms(static_cast<size_t>(n));
    for (auto& a : atoms) {
        a.tau = rng.uniform(0.0, duration);
        a.xi = rng.uniform(0.0, f_max);
        a.beta = 0.0;
        a.phi = rng.bernoulli();
        a.mode_index = 0;
    }
    return atoms;
}

ConcentratedSample sample_concentrated_3d(const RidgeCurve& ridge, Eigen::Index n, double lambda,
                                          std::uint64_t seed, int mode_index, double tau_pad) {
    if (n < 1) throw std::invalid_argument("sample_concentrated_3d: n must be >= 1");
    if (lambda <= 0.0) throw std::invalid_argument("sample_concentrated_3d: lambda must be positive");
    if (tau_pad < 0.0) throw std::invalid_argument("sample_concentrated_3d: tau_pad must be >= 0");
    if (ridge.n_frames() == 0 || ridge.duration <= 0.0)
        throw std::invalid_argument("sample_concentrated_3d: ridge does not cover a signal");
    Rng rng(seed);
    ConcentratedSample out;
    out.atoms.resize(static_cast<size_t>(n));
    Eigen::Index clamped = 0;
    for (auto& a : out.atoms) {
        a.tau = rng.uniform(-tau_pad, ridge.duration + tau_pad);
        const double f = ridge.if_at(a.tau);
        const double c = ridge.cr_at(a.tau);
        double xi = f + rng.uniform(-lambda / 2.0, lambda / 2.0);
        if (xi < 0.0 || xi > ridge.freq_max) {
            xi = std::clamp(xi, 0.0, ridge.freq_max);
            ++clamped;
        }
        a.xi = xi;
        a.beta = c + rng.uniform(-lambda / 2.0, lambda / 2.0);
        a.phi = rng.bernoulli();
        a.mode_index = mode_index;
    }
    out.clamped_fraction = static_cast<double>(clamped) / static_cast<double>(n);
    out.edge_warning = out.clamped_fraction > 0.05;
    return out;
}

Eigen::ArrayXd evaluate_atom(const FeatureAtom& atom, const Eigen::ArrayXd& time_grid,
                             double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("evaluate_atom: alpha must be positive");
    const Eigen::ArrayXd dt = time_grid - atom.tau;
    return (-dt.square() / (2.0 * alpha)).exp() *
           (2.0 * kPi * atom.xi * time_grid + kPi * atom.beta * dt.square() -
            (kPi / 2.0) * atom.phi)
               .cos();
}

std::pair<FeatureDictionary, Eigen::MatrixXd> build_dictionary(
    const std::vector<std::vector<FeatureAtom>>& atom_groups, const Eigen::ArrayXd& time_grid,
    double alpha, std::uint64_t memory_cap_bytes) {
    if (atom_groups.empty()) throw std::invalid_argument("build_dictionary: no atom groups");
    Eigen::Index total = 0;
    for (const auto& g : atom_groups) {
        if (g.empty()) throw std::invalid_argument("build_dictionary: empty atom group");
        total += static_cast<Eigen::Index>(g.size());
    }
    const auto m = time_grid.size();
    const std::uint64_t estimate =
        static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(total) * sizeof(double);
    if (estimate > memory_cap_bytes) {
        std::ostringstream os;
        os << "build_dictionary: dense matrix would need " << estimate << " bytes ("
           << m << " x " << total << " f64), cap is " << memory_cap_bytes;
        throw std::invalid_argument(os.str());
    }

    FeatureDictionary dict;
    dict.window_param_alpha = alpha;
    dict.time_grid = time_grid;
    dict.atoms.reserve(static_cast<size_t>(total));
    Eigen::MatrixXd psi(m, total);
    Eigen::Index col = 0;
    dict.group_offsets.push_back(0);
    for (const auto& g : atom_groups) {
        for (const auto& a : g) {
            psi.col(col++) = evaluate_atom(a, time_grid, alpha).matrix();
            dict.atoms.push_back(a);
        }
        dict.group_offsets.push_back(col);
    }
    return {std::move(dict), std::move(psi)};
}

}  // namespace srmd
