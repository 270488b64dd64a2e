#include "srmd/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace srmd {

namespace {

// P(X > gamma * mean) = 1e-3 for an exponential variable.
constexpr double kTrimGamma = 6.907755278982137;
constexpr int kMaxTrimIters = 100;
constexpr double kRelTol = 1e-4;

double median_of(std::vector<double> v) {
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 0) {
        const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
        return 0.5 * (lo + hi);
    }
    return hi;
}

// Solves m = theta - T exp(-T/theta) / (1 - exp(-T/theta)) for theta, the
// mean of the untruncated exponential given the mean m of samples <= T.
double untruncated_mean(double m, double T) {
    if (m <= 0.0 || T <= 0.0) return std::max(m, 0.0);
    double theta = m;
    for (int k = 0; k < 100; ++k) {
        const double q = std::exp(-T / theta);
        const double next = m + T * q / (1.0 - q);
        if (!std::isfinite(next) || next <= 0.0) break;
        if (std::abs(next - theta) <= 1e-12 * theta) return next;
        theta = next;
    }
    return theta;
}

}  // namespace

NoiseEstimate estimate_noise(const StftResult& spec, const Eigen::ArrayXd& window) {
    if (spec.values.size() == 0) throw std::invalid_argument("estimate_noise: empty spectrogram");
    if (window.size() == 0) throw std::invalid_argument("estimate_noise: empty window");
    const double wsum2 = window.square().sum();
    if (wsum2 <= 0.0) throw std::invalid_argument("estimate_noise: window has no energy");

    // Prefer frames whose window lies fully inside the signal: clipped edge
    // frames have less windowed noise energy and would bias the fit low.
    const Eigen::Index half = window.size() / 2;
    const Eigen::Index n_samples =
        static_cast<Eigen::Index>(std::llround(spec.duration * spec.sample_rate));
    std::vector<Eigen::Index> frames;
    for (Eigen::Index f = 0; f < spec.values.cols(); ++f) {
        const auto center =
            static_cast<Eigen::Index>(std::llround(spec.time_axis[f] * spec.sample_rate));
        if (center - half >= 0 && center + half <= n_samples - 1) frames.push_back(f);
    }
    if (frames.size() < 8) {
        frames.resize(static_cast<size_t>(spec.values.cols()));
        for (Eigen::Index f = 0; f < spec.values.cols(); ++f)
            frames[static_cast<size_t>(f)] = f;
    }

    std::vector<double> bins;
    bins.reserve(frames.size() * static_cast<size_t>(spec.values.rows()));
    for (Eigen::Index f : frames)
        for (Eigen::Index k = 0; k < spec.values.rows(); ++k)
            bins.push_back(std::norm(spec.values(k, f)));
    if (bins.size() < 64)
        throw std::invalid_argument("estimate_noise: too few spectrogram bins (" +
                                    std::to_string(bins.size()) + ", need >= 64)");

    NoiseEstimate est;
    double theta = median_of(bins) / std::log(2.0);
    if (theta <= 0.0) {  // silent signal
        est.sigma2 = 0.0;
        est.spectral_mean = 0.0;
        est.n_noise_bins = static_cast<Eigen::Index>(bins.size());
        est.reliable = true;
        return est;
    }

    // Trim-and-refit: drop bins above the current 99.9th percentile, refit
    // the mean with truncation-bias correction, repeat while the estimate
    // keeps shrinking. Signal ridges fall away; the noise floor remains.
    Eigen::Index kept = 0;
    for (int it = 1; it <= kMaxTrimIters; ++it) {
        est.n_iterations = it;
        const double cutoff = kTrimGamma * theta;
        double sum = 0.0;
        kept = 0;
        for (double b : bins) {
            if (b <= cutoff) {
                sum += b;
                ++kept;
            }
        }
        if (kept == 0) break;
        const double corrected = untruncated_mean(sum / static_cast<double>(kept), cutoff);
        if (corrected >= theta * (1.0 - kRelTol)) {
            if (corrected < theta) theta = corrected;
            est.reliable = true;
            break;
        }
        theta = corrected;
    }

    est.spectral_mean = theta;
    est.sigma2 = theta / wsum2;
    est.n_noise_bins = kept;
    if (kept < 16) est.reliable = false;
    return est;
}

NoiseEstimate estimate_noise(const Signal& signal, double alpha) {
    signal.validate();
    if (alpha <= 0.0) throw std::invalid_argument("estimate_noise: alpha must be > 0");
    const auto m = static_cast<double>(signal.samples.size());
    const double fs = signal.sample_rate;

    // Keep the window no longer than a quarter of the signal so the
    // spectrogram has enough frames to fit a distribution to.
    const double half_cap = std::max(1.0, m / 8.0 - 1.0);
    const double alpha_cap = (half_cap / (3.0 * fs)) * (half_cap / (3.0 * fs));
    const double alpha_eff = std::min(alpha, alpha_cap);

    const STFTGrid grid = STFTGrid::from_alpha(alpha_eff, fs);
    grid.validate(signal.samples.size());
    return estimate_noise(stft(signal, grid), gaussian_window(grid, fs));
}

}  // namespace srmd
