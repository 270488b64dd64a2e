#pragma once

#include <Eigen/Dense>

#include "srmd/signal.hpp"
#include "srmd/stft.hpp"

namespace srmd {

struct NoiseEstimate {
    double sigma2 = 0.0;         // time-domain white-noise variance
    double spectral_mean = 0.0;  // fitted exponential mean of noise |STFT|^2
    Eigen::Index n_noise_bins = 0;
    int n_iterations = 0;
    bool reliable = false;
};

/// Fits an exponential law to the magnitude-squared spectrogram bins,
/// iteratively trimming bins that sit above the 99.9th percentile of the
/// current fit (signal ridges), then converts the fitted spectral mean back
/// to a time-domain variance through the window's energy.
NoiseEstimate estimate_noise(const StftResult& spec, const Eigen::ArrayXd& window);

/// Convenience wrapper: builds a short-window spectrogram of the signal and
/// estimates from it. `alpha` is the analysis window variance in s^2; it is
/// shrunk automatically if the signal is too short for four window lengths.
NoiseEstimate estimate_noise(const Signal& signal, double alpha);

}  // namespace srmd
