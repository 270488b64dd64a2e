#pragma once

#include <Eigen/Dense>

#include "srmd/signal.hpp"

namespace srmd {

/// Analysis grid for the short-time transforms. The window is a truncated
/// Gaussian g(t) = exp(-t^2 / (2*alpha)) sampled on +/-3 standard deviations
/// and normalized so its discrete sum is 1.
struct STFTGrid {
    Eigen::Index hop = 0;              // samples between frame centers
    Eigen::Index window_len = 0;       // samples, odd
    double window_param_alpha = 0.0;   // Gaussian variance, s^2
    Eigen::Index freq_bins = 0;        // (window_len+1)/2 (real spectrum) or window_len

    /// hop = max(1, window_len/8), real-spectrum bins.
    static STFTGrid from_alpha(double alpha, double fs, Eigen::Index hop_divisor = 8);

    bool full_spectrum() const { return freq_bins == window_len; }
    Eigen::Index half() const { return (window_len - 1) / 2; }
    void validate(Eigen::Index signal_len) const;
};

/// Window samples on the grid's support (length window_len, sums to 1).
Eigen::ArrayXd gaussian_window(const STFTGrid& grid, double fs);

struct StftResult {
    Eigen::MatrixXcd values;    // freq_bins x n_frames
    Eigen::ArrayXd time_axis;   // frame centers, s
    Eigen::ArrayXd freq_axis;   // Hz
    double sample_rate = 0.0;
    double duration = 0.0;

    Eigen::Index n_frames() const { return values.cols(); }
};

/// Windowed Fourier analysis with absolute-time phase convention:
/// values(k, f) = sum_t x(t) g(t - tau_f) exp(-j 2 pi xi_k t).
/// Frame centers step by grid.hop starting at sample 0; edge frames see the
/// window clipped to the signal extent.
StftResult stft(const Signal& x, const STFTGrid& grid);

/// Least-squares weighted overlap-add synthesis. Round-trips stft() to
/// machine precision away from the first/last window_len samples.
Signal istft(const StftResult& tf, const STFTGrid& grid);

struct TFCRepresentation {
    std::vector<Eigen::MatrixXcd> frames;  // per frame: freq_bins x cr_bins
    Eigen::ArrayXd time_axis;              // frame centers, s
    Eigen::ArrayXd freq_axis;              // Hz
    Eigen::ArrayXd cr_axis;                // Hz/s
    double sample_rate = 0.0;
    double duration = 0.0;
    double window_param_alpha = 0.0;  // analysis window variance, s^2

    Eigen::Index n_frames() const { return static_cast<Eigen::Index>(frames.size()); }
    Eigen::Index n_freq() const { return freq_axis.size(); }
    Eigen::Index n_cr() const { return cr_axis.size(); }
    void validate() const;
};

/// Chirplet analysis: values[f](k, b) adds the quadratic-phase kernel
/// exp(-j pi beta_b (t - tau_f)^2) to the STFT integrand. The beta = 0 slice
/// equals stft() exactly.
TFCRepresentation chirplet_transform(const Signal& x, const STFTGrid& grid,
                                     const Eigen::ArrayXd& cr_axis);

/// 41 uniform chirp-rate bins spanning +/-1.5*|cr_hint|, or +/-4*fs/L when no
/// hint is given. Always includes 0 (odd bin count, symmetric).
Eigen::ArrayXd default_cr_axis(double fs, double duration, double cr_hint = 0.0,
                               Eigen::Index bins = 41);

}  // namespace srmd
