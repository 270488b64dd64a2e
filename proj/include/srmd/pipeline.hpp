#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "srmd/baseline.hpp"
#include "srmd/bpdn.hpp"
#include "srmd/features.hpp"
#include "srmd/ridge.hpp"
#include "srmd/signal.hpp"
#include "srmd/stft.hpp"

namespace srmd {

struct DecompositionConfig {
    int n_modes = 1;       // ridges to extract and reconstruct
    double alpha = -1.0;   // window variance s^2; <= 0 picks (duration/80)^2
    double lambda = -1.0;  // feature band width (Hz); <= 0 picks sample_rate/100
    int n_features = 5000;  // atoms sampled around each ridge
    int max_iter = 1000;    // sparse solver iteration budget
    std::uint64_t seed = 0;
    double sigma_override = -1.0;  // per-sample noise std; < 0 estimates it
    double cr_max = -1.0;          // chirp-rate axis half-range hint (Hz/s)
    int cr_bins = 41;
    double freq_jump_hz = -1.0;  // ridge per-frame jump limits; <= 0 auto
    int cr_jump_bins = -1;
    // Refit the atoms surviving the sparse solve by damped least squares.
    // Removes the l1 amplitude shrinkage and the solver's slow residual tail;
    // the damping (relative to the mean squared column norm) keeps the
    // solver's energy split between nearly collinear atoms of different modes.
    bool debias = true;
    double debias_damping = 1e-4;
    std::vector<BpdnTraceRow>* trace = nullptr;
};

struct StageTimings {
    double transform_s = 0.0;
    double ridge_s = 0.0;
    double dictionary_s = 0.0;
    double solve_s = 0.0;
    double total_s = 0.0;
};

struct DecompositionResult {
    std::vector<Signal> modes;  // n_modes entries, ridge order
    std::vector<RidgeCurve> ridges;
    FeatureDictionary dictionary;
    Eigen::VectorXd coefficients;  // final (debiased) weights behind `modes`
    SparseSolution solution;       // raw sparse-solver output and diagnostics
    double sigma = 0.0;   // per-sample noise std handed to the solver
    double alpha = 0.0;   // resolved window variance
    double lambda = 0.0;  // resolved band width
    StageTimings timings;
};

/// Full chirplet-domain decomposition: time-frequency-chirp transform, ridge
/// extraction, band-limited random feature sampling around each ridge,
/// basis-pursuit denoise, per-ridge reconstruction.
DecompositionResult decompose_3d(const Signal& signal, const DecompositionConfig& config);

struct ModeMatch {
    int recovered_index = -1;  // -1: matched against silence
    double snr_db = 0.0;
};

/// Assigns each reference mode to a distinct recovered mode (or to silence)
/// so that the summed output SNR is maximal. Exhaustive, intended for the
/// small mode counts used in experiments.
std::vector<ModeMatch> match_modes(const std::vector<Signal>& reference,
                                   const std::vector<Signal>& recovered);

struct BenchmarkRow {
    double input_snr_db = 0.0;
    std::string method;  // "3dsrmd" or "srmd"
    int trial = 0;
    int mode = 0;  // reference mode index
    double output_snr_db = 0.0;
    double runtime_s = 0.0;
    bool converged = false;
};

/// Runs both decompositions on the summed reference modes over a noise-level
/// sweep. Each (level, trial) pair gets its own deterministic noise and
/// dictionary seeds derived from `seed`. A decomposition that throws is
/// recorded as 0 dB (no better than silence) with converged = false.
std::vector<BenchmarkRow> benchmark_snr_sweep(const ModeSet& reference,
                                              const std::vector<double>& input_snr_db,
                                              int trials, const DecompositionConfig& config_3d,
                                              const SrmdConfig& config_2d,
                                              std::uint64_t seed = 0);

struct ComplexityPoint {
    Eigen::Index signal_len = 0;
    Eigen::Index dictionary_cols = 0;
    int iterations = 0;
    double seconds_per_iter = 0.0;
};

/// Times the projected-gradient inner loop at fixed iteration count across
/// dictionary sizes, for verifying the per-iteration cost scales linearly in
/// the column count.
std::vector<ComplexityPoint> complexity_probe(const std::vector<Eigen::Index>& dictionary_cols,
                                              Eigen::Index signal_len, int iterations,
                                              std::uint64_t seed = 0);

}  // namespace srmd
