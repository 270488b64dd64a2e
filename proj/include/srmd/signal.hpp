#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace srmd {

/// Uniformly sampled real-valued time series.
struct Signal {
    Eigen::ArrayXd samples;
    double sample_rate = 0.0;  // Hz
    double start_time = 0.0;   // s

    Eigen::Index size() const { return samples.size(); }
    double duration() const { return static_cast<double>(samples.size()) / sample_rate; }

    /// Sample instants start_time + i/fs.
    Eigen::ArrayXd time_grid() const {
        return start_time +
               Eigen::ArrayXd::LinSpaced(samples.size(), 0.0, static_cast<double>(samples.size() - 1)) /
                   sample_rate;
    }

    double energy() const { return samples.square().sum(); }

    /// Throws std::invalid_argument unless fs > 0, samples non-empty and finite.
    void validate() const;
};

/// Analytic description of one AM-FM mode: amplitude a(t), phase p(t) (radians),
/// instantaneous frequency f(t) = p'(t)/2pi, and chirp rate f'(t).
struct ModeSpec {
    std::function<double(double)> amplitude_fn;
    std::function<double(double)> phase_fn;
    std::function<double(double)> if_fn;
    std::function<double(double)> cr_fn;
    std::string label;
};

struct ModeSet {
    std::vector<Signal> modes;
    std::vector<std::string> labels;
};

/// Samples a(t_i)*cos(p(t_i)) on m points at rate fs.
/// Rejects specs whose peak IF violates Nyquist, naming the offending value.
Signal synth_mode(const ModeSpec& spec, Eigen::Index m, double fs);

/// The two oscillating-IF modes used throughout: the analytic ground truth
/// behind paper_simulated_signal.
std::vector<ModeSpec> paper_mode_specs();

/// Two-mode signal with IFs 250 -/+ 200*cos(7*pi*t) that cross repeatedly.
std::pair<Signal, ModeSet> paper_simulated_signal(double fs = 1024.0, double duration = 1.0);

/// Linear chirps with IFs 400-200t and 200+200t (CRs -/+200 Hz/s), crossing at t=0.5.
std::vector<ModeSpec> crossover_mode_specs();
std::pair<Signal, ModeSet> crossover_chirp_pair(double fs = 1024.0, double duration = 1.0);

/// Constant tones at the given frequencies (unit amplitude).
std::vector<ModeSpec> tone_mode_specs(const std::vector<double>& freqs_hz);
std::pair<Signal, ModeSet> parallel_tones(const std::vector<double>& freqs_hz, double fs,
                                          double duration);

/// Adds Gaussian white noise scaled so the realized SNR equals snr_db exactly.
/// Returns the noisy signal and the realized noise variance (mean square).
/// snr_db = +inf returns the input unchanged with variance 0.
std::pair<Signal, double> add_white_noise(const Signal& x, double snr_db, std::uint64_t seed);

/// 20*log10(|ref| / |ref - est|); +inf on exact match.
double snr_db(const Signal& reference, const Signal& estimate);
double snr_db(const Eigen::ArrayXd& reference, const Eigen::ArrayXd& estimate);

}  // namespace srmd
