#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "srmd/stft.hpp"

namespace srmd {

/// One mode's estimated IF/CR trajectory over the frame grid.
struct RidgeCurve {
    Eigen::ArrayXd frame_times;  // s
    Eigen::ArrayXd if_hz;
    Eigen::ArrayXd cr_hzps;
    Eigen::ArrayXd energy;       // per-frame ridge magnitude

    double freq_bin_width = 0.0;
    double cr_bin_width = 0.0;
    double freq_max = 0.0;       // top of the analyzed band, Hz
    double duration = 0.0;       // signal duration, s

    Eigen::Index n_frames() const { return frame_times.size(); }

    /// Piecewise-linear IF/CR with linear (slope = local CR) extension beyond
    /// the frame range, so the curve covers the whole [0, duration] interval.
    double if_at(double t) const;
    double cr_at(double t) const;
};

/// Thrown when fewer ridges than requested rise above the noise floor.
class RidgeShortfall : public std::runtime_error {
public:
    RidgeShortfall(const std::string& msg, int found_count)
        : std::runtime_error(msg), found(found_count) {}
    int found = 0;
};

struct RidgeDetectOptions {
    double jump_limit_hz = 0.0;     // <=0: 3 frequency bins per frame
    double peel_band_hz = 0.0;      // <=0: 3 frequency bins
    int cr_jump_bins = 2;           // max chirp-rate bin step per frame
    int cr_peel_bins = -1;          // half-width of the peeled chirp-rate band;
                                    // <=0: the window's chirp-rate visibility
                                    // width (a ridge stays above half peak for
                                    // |beta error| < sqrt(15)/(2 pi alpha))
    double mu_scale = 0.1;          // jump cost as fraction of ridge log-contrast
    double nu = 0.1;                // weight of chirp-rate steps relative to the
                                    // frequency-consistency term; small enough
                                    // that tracking a swinging rate honestly is
                                    // cheaper than freezing the rate bin and
                                    // paying the consistency penalty
    double floor_factor = 2.0;      // ridge median below this multiple of the
                                    // tensor median magnitude counts as noise
};

/// Greedy extraction of k maximum-energy paths through the (frequency,
/// chirp-rate) planes of the tensor. Transitions are scored kinematically:
/// the frequency step between frames is penalized by its deviation from the
/// step the chirp-rate bin predicts, so paths keep mode identity through
/// crossings instead of swapping branches. After each extraction a small
/// neighborhood of the path is zeroed per frame (peeling) so that crossing
/// ridges survive for the next pass.
std::vector<RidgeCurve> detect_ridges(const TFCRepresentation& tfc, int k,
                                      const RidgeDetectOptions& opt = {});
std::vector<RidgeCurve> detect_ridges(const TFCRepresentation& tfc, int k, double jump_limit_hz,
                                      double peel_band_hz);

/// Repairs chirp-rate samples that disagree with the derivative of the IF
/// track by more than two chirp-rate bins; replaces the whole track with the
/// smoothed derivative when more than 20% of frames disagree.
RidgeCurve refine_cr_from_if(const RidgeCurve& curve, Eigen::Index smoothing_window = 5);

}  // namespace srmd
