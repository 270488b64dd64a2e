#include "srmd/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace srmd {

namespace {

constexpr double kPiRidge = 3.14159265358979323846;

double interp_with_slope_extension(const Eigen::ArrayXd& times, const Eigen::ArrayXd& vals,
                                   const Eigen::ArrayXd& slopes, double t) {
    const Eigen::Index n = times.size();
    if (n == 1) return vals[0] + slopes[0] * (t - times[0]);
    if (t <= times[0]) return vals[0] + slopes[0] * (t - times[0]);
    if (t >= times[n - 1]) return vals[n - 1] + slopes[n - 1] * (t - times[n - 1]);
    Eigen::Index hi = 1;
    while (times[hi] < t) ++hi;
    const double a = (t - times[hi - 1]) / (times[hi] - times[hi - 1]);
    return (1.0 - a) * vals[hi - 1] + a * vals[hi];
}

double interp_clamped(const Eigen::ArrayXd& times, const Eigen::ArrayXd& vals, double t) {
    const Eigen::Index n = times.size();
    if (n == 1 || t <= times[0]) return vals[0];
    if (t >= times[n - 1]) return vals[n - 1];
    Eigen::Index hi = 1;
    while (times[hi] < t) ++hi;
    const double a = (t - times[hi - 1]) / (times[hi] - times[hi - 1]);
    return (1.0 - a) * vals[hi - 1] + a * vals[hi];
}

// Sub-bin peak refinement: log-parabolic interpolation along one axis.
double parabolic_offset(double lm, double lc, double lp) {
    const double den = lm - 2.0 * lc + lp;
    if (den >= -1e-300) return 0.0;  // not a strict local max in log domain
    double d = 0.5 * (lm - lp) / den;
    return std::clamp(d, -0.5, 0.5);
}

struct Path {
    std::vector<int> kbin;
    std::vector<int> bbin;
    std::vector<double> score_mag;
};

// Smoothness-penalized maximum path. The transition cost is kinematic: the
// frequency step between frames must match the step the chirp-rate bin
// predicts (expected_step, in bins per frame), so a path carrying a large
// positive rate is forced to keep climbing. This is what preserves mode
// identity through crossings: flipping onto the other branch would need an
// instantaneous chirp-rate reversal, which the cr_jump limit forbids.
Path best_path(const std::vector<Eigen::MatrixXd>& logmag, const Eigen::ArrayXd& expected_step,
               int freq_jump, int cr_jump, double mu, double nu) {
    const auto nf = static_cast<Eigen::Index>(logmag.size());
    const Eigen::Index nk = logmag[0].rows();
    const Eigen::Index nb = logmag[0].cols();
    std::vector<Eigen::MatrixXd> acc(nf);
    std::vector<Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>> parent(nf);
    acc[0] = logmag[0];
    for (Eigen::Index f = 1; f < nf; ++f) {
        acc[f].resize(nk, nb);
        parent[f].resize(nk, nb);
        for (Eigen::Index k = 0; k < nk; ++k) {
            for (Eigen::Index b = 0; b < nb; ++b) {
                double best = -std::numeric_limits<double>::infinity();
                int best_prev = -1;
                const Eigen::Index klo = std::max<Eigen::Index>(0, k - freq_jump);
                const Eigen::Index khi = std::min<Eigen::Index>(nk - 1, k + freq_jump);
                const Eigen::Index blo = std::max<Eigen::Index>(0, b - cr_jump);
                const Eigen::Index bhi = std::min<Eigen::Index>(nb - 1, b + cr_jump);
                for (Eigen::Index pb = blo; pb <= bhi; ++pb) {
                    const double db = static_cast<double>(pb - b);
                    // Trapezoidal prediction of the step from frame f-1 to f.
                    const double pred = 0.5 * (expected_step[pb] + expected_step[b]);
                    for (Eigen::Index pk = klo; pk <= khi; ++pk) {
                        const double dev = static_cast<double>(k - pk) - pred;
                        const double cand =
                            acc[f - 1](pk, pb) - mu * (dev * dev + nu * db * db);
                        if (cand > best) {
                            best = cand;
                            best_prev = static_cast<int>(pk * nb + pb);
                        }
                    }
                }
                acc[f](k, b) = logmag[f](k, b) + best;
                parent[f](k, b) = best_prev;
            }
        }
    }

    // Ties resolve to the lowest frequency bin, then lowest chirp-rate bin.
    Eigen::Index bk = 0, bb = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < nk; ++k)
        for (Eigen::Index b = 0; b < nb; ++b)
            if (acc[nf - 1](k, b) > best) {
                best = acc[nf - 1](k, b);
                bk = k;
                bb = b;
            }

    Path path;
    path.kbin.resize(nf);
    path.bbin.resize(nf);
    path.kbin[nf - 1] = static_cast<int>(bk);
    path.bbin[nf - 1] = static_cast<int>(bb);
    for (Eigen::Index f = nf - 1; f > 0; --f) {
        const int p = parent[f](path.kbin[f], path.bbin[f]);
        path.kbin[f - 1] = p / static_cast<int>(nb);
        path.bbin[f - 1] = p % static_cast<int>(nb);
    }
    return path;
}

}  // namespace

double RidgeCurve::if_at(double t) const {
    return interp_with_slope_extension(frame_times, if_hz, cr_hzps, t);
}

double RidgeCurve::cr_at(double t) const { return interp_clamped(frame_times, cr_hzps, t); }

std::vector<RidgeCurve> detect_ridges(const TFCRepresentation& tfc, int k, double jump_limit_hz,
                                      double peel_band_hz) {
    RidgeDetectOptions opt;
    opt.jump_limit_hz = jump_limit_hz;
    opt.peel_band_hz = peel_band_hz;
    return detect_ridges(tfc, k, opt);
}

std::vector<RidgeCurve> detect_ridges(const TFCRepresentation& tfc, int k,
                                      const RidgeDetectOptions& opt) {
    tfc.validate();
    if (k < 1) throw std::invalid_argument("detect_ridges: k must be >= 1");
    const Eigen::Index nf = tfc.n_frames();
    const Eigen::Index nk = tfc.n_freq();
    const Eigen::Index nb = tfc.n_cr();
    const double bin_hz = nk > 1 ? tfc.freq_axis[1] - tfc.freq_axis[0] : 1.0;
    const double bin_cr = nb > 1 ? tfc.cr_axis[1] - tfc.cr_axis[0] : 1.0;

    std::vector<Eigen::MatrixXd> mag(nf);
    double gmax = 0.0;
    for (Eigen::Index f = 0; f < nf; ++f) {
        mag[f] = tfc.frames[f].cwiseAbs();
        gmax = std::max(gmax, mag[f].maxCoeff());
    }
    if (gmax <= 0.0)
        throw std::invalid_argument("detect_ridges: degenerate all-zero tensor");

    // Tensor-wide magnitude median, the reference noise floor for peeled passes.
    std::vector<double> all;
    all.reserve(static_cast<size_t>(nf * nk * nb));
    for (const auto& m : mag)
        all.insert(all.end(), m.data(), m.data() + m.size());
    std::nth_element(all.begin(), all.begin() + all.size() / 2, all.end());
    const double tensor_median = all[all.size() / 2];

    const int freq_jump =
        opt.jump_limit_hz > 0.0
            ? std::max(1, static_cast<int>(std::ceil(opt.jump_limit_hz / bin_hz)))
            : 3;
    const int cr_jump = std::max(1, opt.cr_jump_bins);
    const int peel_k =
        opt.peel_band_hz > 0.0
            ? std::max(1, static_cast<int>(std::ceil(opt.peel_band_hz / bin_hz)))
            : 3;
    // A peeled ridge must disappear across its whole chirp-rate visibility
    // width, or the next pass re-traces it at a neighbouring rate bin.
    int peel_b = opt.cr_peel_bins;
    if (peel_b <= 0) {
        if (tfc.window_param_alpha > 0.0) {
            const double beta_half =
                std::sqrt(15.0) / (2.0 * kPiRidge * tfc.window_param_alpha);
            peel_b = static_cast<int>(std::ceil(beta_half / bin_cr));
        } else {
            peel_b = 1;
        }
    }

    // Log-magnitude scores are scale invariant up to a per-frame constant, and
    // mu is derived from the peak-over-median log contrast for the same
    // reason. Structure below -60 dB of the peak is flattened so that the
    // contrast (and with it the jump penalty) measures ridge versus
    // background, not the numerical noise floor of a clean signal.
    const double floor_val = 1e-3 * gmax;
    std::vector<Eigen::MatrixXd> logmag(nf);
    Eigen::ArrayXd contrast(nf);
    for (Eigen::Index f = 0; f < nf; ++f) {
        logmag[f] = mag[f].cwiseMax(floor_val).array().log().matrix();
        std::vector<double> v(logmag[f].data(), logmag[f].data() + logmag[f].size());
        std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
        contrast[f] = logmag[f].maxCoeff() - v[v.size() / 2];
    }
    std::vector<double> cvec(contrast.data(), contrast.data() + contrast.size());
    std::nth_element(cvec.begin(), cvec.begin() + cvec.size() / 2, cvec.end());
    const double mu = std::max(1e-12, opt.mu_scale * cvec[cvec.size() / 2]);

    // Frequency step (in bins per frame) that each chirp-rate bin predicts.
    const double hop_s = nf > 1 ? tfc.time_axis[1] - tfc.time_axis[0] : 0.0;
    const Eigen::ArrayXd expected_step = tfc.cr_axis * (hop_s / bin_hz);

    std::vector<RidgeCurve> curves;
    for (int ridge = 0; ridge < k; ++ridge) {
        const Path path = best_path(logmag, expected_step, freq_jump, cr_jump, mu, opt.nu);

        RidgeCurve c;
        c.frame_times = tfc.time_axis;
        c.if_hz.resize(nf);
        c.cr_hzps.resize(nf);
        c.energy.resize(nf);
        c.freq_bin_width = bin_hz;
        c.cr_bin_width = bin_cr;
        c.freq_max = tfc.freq_axis[nk - 1];
        c.duration = tfc.duration;
        for (Eigen::Index f = 0; f < nf; ++f) {
            const int kb = path.kbin[f];
            const int bb = path.bbin[f];
            c.energy[f] = mag[f](kb, bb);
            double dk = 0.0, db = 0.0;
            if (kb > 0 && kb < nk - 1)
                dk = parabolic_offset(logmag[f](kb - 1, bb), logmag[f](kb, bb),
                                      logmag[f](kb + 1, bb));
            if (bb > 0 && bb < nb - 1)
                db = parabolic_offset(logmag[f](kb, bb - 1), logmag[f](kb, bb),
                                      logmag[f](kb, bb + 1));
            c.if_hz[f] = tfc.freq_axis[kb] + dk * bin_hz;
            c.cr_hzps[f] = tfc.cr_axis[bb] + db * bin_cr;
        }

        std::vector<double> e(c.energy.data(), c.energy.data() + nf);
        std::nth_element(e.begin(), e.begin() + e.size() / 2, e.end());
        if (e[e.size() / 2] < opt.floor_factor * tensor_median) {
            std::ostringstream os;
            os << "detect_ridges: requested " << k << " ridges but only " << ridge
               << " rise above the noise floor";
            throw RidgeShortfall(os.str(), ridge);
        }
        curves.push_back(std::move(c));

        if (ridge + 1 == k) break;
        // Peel: zero a small neighborhood of the extracted path in each frame.
        for (Eigen::Index f = 0; f < nf; ++f) {
            const int kb = path.kbin[f];
            const int bb = path.bbin[f];
            for (int dk2 = -peel_k; dk2 <= peel_k; ++dk2) {
                const int kk = kb + dk2;
                if (kk < 0 || kk >= nk) continue;
                for (int db2 = -peel_b; db2 <= peel_b; ++db2) {
                    const int bbq = bb + db2;
                    if (bbq < 0 || bbq >= nb) continue;
                    mag[f](kk, bbq) = 0.0;
                    logmag[f](kk, bbq) = std::log(floor_val);
                }
            }
        }
    }
    return curves;
}

RidgeCurve refine_cr_from_if(const RidgeCurve& curve, Eigen::Index smoothing_window) {
    const Eigen::Index nf = curve.n_frames();
    if (nf == 0) throw std::invalid_argument("refine_cr_from_if: empty curve");
    if (nf == 1) return curve;

    Eigen::ArrayXd deriv(nf);
    for (Eigen::Index f = 0; f < nf; ++f) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, f - 1);
        const Eigen::Index hi = std::min<Eigen::Index>(nf - 1, f + 1);
        deriv[f] = (curve.if_hz[hi] - curve.if_hz[lo]) / (curve.frame_times[hi] - curve.frame_times[lo]);
    }
    // Box smoothing of the finite-difference track.
    const Eigen::Index half = std::max<Eigen::Index>(0, smoothing_window / 2);
    Eigen::ArrayXd smooth(nf);
    for (Eigen::Index f = 0; f < nf; ++f) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, f - half);
        const Eigen::Index hi = std::min<Eigen::Index>(nf - 1, f + half);
        smooth[f] = deriv.segment(lo, hi - lo + 1).mean();
    }

    const double tol = 2.0 * std::abs(curve.cr_bin_width);
    Eigen::Index disagree = 0;
    for (Eigen::Index f = 0; f < nf; ++f)
        if (std::abs(curve.cr_hzps[f] - smooth[f]) > tol) ++disagree;

    if (disagree == 0) return curve;
    RidgeCurve out = curve;
    if (static_cast<double>(disagree) > 0.2 * static_cast<double>(nf)) {
        out.cr_hzps = smooth;  // wholesale replacement
    } else {
        for (Eigen::Index f = 0; f < nf; ++f)
            if (std::abs(curve.cr_hzps[f] - smooth[f]) > tol) out.cr_hzps[f] = smooth[f];
    }
    return out;
}

}  // namespace srmd
