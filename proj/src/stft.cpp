#include "srmd/stft.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace srmd {

namespace {
constexpr double kPi = std::numbers::pi;
using Cplx = std::complex<double>;

Eigen::Index frame_count(Eigen::Index m, Eigen::Index hop) {
    return (m - 1) / hop + 1;
}

// DFT matrix rows k = 0..freq_bins-1, columns u = -h..h (window-relative time).
Eigen::MatrixXcd dft_matrix(const STFTGrid& grid) {
    const Eigen::Index w = grid.window_len;
    const Eigen::Index h = grid.half();
    Eigen::MatrixXcd dft(grid.freq_bins, w);
    for (Eigen::Index k = 0; k < grid.freq_bins; ++k)
        for (Eigen::Index j = 0; j < w; ++j) {
            const double ang = -2.0 * kPi * static_cast<double>(k) *
                               static_cast<double>(j - h) / static_cast<double>(w);
            dft(k, j) = Cplx(std::cos(ang), std::sin(ang));
        }
    return dft;
}

// Absolute-time phase factor exp(-j 2 pi k n_c / w) for a frame centered at n_c.
Eigen::VectorXcd frame_twist(const STFTGrid& grid, Eigen::Index center, double sign) {
    Eigen::VectorXcd tw(grid.freq_bins);
    for (Eigen::Index k = 0; k < grid.freq_bins; ++k) {
        const double ang = sign * 2.0 * kPi * static_cast<double>(k) *
                           static_cast<double>(center) / static_cast<double>(grid.window_len);
        tw[k] = Cplx(std::cos(ang), std::sin(ang));
    }
    return tw;
}

// Windowed segment around n_c; samples outside the signal contribute zero.
Eigen::VectorXd windowed_segment(const Eigen::ArrayXd& x, const Eigen::ArrayXd& win,
                                 Eigen::Index center) {
    const Eigen::Index w = win.size();
    const Eigen::Index h = (w - 1) / 2;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(w);
    const Eigen::Index lo = std::max<Eigen::Index>(0, center - h);
    const Eigen::Index hi = std::min<Eigen::Index>(x.size() - 1, center + h);
    for (Eigen::Index n = lo; n <= hi; ++n) z[n - center + h] = win[n - center + h] * x[n];
    return z;
}
}  // namespace

STFTGrid STFTGrid::from_alpha(double alpha, double fs, Eigen::Index hop_divisor) {
    if (alpha <= 0.0) throw std::invalid_argument("STFTGrid: alpha must be positive");
    if (fs <= 0.0) throw std::invalid_argument("STFTGrid: fs must be positive");
    STFTGrid g;
    g.window_param_alpha = alpha;
    const auto half = static_cast<Eigen::Index>(std::llround(3.0 * std::sqrt(alpha) * fs));
    g.window_len = 2 * std::max<Eigen::Index>(half, 1) + 1;
    g.hop = std::max<Eigen::Index>(1, g.window_len / std::max<Eigen::Index>(1, hop_divisor));
    g.freq_bins = (g.window_len + 1) / 2;
    return g;
}

void STFTGrid::validate(Eigen::Index signal_len) const {
    if (hop < 1) throw std::invalid_argument("STFTGrid: hop must be >= 1");
    if (window_len < 1 || window_len % 2 == 0)
        throw std::invalid_argument("STFTGrid: window_len must be odd and positive");
    if (window_param_alpha <= 0.0) throw std::invalid_argument("STFTGrid: alpha must be positive");
    if (freq_bins != window_len && freq_bins != (window_len + 1) / 2)
        throw std::invalid_argument("STFTGrid: freq_bins must be window_len or (window_len+1)/2");
    if (signal_len >= 0 && window_len > signal_len) {
        std::ostringstream os;
        os << "STFTGrid: window_len " << window_len << " exceeds signal length " << signal_len;
        throw std::invalid_argument(os.str());
    }
}

Eigen::ArrayXd gaussian_window(const STFTGrid& grid, double fs) {
    const Eigen::Index w = grid.window_len;
    const Eigen::Index h = grid.half();
    Eigen::ArrayXd g(w);
    for (Eigen::Index j = 0; j < w; ++j) {
        const double t = static_cast<double>(j - h) / fs;
        g[j] = std::exp(-t * t / (2.0 * grid.window_param_alpha));
    }
    return g / g.sum();
}

StftResult stft(const Signal& x, const STFTGrid& grid) {
    x.validate();
    grid.validate(x.size());
    const Eigen::Index m = x.size();
    const double fs = x.sample_rate;
    const Eigen::ArrayXd win = gaussian_window(grid, fs);
    const Eigen::MatrixXcd dft = dft_matrix(grid);
    const Eigen::Index nf = frame_count(m, grid.hop);

    StftResult out;
    out.sample_rate = fs;
    out.duration = x.duration();
    out.values.resize(grid.freq_bins, nf);
    out.time_axis.resize(nf);
    out.freq_axis = Eigen::ArrayXd::LinSpaced(grid.freq_bins, 0.0,
                                              static_cast<double>(grid.freq_bins - 1)) *
                    (fs / static_cast<double>(grid.window_len));
    for (Eigen::Index f = 0; f < nf; ++f) {
        const Eigen::Index center = f * grid.hop;
        out.time_axis[f] = x.start_time + static_cast<double>(center) / fs;
        const Eigen::VectorXd z = windowed_segment(x.samples, win, center);
        out.values.col(f) = frame_twist(grid, center, -1.0).cwiseProduct(dft * z.cast<Cplx>());
    }
    return out;
}

Signal istft(const StftResult& tf, const STFTGrid& grid) {
    if (tf.values.rows() != grid.freq_bins)
        throw std::invalid_argument("istft: tensor freq_bins does not match grid");
    if (tf.n_frames() < 1) throw std::invalid_argument("istft: empty tensor");
    const double fs = tf.sample_rate;
    const auto m = static_cast<Eigen::Index>(std::llround(tf.duration * fs));
    const Eigen::ArrayXd win = gaussian_window(grid, fs);
    const Eigen::Index w = grid.window_len;
    const Eigen::Index h = grid.half();
    const Eigen::MatrixXcd dft_adj = dft_matrix(grid).adjoint();

    // Real-spectrum synthesis doubles every bin above DC (odd window has no
    // Nyquist bin).
    Eigen::VectorXd mult = Eigen::VectorXd::Constant(grid.freq_bins, 2.0);
    if (!grid.full_spectrum()) mult[0] = 1.0;

    Eigen::ArrayXd num = Eigen::ArrayXd::Zero(m);
    Eigen::ArrayXd den = Eigen::ArrayXd::Zero(m);
    for (Eigen::Index f = 0; f < tf.n_frames(); ++f) {
        const Eigen::Index center = f * grid.hop;
        const Eigen::VectorXcd spec =
            frame_twist(grid, center, +1.0).cwiseProduct(tf.values.col(f));
        Eigen::VectorXd z;
        if (grid.full_spectrum())
            z = (dft_adj * spec).real() / static_cast<double>(w);
        else
            z = (dft_adj * mult.asDiagonal() * spec).real() / static_cast<double>(w);
        const Eigen::Index lo = std::max<Eigen::Index>(0, center - h);
        const Eigen::Index hi = std::min<Eigen::Index>(m - 1, center + h);
        for (Eigen::Index n = lo; n <= hi; ++n) {
            num[n] += win[n - center + h] * z[n - center + h];
            den[n] += win[n - center + h] * win[n - center + h];
        }
    }

    const double den_max = den.maxCoeff();
    const Eigen::Index interior_lo = std::min<Eigen::Index>(w, m - 1);
    const Eigen::Index interior_hi = std::max<Eigen::Index>(m - 1 - w, 0);
    for (Eigen::Index n = interior_lo; n <= interior_hi; ++n) {
        if (den[n] < 1e-8 * den_max) {
            std::ostringstream os;
            os << "istft: overlap-add coverage gap at sample " << n << " (hop " << grid.hop
               << ", window_len " << w << " violate the COLA condition)";
            throw std::invalid_argument(os.str());
        }
    }

    Signal out;
    out.sample_rate = fs;
    out.samples = num / den.max(1e-300);
    return out;
}

Eigen::ArrayXd default_cr_axis(double fs, double duration, double cr_hint, Eigen::Index bins) {
    if (bins < 3) throw std::invalid_argument("default_cr_axis: need at least 3 bins");
    if (bins % 2 == 0) ++bins;  // symmetric around 0
    const double span = cr_hint > 0.0 ? 1.5 * cr_hint : 4.0 * fs / duration;
    return Eigen::ArrayXd::LinSpaced(bins, -span, span);
}

void TFCRepresentation::validate() const {
    if (frames.empty()) throw std::invalid_argument("TFCRepresentation: no frames");
    if (time_axis.size() != n_frames() || freq_axis.size() == 0 || cr_axis.size() == 0)
        throw std::invalid_argument("TFCRepresentation: axis/tensor size mismatch");
    for (const auto& fr : frames)
        if (fr.rows() != n_freq() || fr.cols() != n_cr())
            throw std::invalid_argument("TFCRepresentation: frame shape mismatch");
    auto increasing = [](const Eigen::ArrayXd& a) {
        for (Eigen::Index i = 1; i < a.size(); ++i)
            if (a[i] <= a[i - 1]) return false;
        return true;
    };
    if ((time_axis.size() > 1 && !increasing(time_axis)) || !increasing(freq_axis) ||
        (cr_axis.size() > 1 && !increasing(cr_axis)))
        throw std::invalid_argument("TFCRepresentation: axes must be strictly increasing");
}

TFCRepresentation chirplet_transform(const Signal& x, const STFTGrid& grid,
                                     const Eigen::ArrayXd& cr_axis) {
    x.validate();
    grid.validate(x.size());
    if (cr_axis.size() == 0) throw std::invalid_argument("chirplet_transform: empty cr_axis");
    const Eigen::Index m = x.size();
    const double fs = x.sample_rate;
    const Eigen::ArrayXd win = gaussian_window(grid, fs);
    const Eigen::MatrixXcd dft = dft_matrix(grid);
    const Eigen::Index w = grid.window_len;
    const Eigen::Index h = grid.half();
    const Eigen::Index nb = cr_axis.size();
    const Eigen::Index nf = frame_count(m, grid.hop);

    // Chirp kernels share the window-relative time grid across frames.
    Eigen::MatrixXcd chirp(w, nb);
    for (Eigen::Index b = 0; b < nb; ++b)
        for (Eigen::Index j = 0; j < w; ++j) {
            const double dt = static_cast<double>(j - h) / fs;
            const double ang = -kPi * cr_axis[b] * dt * dt;
            chirp(j, b) = Cplx(std::cos(ang), std::sin(ang));
        }

    TFCRepresentation out;
    out.sample_rate = fs;
    out.duration = x.duration();
    out.window_param_alpha = grid.window_param_alpha;
    out.freq_axis = Eigen::ArrayXd::LinSpaced(grid.freq_bins, 0.0,
                                              static_cast<double>(grid.freq_bins - 1)) *
                    (fs / static_cast<double>(w));
    out.cr_axis = cr_axis;
    out.time_axis.resize(nf);
    out.frames.reserve(nf);
    for (Eigen::Index f = 0; f < nf; ++f) {
        const Eigen::Index center = f * grid.hop;
        out.time_axis[f] = x.start_time + static_cast<double>(center) / fs;
        const Eigen::VectorXd z = windowed_segment(x.samples, win, center);
        Eigen::MatrixXcd frame = dft * (z.cast<Cplx>().asDiagonal() * chirp);
        frame = frame_twist(grid, center, -1.0).asDiagonal() * frame;
        out.frames.push_back(std::move(frame));
    }
    return out;
}

}  // namespace srmd
