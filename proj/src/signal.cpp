#include "srmd/signal.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "srmd/rng.hpp"

namespace srmd {

namespace {
constexpr double kPi = std::numbers::pi;

double max_if_over(const ModeSpec& spec, double duration) {
    // Dense scan; the generators here all have smooth IFs.
    const int n = 4096;
    double best = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double f = spec.if_fn(duration * i / n);
        if (f > best) best = f;
    }
    return best;
}
}  // namespace

void Signal::validate() const {
    if (sample_rate <= 0.0) throw std::invalid_argument("Signal: sample_rate must be positive");
    if (samples.size() == 0) throw std::invalid_argument("Signal: samples must be non-empty");
    if (!samples.allFinite()) throw std::invalid_argument("Signal: samples must be finite");
}

Signal synth_mode(const ModeSpec& spec, Eigen::Index m, double fs) {
    if (m <= 0) throw std::invalid_argument("synth_mode: m must be positive");
    if (fs <= 0.0) throw std::invalid_argument("synth_mode: fs must be positive");
    const double duration = static_cast<double>(m) / fs;
    const double fmax = max_if_over(spec, duration);
    if (fs <= 2.0 * fmax) {
        std::ostringstream os;
        os << "synth_mode: Nyquist violation, max IF " << fmax << " Hz requires fs > "
           << 2.0 * fmax << " Hz (got " << fs << ")";
        throw std::invalid_argument(os.str());
    }
    Signal out;
    out.sample_rate = fs;
    out.samples.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double t = static_cast<double>(i) / fs;
        out.samples[i] = spec.amplitude_fn(t) * std::cos(spec.phase_fn(t));
    }
    return out;
}

std::vector<ModeSpec> paper_mode_specs() {
    // m_k(t) = cos(2*pi*(250 t -/+ (200/(7*pi)) sin(7*pi*t))), k = 1, 2.
    auto make = [](double sgn, std::string label) {
        ModeSpec s;
        s.amplitude_fn = [](double) { return 1.0; };
        s.phase_fn = [sgn](double t) {
            return 2.0 * kPi * (250.0 * t + sgn * (200.0 / (7.0 * kPi)) * std::sin(7.0 * kPi * t));
        };
        s.if_fn = [sgn](double t) { return 250.0 + sgn * 200.0 * std::cos(7.0 * kPi * t); };
        s.cr_fn = [sgn](double t) { return -sgn * 1400.0 * kPi * std::sin(7.0 * kPi * t); };
        s.label = std::move(label);
        return s;
    };
    return {make(-1.0, "m1"), make(+1.0, "m2")};
}

std::vector<ModeSpec> crossover_mode_specs() {
    // s1 = cos(2*pi*(400t - 100t^2)), s2 = cos(2*pi*(200t + 100t^2)).
    auto make = [](double f0, double half_cr, std::string label) {
        ModeSpec s;
        s.amplitude_fn = [](double) { return 1.0; };
        s.phase_fn = [f0, half_cr](double t) { return 2.0 * kPi * (f0 * t + half_cr * t * t); };
        s.if_fn = [f0, half_cr](double t) { return f0 + 2.0 * half_cr * t; };
        s.cr_fn = [half_cr](double) { return 2.0 * half_cr; };
        s.label = std::move(label);
        return s;
    };
    return {make(400.0, -100.0, "s1"), make(200.0, +100.0, "s2")};
}

std::vector<ModeSpec> tone_mode_specs(const std::vector<double>& freqs_hz) {
    std::vector<ModeSpec> specs;
    specs.reserve(freqs_hz.size());
    int idx = 1;
    for (double f : freqs_hz) {
        ModeSpec s;
        s.amplitude_fn = [](double) { return 1.0; };
        s.phase_fn = [f](double t) { return 2.0 * kPi * f * t; };
        s.if_fn = [f](double) { return f; };
        s.cr_fn = [](double) { return 0.0; };
        s.label = "tone" + std::to_string(idx++);
        specs.push_back(std::move(s));
    }
    return specs;
}

namespace {
std::pair<Signal, ModeSet> synth_mixture(const std::vector<ModeSpec>& specs, double fs,
                                         double duration) {
    const auto m = static_cast<Eigen::Index>(std::llround(fs * duration));
    ModeSet set;
    Signal sum;
    sum.sample_rate = fs;
    sum.samples = Eigen::ArrayXd::Zero(m);
    for (const auto& spec : specs) {
        Signal mode = synth_mode(spec, m, fs);
        sum.samples += mode.samples;
        set.labels.push_back(spec.label);
        set.modes.push_back(std::move(mode));
    }
    return {std::move(sum), std::move(set)};
}
}  // namespace

std::pair<Signal, ModeSet> paper_simulated_signal(double fs, double duration) {
    return synth_mixture(paper_mode_specs(), fs, duration);
}

std::pair<Signal, ModeSet> crossover_chirp_pair(double fs, double duration) {
    return synth_mixture(crossover_mode_specs(), fs, duration);
}

std::pair<Signal, ModeSet> parallel_tones(const std::vector<double>& freqs_hz, double fs,
                                          double duration) {
    return synth_mixture(tone_mode_specs(freqs_hz), fs, duration);
}

std::pair<Signal, double> add_white_noise(const Signal& x, double snr_db_req, std::uint64_t seed) {
    x.validate();
    if (std::isinf(snr_db_req) && snr_db_req > 0) return {x, 0.0};
    const double ex = x.energy();
    if (ex <= 0.0) throw std::invalid_argument("add_white_noise: zero-energy input");
    Rng rng(seed);
    Eigen::ArrayXd e(x.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = rng.normal();
    const double ee = e.square().sum();
    if (ee <= 0.0) throw std::runtime_error("add_white_noise: degenerate noise draw");
    // Scale so 10*log10(|x|^2/|e|^2) equals the request exactly.
    const double scale = std::sqrt(ex / ee) * std::pow(10.0, -snr_db_req / 20.0);
    e *= scale;
    Signal y = x;
    y.samples += e;
    return {std::move(y), e.square().sum() / static_cast<double>(e.size())};
}

double snr_db(const Eigen::ArrayXd& reference, const Eigen::ArrayXd& estimate) {
    if (reference.size() != estimate.size())
        throw std::invalid_argument("snr_db: length mismatch");
    const double num = std::sqrt(reference.square().sum());
    const double den = std::sqrt((reference - estimate).square().sum());
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(num / den);
}

double snr_db(const Signal& reference, const Signal& estimate) {
    if (reference.sample_rate != estimate.sample_rate)
        throw std::invalid_argument("snr_db: sample rate mismatch");
    return snr_db(reference.samples, estimate.samples);
}

}  // namespace srmd
