#include "srmd/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "srmd/noise.hpp"
#include "srmd/rng.hpp"

namespace srmd {

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

DecompositionResult decompose_3d(const Signal& signal, const DecompositionConfig& config) {
    signal.validate();
    if (config.n_modes < 1) throw std::invalid_argument("decompose_3d: n_modes must be >= 1");
    if (config.n_features < 1)
        throw std::invalid_argument("decompose_3d: n_features must be >= 1");

    const auto t_start = std::chrono::steady_clock::now();
    const Eigen::Index m = signal.samples.size();
    const double fs = signal.sample_rate;
    const double duration = signal.duration();

    DecompositionResult out;
    out.alpha = config.alpha > 0.0 ? config.alpha : (duration / 80.0) * (duration / 80.0);
    out.lambda = config.lambda > 0.0 ? config.lambda : fs / 100.0;

    const STFTGrid grid = STFTGrid::from_alpha(out.alpha, fs);
    grid.validate(m);
    const Eigen::ArrayXd cr_axis = default_cr_axis(fs, duration, config.cr_max, config.cr_bins);
    const TFCRepresentation tfc = chirplet_transform(signal, grid, cr_axis);
    out.timings.transform_s = seconds_since(t_start);

    // Per-frame jump limits sized to the analyzed chirp rates: a ridge may
    // legitimately move |beta| * hop in frequency between adjacent frames.
    const auto t_ridge = std::chrono::steady_clock::now();
    const double bin_hz = fs / static_cast<double>(grid.window_len);
    const double hop_s = static_cast<double>(grid.hop) / fs;
    RidgeDetectOptions ropt;
    ropt.jump_limit_hz = config.freq_jump_hz > 0.0
                             ? config.freq_jump_hz
                             : std::max(3.0 * bin_hz,
                                        cr_axis.abs().maxCoeff() * hop_s + 2.0 * bin_hz);
    ropt.cr_jump_bins = config.cr_jump_bins > 0
                            ? config.cr_jump_bins
                            : std::max(2, static_cast<int>(cr_axis.size() / 8));
    std::vector<RidgeCurve> ridges = detect_ridges(tfc, config.n_modes, ropt);
    out.ridges.reserve(ridges.size());
    for (const RidgeCurve& r : ridges) out.ridges.push_back(refine_cr_from_if(r));
    out.timings.ridge_s = seconds_since(t_ridge);

    const auto t_dict = std::chrono::steady_clock::now();
    std::vector<std::vector<FeatureAtom>> groups;
    groups.reserve(out.ridges.size());
    // Atom centers reach one window support past the edges so the first and
    // last samples are covered by whole windows, not clipped halves.
    const double tau_pad = 3.0 * std::sqrt(out.alpha);
    for (int k = 0; k < config.n_modes; ++k) {
        ConcentratedSample sample =
            sample_concentrated_3d(out.ridges[static_cast<size_t>(k)], config.n_features,
                                   out.lambda, derive_seed(config.seed, 1 + k), k + 1, tau_pad);
        groups.push_back(std::move(sample.atoms));
    }
    auto [dict, psi] = build_dictionary(groups, signal.time_grid(), out.alpha);
    out.dictionary = std::move(dict);
    out.timings.dictionary_s = seconds_since(t_dict);

    double sigma = config.sigma_override;
    if (sigma < 0.0) {
        const NoiseEstimate est = estimate_noise(signal, out.alpha);
        sigma = std::sqrt(std::max(est.sigma2, 0.0));
    }
    const double rms = std::sqrt(signal.samples.square().mean());
    sigma = std::max(sigma, 1e-5 * rms);  // keep the residual target nonzero
    out.sigma = sigma;

    const auto t_solve = std::chrono::steady_clock::now();
    BpdnProblem problem{LinearOperator::from_matrix(psi), signal.samples.matrix(),
                        std::sqrt(static_cast<double>(m)) * sigma};
    BpdnOptions bopt;
    bopt.max_iter = config.max_iter;
    bopt.trace = config.trace;
    out.solution = solve_bpdn(problem, bopt);
    out.coefficients = out.solution.coefficients;

    // Debias: refit the surviving atoms by damped least squares. The l1 bound
    // shrinks every coefficient toward zero and the projected-gradient tail
    // converges slowly on coherent columns; refitting removes both at the
    // cost of one small dense solve. Damping toward the sparse solution
    // pins the split between nearly collinear atoms of different modes,
    // which an unregularized refit would redistribute arbitrarily.
    const double cmax = out.coefficients.size() > 0 ? out.coefficients.cwiseAbs().maxCoeff() : 0.0;
    if (config.debias && cmax > 0.0) {
        std::vector<Eigen::Index> support;
        for (Eigen::Index j = 0; j < out.coefficients.size(); ++j)
            if (std::abs(out.coefficients[j]) > 1e-3 * cmax) support.push_back(j);
        constexpr Eigen::Index kSupportCap = 2500;
        if (static_cast<Eigen::Index>(support.size()) > kSupportCap) {
            std::nth_element(support.begin(), support.begin() + kSupportCap, support.end(),
                             [&](Eigen::Index a, Eigen::Index b) {
                                 return std::abs(out.coefficients[a]) >
                                        std::abs(out.coefficients[b]);
                             });
            support.resize(kSupportCap);
            std::sort(support.begin(), support.end());
        }
        const auto s = static_cast<Eigen::Index>(support.size());
        Eigen::MatrixXd sub(m, s);
        Eigen::VectorXd prior(s);
        for (Eigen::Index j = 0; j < s; ++j) {
            sub.col(j) = psi.col(support[static_cast<size_t>(j)]);
            prior[j] = out.coefficients[support[static_cast<size_t>(j)]];
        }
        const double damping =
            config.debias_damping * sub.squaredNorm() / static_cast<double>(s);
        Eigen::MatrixXd gram = sub.transpose() * sub;
        gram.diagonal().array() += damping;
        const Eigen::VectorXd refit = Eigen::LLT<Eigen::MatrixXd>(gram).solve(
            sub.transpose() * signal.samples.matrix() + damping * prior);
        out.coefficients.setZero();
        for (Eigen::Index j = 0; j < s; ++j)
            out.coefficients[support[static_cast<size_t>(j)]] = refit[j];
    }
    out.timings.solve_s = seconds_since(t_solve);

    out.modes.reserve(static_cast<size_t>(config.n_modes));
    for (Eigen::Index g = 0; g < out.dictionary.n_groups(); ++g) {
        const Eigen::Index off = out.dictionary.group_offsets[static_cast<size_t>(g)];
        const Eigen::Index len =
            out.dictionary.group_offsets[static_cast<size_t>(g) + 1] - off;
        Eigen::VectorXd mode = psi.middleCols(off, len) * out.coefficients.segment(off, len);
        out.modes.push_back(Signal{mode.array(), fs, signal.start_time});
    }
    out.timings.total_s = seconds_since(t_start);
    return out;
}

std::vector<ModeMatch> match_modes(const std::vector<Signal>& reference,
                                   const std::vector<Signal>& recovered) {
    const int k = static_cast<int>(reference.size());
    const int r = static_cast<int>(recovered.size());
    std::vector<ModeMatch> best(static_cast<size_t>(k));
    if (k == 0) return best;

    Eigen::MatrixXd score(k, r);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < r; ++j)
            score(i, j) =
                snr_db(reference[static_cast<size_t>(i)], recovered[static_cast<size_t>(j)]);

    // Exhaustive injective assignment; "silence" (index -1, 0 dB) is always
    // available, so recovered modes worse than silence stay unassigned.
    std::vector<int> current(static_cast<size_t>(k), -1);
    double best_total = -std::numeric_limits<double>::infinity();
    std::vector<bool> used(static_cast<size_t>(r), false);

    auto recurse = [&](auto&& self, int i, double total) -> void {
        if (i == k) {
            if (total > best_total) {
                best_total = total;
                for (int q = 0; q < k; ++q) {
                    const int j = current[static_cast<size_t>(q)];
                    best[static_cast<size_t>(q)] = {j, j < 0 ? 0.0 : score(q, j)};
                }
            }
            return;
        }
        current[static_cast<size_t>(i)] = -1;
        self(self, i + 1, total);  // match against silence: 0 dB
        for (int j = 0; j < r; ++j) {
            if (used[static_cast<size_t>(j)]) continue;
            used[static_cast<size_t>(j)] = true;
            current[static_cast<size_t>(i)] = j;
            self(self, i + 1, total + score(i, j));
            used[static_cast<size_t>(j)] = false;
        }
        current[static_cast<size_t>(i)] = -1;
    };
    recurse(recurse, 0, 0.0);
    return best;
}

std::vector<BenchmarkRow> benchmark_snr_sweep(const ModeSet& reference,
                                              const std::vector<double>& input_snr_db,
                                              int trials, const DecompositionConfig& config_3d,
                                              const SrmdConfig& config_2d, std::uint64_t seed) {
    if (reference.modes.empty())
        throw std::invalid_argument("benchmark_snr_sweep: reference has no modes");
    if (trials < 1) throw std::invalid_argument("benchmark_snr_sweep: trials must be >= 1");
    for (const Signal& mode : reference.modes) {
        mode.validate();
        if (mode.samples.size() != reference.modes.front().samples.size() ||
            mode.sample_rate != reference.modes.front().sample_rate)
            throw std::invalid_argument("benchmark_snr_sweep: reference modes disagree on grid");
    }

    Signal mixture = reference.modes.front();
    for (size_t i = 1; i < reference.modes.size(); ++i)
        mixture.samples += reference.modes[i].samples;

    std::vector<BenchmarkRow> rows;
    auto run_method = [&](const std::string& method, const Signal& noisy, double level, int trial,
                          std::uint64_t run_seed) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<Signal> modes;
        bool converged = false;
        try {
            if (method == "3dsrmd") {
                DecompositionConfig cfg = config_3d;
                cfg.n_modes = static_cast<int>(reference.modes.size());
                cfg.seed = run_seed;
                DecompositionResult res = decompose_3d(noisy, cfg);
                modes = std::move(res.modes);
                converged = res.solution.converged;
            } else {
                SrmdConfig cfg = config_2d;
                cfg.seed = run_seed;
                SrmdResult res = srmd_decompose(noisy, cfg);
                modes = std::move(res.modes);
                converged = res.solution.converged;
            }
        } catch (const std::exception&) {
            modes.clear();  // scored as silence below
        }
        const double runtime = seconds_since(t0);
        const std::vector<ModeMatch> matches = match_modes(reference.modes, modes);
        for (size_t i = 0; i < matches.size(); ++i)
            rows.push_back({level, method, trial, static_cast<int>(i), matches[i].snr_db,
                            runtime, converged});
    };

    for (size_t li = 0; li < input_snr_db.size(); ++li) {
        const std::uint64_t level_seed = derive_seed(seed, 101 + li);
        for (int trial = 0; trial < trials; ++trial) {
            const std::uint64_t noise_seed = derive_seed(level_seed, 1 + static_cast<std::uint64_t>(trial));
            auto [noisy, variance] = add_white_noise(mixture, input_snr_db[li], noise_seed);
            (void)variance;
            run_method("3dsrmd", noisy, input_snr_db[li], trial, derive_seed(noise_seed, 3));
            run_method("srmd", noisy, input_snr_db[li], trial, derive_seed(noise_seed, 2));
        }
    }
    return rows;
}

std::vector<ComplexityPoint> complexity_probe(const std::vector<Eigen::Index>& dictionary_cols,
                                              Eigen::Index signal_len, int iterations,
                                              std::uint64_t seed) {
    if (signal_len < 16) throw std::invalid_argument("complexity_probe: signal too short");
    if (iterations < 1) throw std::invalid_argument("complexity_probe: iterations must be >= 1");

    const double fs = static_cast<double>(signal_len);  // 1 s of signal
    Rng rng(derive_seed(seed, 42));
    Eigen::ArrayXd target(signal_len);
    for (Eigen::Index i = 0; i < signal_len; ++i) target[i] = rng.normal();
    const Signal probe{target, fs, 0.0};

    std::vector<ComplexityPoint> points;
    for (Eigen::Index cols : dictionary_cols) {
        std::vector<FeatureAtom> atoms =
            sample_uniform_2d(cols, probe.duration(), fs / 2.0, derive_seed(seed, 7));
        auto [dict, psi] = build_dictionary({std::move(atoms)}, probe.time_grid(),
                                            (probe.duration() / 80.0) * (probe.duration() / 80.0));
        const LinearOperator op = LinearOperator::from_matrix(psi);

        LassoOptions opt;
        opt.max_iter = iterations;
        opt.tol_gap = 0.0;  // run the full budget; we are timing, not solving
        const auto t0 = std::chrono::steady_clock::now();
        SparseSolution sol =
            solve_lasso(op, probe.samples.matrix(), 10.0, Eigen::VectorXd::Zero(cols), opt);
        const double elapsed = seconds_since(t0);
        points.push_back(
            {signal_len, cols, sol.iterations, elapsed / std::max(1, sol.iterations)});
    }
    return points;
}

}  // namespace srmd
