// Acceptance gate: one test case per release criterion, each printing a
// single PASS/FAIL line with the measured numbers.  These run the public
// pipeline end to end (several take tens of seconds); the fast unit suite
// lives in the other test binary.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "srmd/baseline.hpp"
#include "srmd/bpdn.hpp"
#include "srmd/pipeline.hpp"
#include "srmd/ridge.hpp"
#include "srmd/rng.hpp"
#include "srmd/signal.hpp"
#include "srmd/stft.hpp"
#include "support/oracles.hpp"

using namespace srmd;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double secs(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

void report(int idx, const char* name, bool pass, const std::string& detail) {
    std::cout << "criterion " << idx << " (" << name << "): " << (pass ? "PASS" : "FAIL")
              << (detail.empty() ? "" : "  [" + detail + "]") << std::endl;
}

double mean_snr(const ModeSet& truth, const std::vector<Signal>& modes) {
    const auto matches = match_modes(truth.modes, modes);
    double s = 0.0;
    for (const auto& m : matches) s += m.snr_db;
    return s / static_cast<double>(matches.size());
}

}  // namespace

TEST_CASE("criterion 1: noise-free recovery of crossing modes at defaults") {
    auto [clean, truth] = paper_simulated_signal();

    DecompositionConfig full;
    full.n_modes = 2;
    full.n_features = 5000;
    full.seed = 11;
    auto t0 = Clock::now();
    const DecompositionResult rf = decompose_3d(clean, full);
    const double t_full = secs(t0, Clock::now());
    const double snr_full = mean_snr(truth, rf.modes);

    DecompositionConfig smoke = full;
    smoke.n_features = 1000;
    t0 = Clock::now();
    const DecompositionResult rs = decompose_3d(clean, smoke);
    const double t_smoke = secs(t0, Clock::now());
    const double snr_smoke = mean_snr(truth, rs.modes);

    SrmdConfig base;
    base.n_features = 5000;
    const SrmdResult rb = srmd_decompose(clean, base);
    const double snr_base = mean_snr(truth, rb.modes);

    const bool pass = snr_full >= 40.0 && t_full <= 600.0 && snr_smoke >= 30.0 &&
                      t_smoke <= 60.0 && snr_base <= 10.0;
    report(1, "noise-free recovery of crossing modes", pass,
           "3d N=5000 " + fmt(snr_full) + " dB in " + fmt(t_full) + " s; smoke N=1000 " +
               fmt(snr_smoke) + " dB in " + fmt(t_smoke) + " s; 2d baseline " + fmt(snr_base) +
               " dB");
    CHECK(pass);
}

TEST_CASE("criterion 2: noise sweep ordering against the 2d baseline") {
    auto [clean, truth] = paper_simulated_signal();
    DecompositionConfig c3d;
    c3d.n_modes = 2;
    c3d.n_features = 1000;
    c3d.max_iter = 500;
    SrmdConfig c2d;
    c2d.n_features = 2000;
    c2d.max_iter = 500;
    c2d.cluster_eps = 0.1;
    const std::vector<double> levels{0.0, 5.0, 10.0, 15.0, 20.0};
    const int trials = 10;
    const auto rows = benchmark_snr_sweep(truth, levels, trials, c3d, c2d, 17);

    // Per level and method, the per-trial mean over modes; then mean and
    // sample std over trials.
    std::map<std::pair<double, std::string>, std::map<int, std::vector<double>>> cell;
    for (const auto& r : rows) cell[{r.input_snr_db, r.method}][r.trial].push_back(r.output_snr_db);
    std::vector<double> m3(levels.size()), s3(levels.size()), m2(levels.size());
    for (size_t li = 0; li < levels.size(); ++li) {
        for (const char* method : {"3dsrmd", "srmd"}) {
            std::vector<double> per_trial;
            for (auto& [trial, v] : cell[{levels[li], method}]) {
                double s = 0.0;
                for (double x : v) s += x;
                per_trial.push_back(s / static_cast<double>(v.size()));
            }
            double mu = 0.0;
            for (double x : per_trial) mu += x;
            mu /= static_cast<double>(per_trial.size());
            double var = 0.0;
            for (double x : per_trial) var += (x - mu) * (x - mu);
            const double sd = std::sqrt(var / static_cast<double>(per_trial.size() - 1));
            if (std::string(method) == "3dsrmd") {
                m3[li] = mu;
                s3[li] = sd;
            } else {
                m2[li] = mu;
            }
        }
    }

    bool beats = true;
    for (size_t i = 0; i < levels.size(); ++i) beats = beats && m3[i] > m2[i];
    bool monotone = true;
    for (size_t i = 0; i + 1 < levels.size(); ++i) {
        const double pooled = std::sqrt(0.5 * (s3[i] * s3[i] + s3[i + 1] * s3[i + 1]));
        monotone = monotone && m3[i + 1] >= m3[i] - pooled;
    }

    std::string detail = "3d means";
    for (size_t i = 0; i < levels.size(); ++i) detail += " " + fmt(m3[i]);
    detail += " dB, 2d means";
    for (size_t i = 0; i < levels.size(); ++i) detail += " " + fmt(m2[i]);
    detail += " dB";
    report(2, "noise sweep ordering", beats && monotone, detail);
    CHECK(beats);
    CHECK(monotone);
}

TEST_CASE("criterion 3: ridge curves track crossing chirps with identity") {
    auto [clean, truth] = crossover_chirp_pair();
    // +/-200 Hz/s branches: a longer window and a matched rate axis resolve
    // the chirp rate (the 1 s defaults target much faster modulation).
    const STFTGrid grid = STFTGrid::from_alpha(0.0025, clean.sample_rate);
    const Eigen::ArrayXd cr_axis = Eigen::ArrayXd::LinSpaced(41, -300.0, 300.0);
    const TFCRepresentation tfc = chirplet_transform(clean, grid, cr_axis);
    const auto ridges = detect_ridges(tfc, 2);

    const double fbin = tfc.freq_axis[1] - tfc.freq_axis[0];
    const double cbin = cr_axis[1] - cr_axis[0];
    auto if_a = [](double t) { return 400.0 - 200.0 * t; };
    auto if_b = [](double t) { return 200.0 + 200.0 * t; };

    bool pass = ridges.size() == 2;
    int ids_a = 0, ids_b = 0;
    std::string detail;
    for (const auto& rc : ridges) {
        // Identity from the clearly separated early frames; it must persist
        // through the t=0.5 crossing into the late frames.
        int pre_a = 0, pre_n = 0, post_a = 0, post_n = 0;
        for (Eigen::Index i = 0; i < rc.n_frames(); ++i) {
            const double t = rc.frame_times[i];
            const bool nearer_a = std::abs(rc.if_hz[i] - if_a(t)) < std::abs(rc.if_hz[i] - if_b(t));
            if (t >= 0.1 && t < 0.4) {
                ++pre_n;
                pre_a += nearer_a;
            }
            if (t > 0.6 && t <= 0.9) {
                ++post_n;
                post_a += nearer_a;
            }
        }
        const bool is_a = 2 * pre_a > pre_n;
        (is_a ? ids_a : ids_b) += 1;
        const bool identity_kept = pre_a == (is_a ? pre_n : 0) && post_a == (is_a ? post_n : 0);

        int n = 0, ok_if = 0, ok_cr = 0;
        for (Eigen::Index i = 0; i < rc.n_frames(); ++i) {
            const double t = rc.frame_times[i];
            if (t < 0.1 || t > 0.9) continue;
            ++n;
            const double f_true = is_a ? if_a(t) : if_b(t);
            const double c_true = is_a ? -200.0 : 200.0;
            ok_if += std::abs(rc.if_hz[i] - f_true) <= fbin;
            ok_cr += std::abs(rc.cr_hzps[i] - c_true) <= cbin;
        }
        pass = pass && n > 0 && ok_if >= static_cast<int>(std::ceil(0.95 * n)) &&
               ok_cr >= static_cast<int>(std::ceil(0.95 * n)) && identity_kept;
        detail += std::string(detail.empty() ? "" : "; ") + (is_a ? "falling" : "rising") +
                  " branch if " + std::to_string(ok_if) + "/" + std::to_string(n) + " cr " +
                  std::to_string(ok_cr) + "/" + std::to_string(n) +
                  (identity_kept ? ", identity kept" : ", identity LOST");
    }
    pass = pass && ids_a == 1 && ids_b == 1;
    report(3, "crossing-chirp ridge accuracy", pass, detail);
    CHECK(pass);
}

TEST_CASE("criterion 4: sparse solver matches a coordinate-descent reference") {
    Rng rng(29);
    const int instances = 50;
    int converged = 0;
    double worst_l1 = 0.0, ratio_lo = 1.0, ratio_hi = 1.0;
    for (int inst = 0; inst < instances; ++inst) {
        const int m = 30, n = 100, k = 5;
        Eigen::MatrixXd A(m, n);
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < m; ++i) A(i, j) = rng.normal();
            A.col(j).normalize();
        }
        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
        for (int s = 0; s < k; ++s)
            x0[static_cast<int>(rng.uniform01() * n) % n] =
                (rng.uniform01() < 0.5 ? -1.0 : 1.0) * (0.5 + rng.uniform01());
        Eigen::VectorXd e(m);
        for (int i = 0; i < m; ++i) e[i] = 0.01 * rng.normal();
        const Eigen::VectorXd b = A * x0 + e;
        const double sigma = e.norm();

        BpdnOptions opt;
        opt.max_iter = 20000;
        opt.tol_feas = 1e-6;
        opt.tol_gap = 1e-9;
        const SparseSolution sol =
            solve_bpdn(BpdnProblem{LinearOperator::from_matrix(A), b, sigma}, opt);

        const auto ref = oracle::cd_bpdn(A, b, sigma, 80);
        worst_l1 = std::max(worst_l1, std::abs(sol.coefficients.lpNorm<1>() - ref.x.lpNorm<1>()) /
                                          ref.x.lpNorm<1>());
        if (sol.converged) {
            ++converged;
            ratio_lo = std::min(ratio_lo, sol.residual_norm / sigma);
            ratio_hi = std::max(ratio_hi, sol.residual_norm / sigma);
        }
    }
    const bool pass = converged == instances && worst_l1 <= 1e-4 && ratio_lo >= 1.0 - 1e-4 &&
                      ratio_hi <= 1.0 + 1e-4;
    report(4, "solver oracle equivalence", pass,
           "converged " + std::to_string(converged) + "/" + std::to_string(instances) +
               ", worst l1 rel " + fmt(worst_l1) + ", residual/bound in [" + fmt(ratio_lo) + ", " +
               fmt(ratio_hi) + "]");
    CHECK(pass);
}

TEST_CASE("criterion 5: l1 projection feasibility, optimality and closed forms") {
    Rng rng(31);
    const int instances = 10000, competitors = 1000;
    bool feasible = true, no_op_exact = true, optimal = true;
    for (int inst = 0; inst < instances && (feasible && optimal && no_op_exact); ++inst) {
        const int n = 2 + static_cast<int>(rng.uniform01() * 15.0);
        Eigen::VectorXd v(n);
        for (int j = 0; j < n; ++j) v[j] = 3.0 * rng.normal();
        const double tau = rng.uniform01() * 1.5 * v.lpNorm<1>();
        const Eigen::VectorXd p = project_l1(v, tau);

        if (p.lpNorm<1>() > tau * (1.0 + 1e-9) + 1e-12) feasible = false;
        if (v.lpNorm<1>() <= tau && p != v) no_op_exact = false;

        const double d_proj = (v - p).norm();
        for (int c = 0; c < competitors; ++c) {
            // A feasible competitor: exponential weights normalized onto the
            // simplex, random signs, half on the boundary and half inside.
            double wsum = 0.0;
            Eigen::VectorXd w(n);
            for (int j = 0; j < n; ++j) {
                w[j] = -std::log(rng.uniform01() + 1e-300);
                wsum += w[j];
            }
            const double radius = (c % 2 == 0) ? tau : tau * rng.uniform01();
            double d2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double qj = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * w[j] / wsum * radius;
                d2 += (v[j] - qj) * (v[j] - qj);
            }
            if (std::sqrt(d2) < d_proj - 1e-9) {
                optimal = false;
                break;
            }
        }
    }

    bool closed = true;
    Eigen::VectorXd v2(2), want(2);
    v2 << 3.0, 1.0;
    want << 2.0, 0.0;
    closed = closed && (project_l1(v2, 2.0) - want).lpNorm<Eigen::Infinity>() <= 1e-14;
    v2 << 1.0, 1.0;
    want << 0.5, 0.5;
    closed = closed && (project_l1(v2, 1.0) - want).lpNorm<Eigen::Infinity>() <= 1e-14;
    v2 << -3.0, 1.0;
    want << -2.0, 0.0;
    closed = closed && (project_l1(v2, 2.0) - want).lpNorm<Eigen::Infinity>() <= 1e-14;
    v2 << 3.0, 1.0;
    closed = closed && project_l1(v2, 5.0) == v2;

    const bool pass = feasible && no_op_exact && optimal && closed;
    report(5, "l1 projection property suite", pass,
           std::to_string(instances) + " instances x " + std::to_string(competitors) +
               " competitors; feasible " + (feasible ? "yes" : "NO") + ", optimal " +
               (optimal ? "yes" : "NO") + ", closed forms " + (closed ? "exact" : "WRONG"));
    CHECK(pass);
}

TEST_CASE("criterion 6: transform identities") {
    auto [clean, truth] = paper_simulated_signal();
    const STFTGrid grid = STFTGrid::from_alpha(1.0 / 6400.0, clean.sample_rate);

    const StftResult tf = stft(clean, grid);
    const Signal back = istft(tf, grid);
    const Eigen::Index w = grid.window_len;
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = w; i < clean.size() - w; ++i) {
        num += (back.samples[i] - clean.samples[i]) * (back.samples[i] - clean.samples[i]);
        den += clean.samples[i] * clean.samples[i];
    }
    const double roundtrip = std::sqrt(num / den);

    Eigen::ArrayXd cr_axis(3);
    cr_axis << -500.0, 0.0, 500.0;
    const TFCRepresentation tfc = chirplet_transform(clean, grid, cr_axis);
    double slice_diff = 0.0, scale = 0.0;
    for (Eigen::Index t = 0; t < tfc.n_frames(); ++t)
        for (Eigen::Index f = 0; f < tf.values.rows(); ++f) {
            slice_diff = std::max(slice_diff, std::abs(tfc.frames[t](f, 1) - tf.values(f, t)));
            scale = std::max(scale, std::abs(tf.values(f, t)));
        }
    const double slice_rel = slice_diff / scale;

    Rng rng(37);
    Signal x, y;
    x.sample_rate = y.sample_rate = 512.0;
    x.samples = Eigen::ArrayXd(512);
    y.samples = Eigen::ArrayXd(512);
    for (Eigen::Index i = 0; i < 512; ++i) {
        x.samples[i] = rng.normal();
        y.samples[i] = rng.normal();
    }
    Signal z = x;
    z.samples = 0.7 * x.samples - 1.3 * y.samples;
    const STFTGrid g2 = STFTGrid::from_alpha(1.0 / 6400.0, 512.0);
    const TFCRepresentation cx = chirplet_transform(x, g2, cr_axis);
    const TFCRepresentation cy = chirplet_transform(y, g2, cr_axis);
    const TFCRepresentation cz = chirplet_transform(z, g2, cr_axis);
    double lin_diff = 0.0, lin_scale = 0.0;
    for (Eigen::Index t = 0; t < cz.n_frames(); ++t) {
        lin_diff = std::max(
            lin_diff,
            (cz.frames[t] - (0.7 * cx.frames[t] - 1.3 * cy.frames[t])).cwiseAbs().maxCoeff());
        lin_scale = std::max(lin_scale, cz.frames[t].cwiseAbs().maxCoeff());
    }
    const double lin_rel = lin_diff / lin_scale;

    const bool pass = roundtrip < 1e-8 && slice_rel <= 1e-12 && lin_rel <= 1e-10;
    report(6, "transform identities", pass,
           "istft round trip " + fmt(roundtrip) + ", zero-rate slice vs stft " + fmt(slice_rel) +
               ", linearity " + fmt(lin_rel));
    CHECK(pass);
}

TEST_CASE("criterion 7: residual decreases with dictionary size") {
    auto [clean, truth] = paper_simulated_signal();
    std::vector<double> medians;
    std::string detail;
    for (const int N : {250, 500, 1000, 2000}) {
        std::vector<double> rs;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            DecompositionConfig cfg;
            cfg.n_modes = 2;
            cfg.n_features = N;
            cfg.seed = seed;
            // A tiny fixed noise floor keeps the solver in its sparsity-
            // limited regime so the residual reflects dictionary quality.
            cfg.sigma_override = 1e-4;
            cfg.max_iter = 400;
            rs.push_back(decompose_3d(clean, cfg).solution.residual_norm);
        }
        std::sort(rs.begin(), rs.end());
        medians.push_back(rs[2]);
        detail += (detail.empty() ? "" : " > ") + fmt(rs[2]);
    }
    bool pass = true;
    for (size_t i = 0; i + 1 < medians.size(); ++i) pass = pass && medians[i + 1] < medians[i];
    report(7, "residual vs dictionary size", pass, "medians " + detail);
    CHECK(pass);
}

TEST_CASE("criterion 8: per-iteration solver cost scales linearly in columns") {
    const std::vector<Eigen::Index> cols{2500, 5000, 10000};
    std::vector<double> best(cols.size(), 1e300);
    // Three timing repetitions; the minimum is the least scheduler-noisy.
    for (int rep = 0; rep < 3; ++rep) {
        const auto pts = complexity_probe(cols, 1024, 60, 5 + static_cast<std::uint64_t>(rep));
        for (size_t i = 0; i < pts.size(); ++i)
            best[i] = std::min(best[i], pts[i].seconds_per_iter);
    }
    const double r1 = best[1] / best[0];
    const double r2 = best[2] / best[1];
    const bool pass = r1 >= 1.6 && r1 <= 2.6 && r2 >= 1.6 && r2 <= 2.6;
    report(8, "solver cost scaling", pass,
           "doubling ratios " + fmt(r1) + ", " + fmt(r2) + " (want within [1.6, 2.6])");
    CHECK(pass);
}

TEST_CASE("criterion 9: manifest re-run reproduces mode outputs byte-identically") {
    const fs::path dir = fs::temp_directory_path() / "srmd3d_acceptance_rerun";
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::create_directories(dir);

    const std::string cli = SRMD3D_CLI_PATH;
    auto run = [&cli](const std::string& args) {
        const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
        const int rc = std::system(cmd.c_str());
        return rc < 0 ? rc : WEXITSTATUS(rc);
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };

    const std::string in = (dir / "in").string();
    bool pass =
        run("synth tones --freqs 60,130 --fs 512 --duration 1 --snr-db 20 --seed 42 --out " + in) ==
        0;
    const int first = run("decompose " + in + "/signal.csv --method srmd3d --k 2 " +
                          "--n-features 500 --max-iter 300 --seed 7 --out " +
                          (dir / "run1").string());
    pass = pass && (first == 0 || first == 2);
    const int redo = run("rerun " + (dir / "run1" / "manifest.json").string() + " --out " +
                         (dir / "run2").string());
    pass = pass && redo == first;

    std::string detail = "decompose rc " + std::to_string(first) + ", rerun rc " +
                         std::to_string(redo);
    for (int m = 0; m < 2; ++m) {
        const std::string name = "mode_" + std::to_string(m) + ".csv";
        const std::string a = slurp(dir / "run1" / name);
        const std::string b = slurp(dir / "run2" / name);
        const bool same = !a.empty() && a == b;
        pass = pass && same;
        detail += ", " + name + (same ? " identical" : " DIFFERS");
    }
    fs::remove_all(dir, ec);
    report(9, "manifest re-run determinism", pass, detail);
    CHECK(pass);
}
