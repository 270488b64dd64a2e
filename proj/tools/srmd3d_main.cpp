#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "srmd/baseline.hpp"
#include "srmd/io.hpp"
#include "srmd/pipeline.hpp"
#include "srmd/signal.hpp"
#include "srmd/stft.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string join_command(int argc, char** argv) {
    std::string cmd;
    for (int i = 0; i < argc; ++i) {
        if (i) cmd += ' ';
        cmd += argv[i];
    }
    return cmd;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

srmd::Signal load_input(const std::string& path, int channel) {
    srmd::Signal x = has_suffix(path, ".wav") ? srmd::read_wav(path, channel)
                                              : srmd::read_signal_csv(path);
    x.validate();
    return x;
}

double parse_snr_db(const std::string& text) {
    if (text == "inf" || text == "+inf" || text == "infinity")
        return std::numeric_limits<double>::infinity();
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::runtime_error("bad --snr-db value: '" + text + "'");
    return v;
}

std::pair<srmd::Signal, srmd::ModeSet> make_reference(const std::string& kind, double fs,
                                                      double duration,
                                                      const std::vector<double>& freqs) {
    if (kind == "paper-sim") return srmd::paper_simulated_signal(fs, duration);
    if (kind == "crossover-pair") return srmd::crossover_chirp_pair(fs, duration);
    if (kind == "tones") return srmd::parallel_tones(freqs, fs, duration);
    throw std::runtime_error("unknown signal kind '" + kind +
                             "' (expected paper-sim, crossover-pair or tones)");
}

/// Writes one file into `dir` via `writer` and records (name, checksum).
template <typename Writer>
void emit(std::vector<std::pair<std::string, std::string>>& outputs, const fs::path& dir,
          const std::string& name, Writer&& writer) {
    const std::string path = (dir / name).string();
    writer(path);
    outputs.emplace_back(name, srmd::checksum_file(path));
}

// --- decompose -----------------------------------------------------------

struct DecomposeFlags {
    std::string input;
    std::string method = "srmd3d";
    std::string out = ".";
    int k = 1;
    int n_features = 5000;
    double alpha = -1.0;
    double lambda = -1.0;
    double sigma = -1.0;
    std::uint64_t seed = 0;
    int max_iter = 1000;
    double cr_max = -1.0;
    int cr_bins = 41;
    bool debias = true;
    double debias_damping = 1e-4;
    double cluster_eps = 0.03;
    int cluster_min_pts = 4;
    int channel = 0;
    bool wav = false;
    std::vector<std::string> truth;
};

json decompose_config_json(const DecomposeFlags& f) {
    return json{{"subcommand", "decompose"},
                {"method", f.method},
                {"k", f.k},
                {"n_features", f.n_features},
                {"alpha", f.alpha},
                {"lambda", f.lambda},
                {"sigma", f.sigma},
                {"seed", f.seed},
                {"max_iter", f.max_iter},
                {"cr_max", f.cr_max},
                {"cr_bins", f.cr_bins},
                {"debias", f.debias},
                {"debias_damping", f.debias_damping},
                {"cluster_eps", f.cluster_eps},
                {"cluster_min_pts", f.cluster_min_pts},
                {"channel", f.channel},
                {"wav", f.wav}};
}

DecomposeFlags decompose_flags_from_json(const json& c) {
    DecomposeFlags f;
    f.method = c.value("method", f.method);
    f.k = c.value("k", f.k);
    f.n_features = c.value("n_features", f.n_features);
    f.alpha = c.value("alpha", f.alpha);
    f.lambda = c.value("lambda", f.lambda);
    f.sigma = c.value("sigma", f.sigma);
    f.seed = c.value("seed", f.seed);
    f.max_iter = c.value("max_iter", f.max_iter);
    f.cr_max = c.value("cr_max", f.cr_max);
    f.cr_bins = c.value("cr_bins", f.cr_bins);
    f.debias = c.value("debias", f.debias);
    f.debias_damping = c.value("debias_damping", f.debias_damping);
    f.cluster_eps = c.value("cluster_eps", f.cluster_eps);
    f.cluster_min_pts = c.value("cluster_min_pts", f.cluster_min_pts);
    f.channel = c.value("channel", f.channel);
    f.wav = c.value("wav", f.wav);
    return f;
}

void print_snr_report(const std::vector<std::string>& truth_paths,
                      const std::vector<srmd::Signal>& modes) {
    std::vector<srmd::Signal> truth;
    truth.reserve(truth_paths.size());
    for (const auto& p : truth_paths) truth.push_back(srmd::read_signal_csv(p));
    const auto matches = srmd::match_modes(truth, modes);
    std::cout << "output SNR against supplied truth:\n";
    for (size_t i = 0; i < matches.size(); ++i) {
        std::cout << "  " << truth_paths[i] << " -> ";
        if (matches[i].recovered_index < 0)
            std::cout << "(no match)";
        else
            std::cout << "mode_" << matches[i].recovered_index;
        std::cout << "  " << srmd::format_double(matches[i].snr_db) << " dB\n";
    }
}

int run_decompose(const DecomposeFlags& f, const std::string& command) {
    const srmd::Signal x = load_input(f.input, f.channel);
    std::cout << "input: " << x.size() << " samples @ " << srmd::format_double(x.sample_rate)
              << " Hz (" << srmd::format_double(x.duration()) << " s)\n";

    std::vector<std::pair<std::string, std::string>> outputs;
    const fs::path dir(f.out);
    std::vector<srmd::Signal> modes;
    bool converged = false;

    if (f.method == "srmd3d") {
        srmd::DecompositionConfig cfg;
        cfg.n_modes = f.k;
        cfg.alpha = f.alpha;
        cfg.lambda = f.lambda;
        cfg.n_features = f.n_features;
        cfg.max_iter = f.max_iter;
        cfg.seed = f.seed;
        cfg.sigma_override = f.sigma;
        cfg.cr_max = f.cr_max;
        cfg.cr_bins = f.cr_bins;
        cfg.debias = f.debias;
        cfg.debias_damping = f.debias_damping;
        std::vector<srmd::BpdnTraceRow> trace;
        cfg.trace = &trace;

        const srmd::DecompositionResult res = srmd::decompose_3d(x, cfg);
        modes = res.modes;
        converged = res.solution.converged;

        std::cout << "resolved: alpha=" << srmd::format_double(res.alpha)
                  << " s^2, lambda=" << srmd::format_double(res.lambda)
                  << " Hz, sigma=" << srmd::format_double(res.sigma) << '\n';
        std::cout << "solver: " << res.solution.iterations << " iterations, residual "
                  << srmd::format_double(res.solution.residual_norm)
                  << (converged ? ", converged" : ", NOT converged") << '\n';
        const srmd::StageTimings& t = res.timings;
        std::cout << "stages [s]: transform " << srmd::format_double(t.transform_s) << ", ridge "
                  << srmd::format_double(t.ridge_s) << ", dictionary "
                  << srmd::format_double(t.dictionary_s) << ", solve "
                  << srmd::format_double(t.solve_s) << ", total "
                  << srmd::format_double(t.total_s) << '\n';

        fs::create_directories(dir);
        emit(outputs, dir, "ridges.csv",
             [&](const std::string& p) { srmd::write_ridge_csv(p, res.ridges); });
        emit(outputs, dir, "atoms.csv",
             [&](const std::string& p) { srmd::write_atoms_csv(p, res.dictionary); });
        emit(outputs, dir, "trace.csv",
             [&](const std::string& p) { srmd::write_trace_csv(p, trace); });
    } else if (f.method == "srmd") {
        srmd::SrmdConfig cfg;
        cfg.alpha = f.alpha;
        cfg.n_features = f.n_features;
        cfg.max_iter = f.max_iter;
        cfg.seed = f.seed;
        cfg.sigma_override = f.sigma;
        cfg.cluster_eps = f.cluster_eps;
        cfg.cluster_min_pts = f.cluster_min_pts;

        srmd::SrmdResult res = srmd::srmd_decompose(x, cfg);
        modes = res.modes;
        converged = res.solution.converged;

        std::cout << "clusters: " << modes.size() << ", sigma="
                  << srmd::format_double(res.sigma) << '\n';
        std::cout << "solver: " << res.solution.iterations << " iterations, residual "
                  << srmd::format_double(res.solution.residual_norm)
                  << (converged ? ", converged" : ", NOT converged") << '\n';

        for (Eigen::Index i = 0; i < res.atom_labels.size(); ++i) {
            const int label = res.atom_labels[i];
            res.dictionary.atoms[static_cast<size_t>(i)].mode_index = label >= 0 ? label + 1 : 0;
        }
        fs::create_directories(dir);
        emit(outputs, dir, "atoms.csv",
             [&](const std::string& p) { srmd::write_atoms_csv(p, res.dictionary); });
    } else {
        throw std::runtime_error("unknown method '" + f.method + "' (expected srmd3d or srmd)");
    }

    for (size_t i = 0; i < modes.size(); ++i) {
        const std::string stem = "mode_" + std::to_string(i);
        emit(outputs, dir, stem + ".csv",
             [&](const std::string& p) { srmd::write_signal_csv(p, modes[i]); });
        if (f.wav)
            emit(outputs, dir, stem + ".wav",
                 [&](const std::string& p) { srmd::write_wav(p, modes[i]); });
    }

    srmd::RunManifest manifest;
    manifest.tool_version = kToolVersion;
    manifest.command = command;
    manifest.seed = f.seed;
    manifest.config = decompose_config_json(f);
    manifest.input_path = fs::absolute(f.input).string();
    manifest.input_checksum = srmd::checksum_file(f.input);
    manifest.outputs = outputs;
    srmd::write_manifest((dir / "manifest.json").string(), manifest);

    for (const auto& [name, sum] : outputs) std::cout << "wrote " << (dir / name).string() << '\n';
    if (!f.truth.empty()) print_snr_report(f.truth, modes);
    return converged ? 0 : 2;
}

// --- synth -----------------------------------------------------------------

struct SynthFlags {
    std::string kind;
    double fs = 1024.0;
    double duration = 1.0;
    std::string snr_db = "inf";
    std::uint64_t seed = 0;
    std::vector<double> freqs = {100.0, 200.0};
    std::string out = ".";
    bool wav = false;
};

int run_synth(const SynthFlags& f, const std::string& command) {
    const double snr = parse_snr_db(f.snr_db);
    auto [clean, truth] = make_reference(f.kind, f.fs, f.duration, f.freqs);
    const auto [noisy, noise_var] = srmd::add_white_noise(clean, snr, f.seed);

    const fs::path dir(f.out);
    fs::create_directories(dir);
    std::vector<std::pair<std::string, std::string>> outputs;
    emit(outputs, dir, "signal.csv",
         [&](const std::string& p) { srmd::write_signal_csv(p, noisy); });
    if (f.wav)
        emit(outputs, dir, "signal.wav", [&](const std::string& p) { srmd::write_wav(p, noisy); });
    for (size_t i = 0; i < truth.modes.size(); ++i)
        emit(outputs, dir, "mode_" + std::to_string(i) + ".csv",
             [&](const std::string& p) { srmd::write_signal_csv(p, truth.modes[i]); });

    srmd::RunManifest manifest;
    manifest.tool_version = kToolVersion;
    manifest.command = command;
    manifest.seed = f.seed;
    manifest.config = {{"subcommand", "synth"}, {"kind", f.kind},       {"fs", f.fs},
                       {"duration", f.duration}, {"snr_db", f.snr_db},  {"freqs", f.freqs},
                       {"seed", f.seed},         {"wav", f.wav}};
    manifest.outputs = outputs;
    srmd::write_manifest((dir / "manifest.json").string(), manifest);

    std::cout << f.kind << ": " << noisy.size() << " samples @ " << srmd::format_double(f.fs)
              << " Hz, " << truth.modes.size() << " modes, snr " << f.snr_db
              << " dB (noise variance " << srmd::format_double(noise_var) << ")\n";
    for (const auto& [name, sum] : outputs) std::cout << "wrote " << (dir / name).string() << '\n';
    return 0;
}

// --- benchmark ---------------------------------------------------------------

json load_config_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

int run_benchmark(const std::string& config_path, const std::string& out,
                  const std::string& command) {
    const json c = load_config_json(config_path);
    std::vector<double> levels;
    int trials = 0;
    std::string kind;
    try {
        const json& sig = c.at("signal");
        kind = sig.at("kind").get<std::string>();
        const double fs = sig.value("fs", 1024.0);
        const double duration = sig.value("duration", 1.0);
        const std::vector<double> freqs =
            sig.value("freqs", std::vector<double>{100.0, 200.0});
        levels = c.at("snr_levels_db").get<std::vector<double>>();
        trials = c.at("trials").get<int>();
        const auto seed = c.value("seed", std::uint64_t{0});

        srmd::DecompositionConfig cfg3d;
        if (c.contains("srmd3d")) {
            const auto f3 = decompose_flags_from_json(c.at("srmd3d"));
            cfg3d.n_modes = f3.k;
            cfg3d.alpha = f3.alpha;
            cfg3d.lambda = f3.lambda;
            cfg3d.n_features = f3.n_features;
            cfg3d.max_iter = f3.max_iter;
            cfg3d.cr_max = f3.cr_max;
            cfg3d.cr_bins = f3.cr_bins;
            cfg3d.debias = f3.debias;
            cfg3d.debias_damping = f3.debias_damping;
        }
        srmd::SrmdConfig cfg2d;
        if (c.contains("srmd")) {
            const json& s = c.at("srmd");
            cfg2d.alpha = s.value("alpha", cfg2d.alpha);
            cfg2d.n_features = s.value("n_features", cfg2d.n_features);
            cfg2d.max_iter = s.value("max_iter", cfg2d.max_iter);
            cfg2d.cluster_eps = s.value("cluster_eps", cfg2d.cluster_eps);
            cfg2d.cluster_min_pts = s.value("cluster_min_pts", cfg2d.cluster_min_pts);
        }

        auto [clean, reference] = make_reference(kind, fs, duration, freqs);
        if (cfg3d.n_modes < static_cast<int>(reference.modes.size()))
            cfg3d.n_modes = static_cast<int>(reference.modes.size());

        const auto rows = srmd::benchmark_snr_sweep(reference, levels, trials, cfg3d, cfg2d, seed);

        const fs::path dir(out);
        fs::create_directories(dir);
        std::vector<std::pair<std::string, std::string>> outputs;
        emit(outputs, dir, "benchmark.csv",
             [&](const std::string& p) { srmd::write_benchmark_csv(p, rows); });

        srmd::RunManifest manifest;
        manifest.tool_version = kToolVersion;
        manifest.command = command;
        manifest.seed = seed;
        manifest.config = c;
        manifest.input_path = fs::absolute(config_path).string();
        manifest.input_checksum = srmd::checksum_file(config_path);
        manifest.outputs = outputs;
        srmd::write_manifest((dir / "manifest.json").string(), manifest);

        // Mean output SNR per (level, method), in level order.
        std::map<std::pair<double, std::string>, std::pair<double, int>> acc;
        for (const auto& r : rows) {
            auto& [sum, n] = acc[{r.input_snr_db, r.method}];
            sum += r.output_snr_db;
            ++n;
        }
        std::cout << "input_snr_db  method  mean_output_snr_db  rows\n";
        for (const auto& [key, val] : acc)
            std::cout << "  " << key.first << "  " << key.second << "  "
                      << srmd::format_double(val.first / val.second) << "  " << val.second << '\n';
        std::cout << "wrote " << (dir / "benchmark.csv").string() << " (" << rows.size()
                  << " rows)\n";
        return 0;
    } catch (const json::exception& e) {
        throw std::runtime_error(config_path + ": " + e.what());
    }
}

// --- spectrogram -------------------------------------------------------------

struct SpectrogramFlags {
    std::string input;
    std::string out = "tensor.csv";
    bool chirplet = false;
    bool binary = false;
    double alpha = -1.0;
    double cr_max = -1.0;
    int cr_bins = 41;
    int channel = 0;
};

int run_spectrogram(const SpectrogramFlags& f) {
    const srmd::Signal x = load_input(f.input, f.channel);
    const double alpha = f.alpha > 0 ? f.alpha : std::pow(x.duration() / 80.0, 2);
    const srmd::STFTGrid grid = srmd::STFTGrid::from_alpha(alpha, x.sample_rate);

    Eigen::ArrayXd cr_axis;
    if (!f.chirplet)
        cr_axis = Eigen::ArrayXd::Zero(1);  // beta = 0 plane: plain STFT magnitudes
    else if (f.cr_max > 0)
        cr_axis = Eigen::ArrayXd::LinSpaced(f.cr_bins, -f.cr_max, f.cr_max);
    else
        cr_axis = srmd::default_cr_axis(x.sample_rate, x.duration(), 0.0, f.cr_bins);

    const srmd::TFCRepresentation tfc = srmd::chirplet_transform(x, grid, cr_axis);
    if (f.binary || has_suffix(f.out, ".bin"))
        srmd::write_tensor_binary(f.out, tfc);
    else
        srmd::write_tensor_csv(f.out, tfc);
    std::cout << "wrote " << f.out << ": " << tfc.n_frames() << " frames x " << tfc.n_freq()
              << " freq x " << tfc.n_cr() << " cr bins\n";
    return 0;
}

// --- rerun ---------------------------------------------------------------------

int run_rerun(const std::string& manifest_path, const std::string& out,
              const std::string& command) {
    const srmd::RunManifest m = srmd::read_manifest(manifest_path);
    if (m.config.value("subcommand", "") != "decompose")
        throw std::runtime_error(manifest_path + ": can only rerun decompose manifests");

    DecomposeFlags f = decompose_flags_from_json(m.config);
    f.input = m.input_path;
    f.out = out;
    const std::string current = srmd::checksum_file(f.input);
    if (current != m.input_checksum)
        throw std::runtime_error("input " + f.input + " changed since the original run (" +
                                 current + " != " + m.input_checksum + ")");

    const int code = run_decompose(f, command);

    const srmd::RunManifest redo = srmd::read_manifest((fs::path(out) / "manifest.json").string());
    size_t matched = 0;
    for (const auto& [name, sum] : redo.outputs)
        for (const auto& [orig_name, orig_sum] : m.outputs)
            if (name == orig_name && sum == orig_sum) ++matched;
    std::cout << "reproduced " << matched << "/" << m.outputs.size()
              << " outputs byte-identically\n";
    if (code != 0) return code;
    return matched == m.outputs.size() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse mode decomposition in time-frequency-chirp space"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    SynthFlags sy;
    CLI::App* synth = app.add_subcommand("synth", "generate a test signal with ground truth");
    synth->add_option("kind", sy.kind, "paper-sim, crossover-pair or tones")->required();
    synth->add_option("--fs", sy.fs, "sample rate, Hz");
    synth->add_option("--duration", sy.duration, "length, s");
    synth->add_option("--snr-db", sy.snr_db, "white-noise level; 'inf' for noise-free");
    synth->add_option("--seed", sy.seed, "noise seed");
    synth->add_option("--freqs", sy.freqs, "tone frequencies for kind=tones")->delimiter(',');
    synth->add_option("--out", sy.out, "output directory");
    synth->add_flag("--wav", sy.wav, "also write signal.wav");

    DecomposeFlags de;
    CLI::App* dec = app.add_subcommand("decompose", "separate a signal into modes");
    dec->add_option("input", de.input, "signal file (.csv or .wav)")->required();
    dec->add_option("--method", de.method, "srmd3d (ridge-guided) or srmd (2d baseline)");
    dec->add_option("--k", de.k, "number of modes to extract")->envname("SRMD3D_K");
    dec->add_option("--n-features", de.n_features, "random atoms per mode")
        ->envname("SRMD3D_N_FEATURES");
    dec->add_option("--alpha", de.alpha, "window variance, s^2; <=0 auto")
        ->envname("SRMD3D_ALPHA");
    dec->add_option("--lambda", de.lambda, "feature band width, Hz; <=0 auto")
        ->envname("SRMD3D_LAMBDA");
    dec->add_option("--sigma", de.sigma, "per-sample noise std; <0 estimate")
        ->envname("SRMD3D_SIGMA");
    dec->add_option("--seed", de.seed, "feature sampling seed")->envname("SRMD3D_SEED");
    dec->add_option("--max-iter", de.max_iter, "solver iteration budget")
        ->envname("SRMD3D_MAX_ITER");
    dec->add_option("--cr-max", de.cr_max, "chirp-rate half-range hint, Hz/s");
    dec->add_option("--cr-bins", de.cr_bins, "chirp-rate bins");
    dec->add_flag("!--no-debias", de.debias, "skip the least-squares refit of kept atoms");
    dec->add_option("--debias-damping", de.debias_damping, "refit damping, relative");
    dec->add_option("--cluster-eps", de.cluster_eps, "srmd: clustering radius");
    dec->add_option("--min-pts", de.cluster_min_pts, "srmd: core point threshold");
    dec->add_option("--channel", de.channel, "wav channel to read");
    dec->add_option("--truth", de.truth, "ground-truth mode CSVs for an SNR report");
    dec->add_option("--out", de.out, "output directory");
    dec->add_flag("--wav", de.wav, "also write mode WAVs");

    std::string bench_config, bench_out = ".";
    CLI::App* bench = app.add_subcommand("benchmark", "noise sweep over both methods");
    bench->add_option("config", bench_config, "JSON benchmark description")->required();
    bench->add_option("--out", bench_out, "output directory");

    SpectrogramFlags sp;
    CLI::App* spec = app.add_subcommand("spectrogram", "export the transform grid for plotting");
    spec->add_option("input", sp.input, "signal file (.csv or .wav)")->required();
    spec->add_option("--out", sp.out, "output file (.csv long form, .bin flat tensor)");
    spec->add_flag("--chirplet", sp.chirplet, "full chirp-rate tensor instead of the stft plane");
    spec->add_flag("--binary", sp.binary, "force the flat binary format");
    spec->add_option("--alpha", sp.alpha, "window variance, s^2; <=0 auto");
    spec->add_option("--cr-max", sp.cr_max, "chirp-rate half-range, Hz/s");
    spec->add_option("--cr-bins", sp.cr_bins, "chirp-rate bins");
    spec->add_option("--channel", sp.channel, "wav channel to read");

    std::string rerun_manifest, rerun_out = ".";
    CLI::App* rer = app.add_subcommand("rerun", "reproduce a decompose run from its manifest");
    rer->add_option("manifest", rerun_manifest, "manifest.json of the original run")->required();
    rer->add_option("--out", rerun_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    const std::string command = join_command(argc, argv);
    try {
        if (synth->parsed()) return run_synth(sy, command);
        if (dec->parsed()) return run_decompose(de, command);
        if (bench->parsed()) return run_benchmark(bench_config, bench_out, command);
        if (spec->parsed()) return run_spectrogram(sp);
        if (rer->parsed()) return run_rerun(rerun_manifest, rerun_out, command);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
