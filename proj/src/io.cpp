#include "srmd/io.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string_view>

namespace srmd {

namespace {

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream f(path, mode);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream f(path, mode);
    if (!f) throw std::runtime_error("cannot open: " + path);
    return f;
}

std::string read_all(const std::string& path) {
    std::ifstream f = open_in(path, std::ios::in | std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

double parse_double(std::string_view s, const std::string& path, size_t line_no) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": not a number: '" + std::string(s) + "'");
    return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        const size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return {buf, p};
}

void write_signal_csv(const std::string& path, const Signal& x) {
    std::ofstream f = open_out(path);
    f << "time,value\n";
    const Eigen::ArrayXd t = x.time_grid();
    for (Eigen::Index i = 0; i < x.samples.size(); ++i)
        f << format_double(t[i]) << ',' << format_double(x.samples[i]) << '\n';
}

Signal read_signal_csv(const std::string& path) {
    std::ifstream f = open_in(path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error(path + ": empty file");
    strip_cr(line);
    if (line != "time,value")
        throw std::runtime_error(path + ": expected header 'time,value', got '" + line + "'");

    std::vector<double> times, values;
    size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 2)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 2 fields, got " +
                                     std::to_string(fields.size()));
        times.push_back(parse_double(fields[0], path, line_no));
        values.push_back(parse_double(fields[1], path, line_no));
    }
    if (times.size() < 2) throw std::runtime_error(path + ": needs at least 2 samples");

    const auto n = static_cast<Eigen::Index>(times.size());
    const double span = times.back() - times.front();
    if (span <= 0.0) throw std::runtime_error(path + ": time column must increase");
    const double fs = static_cast<double>(n - 1) / span;
    const double dt = 1.0 / fs;
    for (size_t i = 1; i < times.size(); ++i)
        if (std::abs((times[i] - times[i - 1]) - dt) > 1e-6 * dt)
            throw std::runtime_error(path + ": non-uniform sampling near row " +
                                     std::to_string(i + 1));

    Signal x{Eigen::Map<const Eigen::ArrayXd>(values.data(), n), fs, times.front()};
    x.validate();
    return x;
}

void write_ridge_csv(const std::string& path, const std::vector<RidgeCurve>& ridges) {
    std::ofstream f = open_out(path);
    f << "frame,time_s,if_hz,cr_hzps,energy,mode_index\n";
    for (size_t mode = 0; mode < ridges.size(); ++mode) {
        const RidgeCurve& r = ridges[mode];
        for (Eigen::Index i = 0; i < r.n_frames(); ++i)
            f << i << ',' << format_double(r.frame_times[i]) << ',' << format_double(r.if_hz[i])
              << ',' << format_double(r.cr_hzps[i]) << ',' << format_double(r.energy[i]) << ','
              << mode << '\n';
    }
}

void write_atoms_csv(const std::string& path, const FeatureDictionary& dictionary) {
    std::ofstream f = open_out(path);
    f << "mode_index,tau_s,xi_hz,beta_hzps,phi\n";
    for (const FeatureAtom& a : dictionary.atoms)
        f << a.mode_index << ',' << format_double(a.tau) << ',' << format_double(a.xi) << ','
          << format_double(a.beta) << ',' << a.phi << '\n';
}

void write_benchmark_csv(const std::string& path, const std::vector<BenchmarkRow>& rows) {
    std::ofstream f = open_out(path);
    f << "input_snr_db,method,trial,mode,output_snr_db,runtime_s,converged\n";
    for (const BenchmarkRow& r : rows)
        f << format_double(r.input_snr_db) << ',' << r.method << ',' << r.trial << ',' << r.mode
          << ',' << format_double(r.output_snr_db) << ',' << format_double(r.runtime_s) << ','
          << (r.converged ? 1 : 0) << '\n';
}

void write_trace_csv(const std::string& path, const std::vector<BpdnTraceRow>& rows) {
    std::ofstream f = open_out(path);
    f << "iter,tau,residual_norm,dual_norm,matvecs\n";
    for (const BpdnTraceRow& r : rows)
        f << r.iter << ',' << format_double(r.tau) << ',' << format_double(r.residual_norm)
          << ',' << format_double(r.dual_norm) << ',' << r.matvecs << '\n';
}

void write_tensor_csv(const std::string& path, const TFCRepresentation& tfc) {
    tfc.validate();
    std::ofstream f = open_out(path);
    f << "frame,freq,cr,magnitude\n";
    for (Eigen::Index fr = 0; fr < tfc.n_frames(); ++fr)
        for (Eigen::Index k = 0; k < tfc.n_freq(); ++k)
            for (Eigen::Index b = 0; b < tfc.n_cr(); ++b)
                f << fr << ',' << format_double(tfc.freq_axis[k]) << ','
                  << format_double(tfc.cr_axis[b]) << ','
                  << format_double(std::abs(tfc.frames[static_cast<size_t>(fr)](k, b))) << '\n';
}

void write_tensor_binary(const std::string& path, const TFCRepresentation& tfc) {
    tfc.validate();
    std::ofstream f = open_out(path, std::ios::out | std::ios::binary);
    const std::uint64_t dims[3] = {static_cast<std::uint64_t>(tfc.n_frames()),
                                   static_cast<std::uint64_t>(tfc.n_freq()),
                                   static_cast<std::uint64_t>(tfc.n_cr())};
    f.write(reinterpret_cast<const char*>(dims), sizeof dims);
    std::vector<double> row(static_cast<size_t>(tfc.n_cr()));
    for (Eigen::Index fr = 0; fr < tfc.n_frames(); ++fr)
        for (Eigen::Index k = 0; k < tfc.n_freq(); ++k) {
            for (Eigen::Index b = 0; b < tfc.n_cr(); ++b)
                row[static_cast<size_t>(b)] = std::abs(tfc.frames[static_cast<size_t>(fr)](k, b));
            f.write(reinterpret_cast<const char*>(row.data()),
                    static_cast<std::streamsize>(row.size() * sizeof(double)));
        }
}

std::pair<TensorDims, std::vector<double>> read_tensor_binary(const std::string& path) {
    std::ifstream f = open_in(path, std::ios::in | std::ios::binary);
    std::uint64_t dims[3] = {};
    f.read(reinterpret_cast<char*>(dims), sizeof dims);
    if (!f) throw std::runtime_error(path + ": truncated tensor header");
    const std::uint64_t total = dims[0] * dims[1] * dims[2];
    std::vector<double> data(total);
    f.read(reinterpret_cast<char*>(data.data()),
           static_cast<std::streamsize>(total * sizeof(double)));
    if (!f) throw std::runtime_error(path + ": truncated tensor payload");
    char extra = 0;
    if (f.read(&extra, 1)) throw std::runtime_error(path + ": trailing bytes after tensor");
    return {{dims[0], dims[1], dims[2]}, std::move(data)};
}

// --- WAV ------------------------------------------------------------------

namespace {

template <typename T>
T read_le(std::istream& f, const std::string& path) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!f) throw std::runtime_error(path + ": truncated WAV");
    return v;
}

template <typename T>
void write_le(std::ostream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

}  // namespace

Signal read_wav(const std::string& path, int channel) {
    std::ifstream f = open_in(path, std::ios::in | std::ios::binary);
    char tag[4];
    f.read(tag, 4);
    if (!f || std::memcmp(tag, "RIFF", 4) != 0)
        throw std::runtime_error(path + ": not a RIFF file");
    read_le<std::uint32_t>(f, path);  // overall size, unused
    f.read(tag, 4);
    if (!f || std::memcmp(tag, "WAVE", 4) != 0)
        throw std::runtime_error(path + ": not a WAVE file");

    std::uint16_t audio_format = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    std::string payload;
    while (f.read(tag, 4)) {
        const auto chunk_size = read_le<std::uint32_t>(f, path);
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            audio_format = read_le<std::uint16_t>(f, path);
            channels = read_le<std::uint16_t>(f, path);
            sample_rate = read_le<std::uint32_t>(f, path);
            read_le<std::uint32_t>(f, path);  // byte rate
            read_le<std::uint16_t>(f, path);  // block align
            bits = read_le<std::uint16_t>(f, path);
            if (chunk_size > 16) f.seekg(chunk_size - 16, std::ios::cur);
        } else if (std::memcmp(tag, "data", 4) == 0) {
            payload.resize(chunk_size);
            f.read(payload.data(), chunk_size);
            if (!f) throw std::runtime_error(path + ": truncated data chunk");
            break;
        } else {
            f.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
        }
    }
    if (sample_rate == 0) throw std::runtime_error(path + ": missing fmt chunk");
    if (payload.empty()) throw std::runtime_error(path + ": missing data chunk");
    if (channels == 0) throw std::runtime_error(path + ": zero channels");
    if (channel < 0 || channel >= channels)
        throw std::runtime_error(path + ": channel " + std::to_string(channel) +
                                 " out of range (file has " + std::to_string(channels) + ")");

    const bool pcm16 = audio_format == 1 && bits == 16;
    const bool pcm32 = audio_format == 1 && bits == 32;
    const bool f32 = audio_format == 3 && bits == 32;
    if (!pcm16 && !pcm32 && !f32)
        throw std::runtime_error(path + ": unsupported format (code " +
                                 std::to_string(audio_format) + ", " + std::to_string(bits) +
                                 " bits); expected PCM16, PCM32 or float32");

    const size_t bytes_per = bits / 8;
    const size_t n_frames = payload.size() / (bytes_per * channels);
    Eigen::ArrayXd samples(static_cast<Eigen::Index>(n_frames));
    const char* base = payload.data();
    for (size_t i = 0; i < n_frames; ++i) {
        const char* p = base + (i * channels + static_cast<size_t>(channel)) * bytes_per;
        if (pcm16) {
            std::int16_t v;
            std::memcpy(&v, p, 2);
            samples[static_cast<Eigen::Index>(i)] = static_cast<double>(v) / 32768.0;
        } else if (pcm32) {
            std::int32_t v;
            std::memcpy(&v, p, 4);
            samples[static_cast<Eigen::Index>(i)] = static_cast<double>(v) / 2147483648.0;
        } else {
            float v;
            std::memcpy(&v, p, 4);
            samples[static_cast<Eigen::Index>(i)] = static_cast<double>(v);
        }
    }
    return Signal{std::move(samples), static_cast<double>(sample_rate), 0.0};
}

void write_wav(const std::string& path, const Signal& x, WavFormat format) {
    x.validate();
    const auto n = static_cast<std::uint32_t>(x.samples.size());
    const std::uint16_t bits = format == WavFormat::Pcm16 ? 16 : 32;
    const std::uint16_t code = format == WavFormat::Float32 ? 3 : 1;
    const std::uint32_t data_bytes = n * (bits / 8u);

    std::ofstream f = open_out(path, std::ios::out | std::ios::binary);
    f.write("RIFF", 4);
    write_le<std::uint32_t>(f, 36 + data_bytes);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    write_le<std::uint32_t>(f, 16);
    write_le<std::uint16_t>(f, code);
    write_le<std::uint16_t>(f, 1);  // mono
    write_le<std::uint32_t>(f, static_cast<std::uint32_t>(std::llround(x.sample_rate)));
    write_le<std::uint32_t>(f, static_cast<std::uint32_t>(std::llround(x.sample_rate)) * (bits / 8u));
    write_le<std::uint16_t>(f, bits / 8u);
    write_le<std::uint16_t>(f, bits);
    f.write("data", 4);
    write_le<std::uint32_t>(f, data_bytes);

    for (Eigen::Index i = 0; i < x.samples.size(); ++i) {
        const double v = x.samples[i];
        switch (format) {
            case WavFormat::Pcm16:
                write_le<std::int16_t>(f, static_cast<std::int16_t>(std::llround(
                                              std::clamp(v, -1.0, 1.0) * 32767.0)));
                break;
            case WavFormat::Pcm32:
                write_le<std::int32_t>(f, static_cast<std::int32_t>(std::llround(
                                              std::clamp(v, -1.0, 1.0) * 2147483647.0)));
                break;
            case WavFormat::Float32:
                write_le<float>(f, static_cast<float>(v));
                break;
        }
    }
}

// --- Run manifest -----------------------------------------------------------

std::string checksum_bytes(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    for (int i = 15; i >= 0; --i) {
        buf[i] = "0123456789abcdef"[h & 0xf];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string("fnv1a64:") + buf;
}

std::string checksum_file(const std::string& path) { return checksum_bytes(read_all(path)); }

void write_manifest(const std::string& path, const RunManifest& manifest) {
    nlohmann::json j;
    j["tool_version"] = manifest.tool_version;
    j["command"] = manifest.command;
    j["seed"] = manifest.seed;
    j["config"] = manifest.config;
    j["input"] = {{"path", manifest.input_path}, {"checksum", manifest.input_checksum}};
    j["outputs"] = nlohmann::json::array();
    for (const auto& [out_path, checksum] : manifest.outputs)
        j["outputs"].push_back({{"path", out_path}, {"checksum", checksum}});
    open_out(path) << j.dump(2) << '\n';
}

RunManifest read_manifest(const std::string& path) {
    RunManifest m;
    try {
        const nlohmann::json j = nlohmann::json::parse(read_all(path));
        m.tool_version = j.at("tool_version").get<std::string>();
        m.command = j.at("command").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.config = j.at("config");
        m.input_path = j.at("input").at("path").get<std::string>();
        m.input_checksum = j.at("input").at("checksum").get<std::string>();
        for (const auto& entry : j.at("outputs"))
            m.outputs.emplace_back(entry.at("path").get<std::string>(),
                                   entry.at("checksum").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": bad manifest: " + e.what());
    }
    return m;
}

}  // namespace srmd
