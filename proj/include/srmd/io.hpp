#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "srmd/bpdn.hpp"
#include "srmd/features.hpp"
#include "srmd/pipeline.hpp"
#include "srmd/ridge.hpp"
#include "srmd/signal.hpp"
#include "srmd/stft.hpp"

namespace srmd {

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

// --- CSV ---------------------------------------------------------------

/// Header "time,value"; one row per sample.
void write_signal_csv(const std::string& path, const Signal& x);
Signal read_signal_csv(const std::string& path);

/// Header "frame,time_s,if_hz,cr_hzps,energy,mode_index".
void write_ridge_csv(const std::string& path, const std::vector<RidgeCurve>& ridges);

/// Header "mode_index,tau_s,xi_hz,beta_hzps,phi".
void write_atoms_csv(const std::string& path, const FeatureDictionary& dictionary);

/// Header "input_snr_db,method,trial,mode,output_snr_db,runtime_s,converged".
void write_benchmark_csv(const std::string& path, const std::vector<BenchmarkRow>& rows);

/// Header "iter,tau,residual_norm,dual_norm,matvecs".
void write_trace_csv(const std::string& path, const std::vector<BpdnTraceRow>& rows);

// --- Chirplet tensor ----------------------------------------------------

/// Long form, header "frame,freq,cr,magnitude"; axes as values, not indices.
void write_tensor_csv(const std::string& path, const TFCRepresentation& tfc);

/// Flat binary: three little-endian u64 dims (frames, freq, cr), then
/// row-major (frame, freq, cr) magnitudes as f64.
void write_tensor_binary(const std::string& path, const TFCRepresentation& tfc);

struct TensorDims {
    std::uint64_t n_frames = 0, n_freq = 0, n_cr = 0;
};
std::pair<TensorDims, std::vector<double>> read_tensor_binary(const std::string& path);

// --- WAV ----------------------------------------------------------------

enum class WavFormat { Pcm16, Pcm32, Float32 };

/// Reads one channel of a PCM16/PCM32/IEEE-float32 RIFF file.
Signal read_wav(const std::string& path, int channel = 0);
void write_wav(const std::string& path, const Signal& x, WavFormat format = WavFormat::Float32);

// --- Run manifest ---------------------------------------------------------

/// Everything needed to reproduce one decomposition byte for byte.
struct RunManifest {
    std::string tool_version;
    std::string command;
    std::uint64_t seed = 0;
    nlohmann::json config;      // resolved parameter values
    std::string input_path;
    std::string input_checksum;
    std::vector<std::pair<std::string, std::string>> outputs;  // path, checksum
};

void write_manifest(const std::string& path, const RunManifest& manifest);
RunManifest read_manifest(const std::string& path);

/// FNV-1a 64-bit, rendered as "fnv1a64:<16 hex digits>".
std::string checksum_bytes(const std::string& bytes);
std::string checksum_file(const std::string& path);

}  // namespace srmd
