#pragma once

#include <string>
#include <vector>

#include "core/mat.hpp"

namespace ttapt {

struct Waveform {
    std::vector<float> samples; // amplitudes in [-1, 1]
    int sample_rate = 44100;
};

struct MelConfig {
    int n_mels = 64;
    int hop = 320;
    int window = 1024;
    double f_min = 50.0;
    double f_max = 8000.0;
    double log_floor = 1e-10;

    void validate(int sample_rate) const;
};

// T x F log-mel matrix, T time frames, F = n_mels.
struct MelSpectrogram {
    Mat data;
    int frames() const { return data.rows; }
    int bins() const { return data.cols; }
};

// Per-bin normalization statistics, computed once on the pretraining set
// and frozen into the model checkpoint.
struct NormStats {
    Vec mean;
    Vec std;
};

// expected frame count for a given waveform length: floor((len-window)/hop)+1
int mel_frame_count(size_t n_samples, const MelConfig& cfg);

// HTK mel scale
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filterbank over the positive-frequency FFT bins. Row m holds
// the weights of mel bin m; n_fft is the transform size the weights apply to.
Mat mel_filterbank(const MelConfig& cfg, int sample_rate, int n_fft);

// Center frequencies of the n_mels triangular filters in Hz.
Vec mel_center_frequencies(const MelConfig& cfg);

// Hann-windowed STFT -> power spectrum -> mel filterbank -> ln(max(x, log_floor)).
// Frames that do not fully fit are dropped; no padding at the edges.
MelSpectrogram compute_mel(const Waveform& w, const MelConfig& cfg);

// (x - mean) / std per mel bin.
MelSpectrogram normalize(const MelSpectrogram& m, const NormStats& stats);

// Per-bin mean / population std over a set of spectrograms.
NormStats compute_norm_stats(const std::vector<MelSpectrogram>& mels);

// In-place iterative radix-2 FFT over interleaved complex data (n a power of two).
void fft_radix2(std::vector<double>& re, std::vector<double>& im);

// Raw little-endian float32 clip files; reader/writer round-trip bit-exactly.
void write_f32_file(const std::string& path, const std::vector<float>& samples);
std::vector<float> read_f32_file(const std::string& path);

} // namespace ttapt
