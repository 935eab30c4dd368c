#include "core/dsp_frontend.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>

namespace ttapt {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

static constexpr double kPi = 3.14159265358979323846264338327950288;

void MelConfig::validate(int sample_rate) const {
    if (sample_rate <= 0) raise(ErrorCode::Config, "sample_rate must be positive");
    if (n_mels < 2) raise(ErrorCode::Config, "n_mels must be >= 2");
    if (hop <= 0 || window <= 0) raise(ErrorCode::Config, "hop and window must be positive");
    if (hop > window) raise(ErrorCode::Config, "hop must not exceed window");
    if (log_floor <= 0.0) raise(ErrorCode::Config, "log_floor must be positive");
    if (f_min <= 0.0 || f_min >= f_max)
        raise(ErrorCode::Config, "need 0 < f_min < f_max");
    if (f_max > 0.5 * sample_rate)
        raise(ErrorCode::Config, "f_max exceeds Nyquist frequency");
}

int mel_frame_count(size_t n_samples, const MelConfig& cfg) {
    if (n_samples < static_cast<size_t>(cfg.window)) return 0;
    return static_cast<int>((n_samples - cfg.window) / cfg.hop) + 1;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Vec mel_center_frequencies(const MelConfig& cfg) {
    const double mel_lo = hz_to_mel(cfg.f_min);
    const double mel_hi = hz_to_mel(cfg.f_max);
    const double step = (mel_hi - mel_lo) / (cfg.n_mels + 1);
    Vec centers(cfg.n_mels);
    for (int m = 0; m < cfg.n_mels; ++m) centers[m] = mel_to_hz(mel_lo + (m + 1) * step);
    return centers;
}

Mat mel_filterbank(const MelConfig& cfg, int sample_rate, int n_fft) {
    const int n_bins = n_fft / 2 + 1;
    const double mel_lo = hz_to_mel(cfg.f_min);
    const double mel_hi = hz_to_mel(cfg.f_max);
    const double step = (mel_hi - mel_lo) / (cfg.n_mels + 1);

    // edge m, center m+1, edge m+2 on the mel-spaced grid
    Vec edges(cfg.n_mels + 2);
    for (int i = 0; i < cfg.n_mels + 2; ++i) edges[i] = mel_to_hz(mel_lo + i * step);

    Mat fb(cfg.n_mels, n_bins);
    for (int m = 0; m < cfg.n_mels; ++m) {
        const double f_lo = edges[m], f_c = edges[m + 1], f_hi = edges[m + 2];
        for (int k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate / n_fft;
            double w = 0.0;
            if (f > f_lo && f < f_c) {
                w = (f - f_lo) / (f_c - f_lo);
            } else if (f >= f_c && f < f_hi) {
                w = (f_hi - f) / (f_hi - f_c);
            }
            fb(m, k) = w;
        }
    }
    return fb;
}

void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
    const size_t n = re.size();
    if (n == 0 || (n & (n - 1)) != 0 || im.size() != n)
        raise(ErrorCode::Shape, "fft size must be a power of two");

    // bit reversal
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }

    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const double wr = std::cos(ang), wi = std::sin(ang);
        for (size_t i = 0; i < n; i += len) {
            double cr = 1.0, ci = 0.0;
            for (size_t k = 0; k < len / 2; ++k) {
                const size_t u = i + k, v = i + k + len / 2;
                const double tr = re[v] * cr - im[v] * ci;
                const double ti = re[v] * ci + im[v] * cr;
                re[v] = re[u] - tr;
                im[v] = im[u] - ti;
                re[u] += tr;
                im[u] += ti;
                const double ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
        }
    }
}

static int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

namespace {

// window + filterbank cache, keyed by the analysis configuration
struct MelPlan {
    Vec hann;
    Mat fb;
};

std::shared_ptr<const MelPlan> mel_plan(const MelConfig& cfg, int sample_rate, int n_fft) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<const MelPlan>> cache;

    char key[160];
    std::snprintf(key, sizeof(key), "%d|%d|%d|%d|%.17g|%.17g", sample_rate, cfg.n_mels,
                  cfg.window, n_fft, cfg.f_min, cfg.f_max);
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    auto plan = std::make_shared<MelPlan>();
    plan->hann.resize(cfg.window);
    for (int i = 0; i < cfg.window; ++i)
        plan->hann[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (cfg.window - 1));
    plan->fb = mel_filterbank(cfg, sample_rate, n_fft);
    cache.emplace(key, plan);
    return plan;
}

} // namespace

MelSpectrogram compute_mel(const Waveform& w, const MelConfig& cfg) {
    cfg.validate(w.sample_rate);
    if (w.samples.size() < static_cast<size_t>(cfg.window))
        raise(ErrorCode::InputTooShort, "waveform shorter than one analysis window");

    const int n_frames = mel_frame_count(w.samples.size(), cfg);
    const int n_fft = next_pow2(cfg.window);
    const int n_bins = n_fft / 2 + 1;

    const auto plan = mel_plan(cfg, w.sample_rate, n_fft);
    const Vec& hann = plan->hann;
    const Mat& fb = plan->fb;

    MelSpectrogram out;
    out.data = Mat(n_frames, cfg.n_mels);

    std::vector<double> re(n_fft), im(n_fft), power(n_bins);
    for (int t = 0; t < n_frames; ++t) {
        const float* frame = w.samples.data() + static_cast<size_t>(t) * cfg.hop;
        for (int i = 0; i < cfg.window; ++i) re[i] = static_cast<double>(frame[i]) * hann[i];
        std::fill(re.begin() + cfg.window, re.end(), 0.0);
        std::fill(im.begin(), im.end(), 0.0);
        fft_radix2(re, im);
        for (int k = 0; k < n_bins; ++k) power[k] = re[k] * re[k] + im[k] * im[k];

        double* row = out.data.row(t);
        for (int m = 0; m < cfg.n_mels; ++m) {
            const double e = dot(fb.row(m), power.data(), n_bins);
            row[m] = std::log(std::max(e, cfg.log_floor));
        }
    }
    check_finite(out.data.a.data(), out.data.size(), "mel spectrogram");
    return out;
}

MelSpectrogram normalize(const MelSpectrogram& m, const NormStats& stats) {
    if (static_cast<int>(stats.mean.size()) != m.bins() ||
        static_cast<int>(stats.std.size()) != m.bins())
        raise(ErrorCode::Shape, "normalization stats do not match mel bin count");
    for (double s : stats.std)
        if (s <= 0.0) raise(ErrorCode::Config, "normalization std must be positive");

    MelSpectrogram out;
    out.data = Mat(m.frames(), m.bins());
    for (int t = 0; t < m.frames(); ++t) {
        const double* src = m.data.row(t);
        double* dst = out.data.row(t);
        for (int f = 0; f < m.bins(); ++f) dst[f] = (src[f] - stats.mean[f]) / stats.std[f];
    }
    return out;
}

NormStats compute_norm_stats(const std::vector<MelSpectrogram>& mels) {
    if (mels.empty()) raise(ErrorCode::Config, "cannot compute stats on empty set");
    const int n_bins = mels[0].bins();
    NormStats s;
    s.mean.assign(n_bins, 0.0);
    s.std.assign(n_bins, 0.0);

    size_t n = 0;
    for (const auto& m : mels) {
        if (m.bins() != n_bins) raise(ErrorCode::Shape, "inconsistent mel bin counts");
        for (int t = 0; t < m.frames(); ++t) {
            const double* row = m.data.row(t);
            for (int f = 0; f < n_bins; ++f) s.mean[f] += row[f];
        }
        n += static_cast<size_t>(m.frames());
    }
    for (int f = 0; f < n_bins; ++f) s.mean[f] /= static_cast<double>(n);

    for (const auto& m : mels) {
        for (int t = 0; t < m.frames(); ++t) {
            const double* row = m.data.row(t);
            for (int f = 0; f < n_bins; ++f) {
                const double d = row[f] - s.mean[f];
                s.std[f] += d * d;
            }
        }
    }
    for (int f = 0; f < n_bins; ++f) {
        s.std[f] = std::sqrt(s.std[f] / static_cast<double>(n));
        if (s.std[f] == 0.0)
            raise(ErrorCode::Config, "degenerate pretraining set: zero variance in a mel bin");
    }
    return s;
}

void write_f32_file(const std::string& path, const std::vector<float>& samples) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) raise(ErrorCode::Config, "cannot open for writing: " + path);
    const size_t n = std::fwrite(samples.data(), sizeof(float), samples.size(), f);
    std::fclose(f);
    if (n != samples.size()) raise(ErrorCode::Internal, "short write: " + path);
}

std::vector<float> read_f32_file(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) raise(ErrorCode::Config, "cannot open: " + path);
    std::fseek(f, 0, SEEK_END);
    const long bytes = std::ftell(f);
    std::fseek(f, 0, SEEK_SET);
    if (bytes < 0 || bytes % static_cast<long>(sizeof(float)) != 0) {
        std::fclose(f);
        raise(ErrorCode::Schema, "file size is not a multiple of 4 bytes: " + path);
    }
    std::vector<float> samples(static_cast<size_t>(bytes) / sizeof(float));
    const size_t n = std::fread(samples.data(), sizeof(float), samples.size(), f);
    std::fclose(f);
    if (n != samples.size()) raise(ErrorCode::Internal, "short read: " + path);
    return samples;
}

} // namespace ttapt
