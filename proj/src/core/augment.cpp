#include "core/augment.hpp"

namespace ttapt {

const char* aug_op_name(AugOp op) {
    switch (op) {
        case AugOp::ID: return "ID";
        case AugOp::TM: return "TM";
        case AugOp::FM: return "FM";
        case AugOp::TFM: return "TFM";
        case AugOp::TR: return "TR";
    }
    return "?";
}

static double matrix_mean(const MelSpectrogram& x) {
    double s = 0.0;
    for (double v : x.data.a) s += v;
    return s / static_cast<double>(x.data.size());
}

MelSpectrogram time_mask(const MelSpectrogram& x, int start, int width) {
    if (start < 0 || width < 0 || start + width > x.frames())
        raise(ErrorCode::MaskRange, "time mask window out of range");
    MelSpectrogram out = x;
    const double fill = matrix_mean(x);
    for (int t = start; t < start + width; ++t) {
        double* row = out.data.row(t);
        for (int f = 0; f < x.bins(); ++f) row[f] = fill;
    }
    return out;
}

MelSpectrogram freq_mask(const MelSpectrogram& x, int start, int width) {
    if (start < 0 || width < 0 || start + width > x.bins())
        raise(ErrorCode::MaskRange, "frequency mask window out of range");
    MelSpectrogram out = x;
    const double fill = matrix_mean(x);
    for (int t = 0; t < x.frames(); ++t) {
        double* row = out.data.row(t);
        for (int f = start; f < start + width; ++f) row[f] = fill;
    }
    return out;
}

MelSpectrogram time_freq_mask(const MelSpectrogram& x, int t_start, int t_width,
                              int f_start, int f_width) {
    if (t_start < 0 || t_width < 0 || t_start + t_width > x.frames())
        raise(ErrorCode::MaskRange, "time mask window out of range");
    if (f_start < 0 || f_width < 0 || f_start + f_width > x.bins())
        raise(ErrorCode::MaskRange, "frequency mask window out of range");
    MelSpectrogram out = x;
    const double fill = matrix_mean(x); // original mean for both fills
    for (int t = t_start; t < t_start + t_width; ++t) {
        double* row = out.data.row(t);
        for (int f = 0; f < x.bins(); ++f) row[f] = fill;
    }
    for (int t = 0; t < x.frames(); ++t) {
        double* row = out.data.row(t);
        for (int f = f_start; f < f_start + f_width; ++f) row[f] = fill;
    }
    return out;
}

MelSpectrogram time_reorder(const MelSpectrogram& x) {
    if (x.frames() < 2) raise(ErrorCode::InputTooShort, "time_reorder needs at least 2 frames");
    const int k = x.frames() / 2;
    MelSpectrogram out;
    out.data = Mat(x.frames(), x.bins());
    for (int t = 0; t < x.frames(); ++t) {
        const int src = (t < x.frames() - k) ? t + k : t - (x.frames() - k);
        const double* s = x.data.row(src);
        double* d = out.data.row(t);
        for (int f = 0; f < x.bins(); ++f) d[f] = s[f];
    }
    return out;
}

ViewSet make_views(const MelSpectrogram& x, const AugmentConfig& cfg) {
    if (cfg.n_views < 1) raise(ErrorCode::Config, "n_views must be >= 1");
    const int T = x.frames(), F = x.bins();
    const int max_t = std::min(cfg.max_time_mask, T - 1);
    const int max_f = std::min(cfg.max_freq_mask, F - 1);
    if (cfg.n_views > 1 && (max_t < 1 || max_f < 1))
        raise(ErrorCode::Config, "spectrogram too small for the configured masks");

    static const AugOp cycle[4] = {AugOp::TM, AugOp::FM, AugOp::TFM, AugOp::TR};

    ViewSet vs;
    vs.views.reserve(cfg.n_views);
    vs.provenance.reserve(cfg.n_views);
    vs.views.push_back(x);
    vs.provenance.push_back(ViewProvenance{});

    for (int i = 1; i < cfg.n_views; ++i) {
        Rng rng(hash_combine(cfg.seed, static_cast<uint64_t>(i)));
        ViewProvenance p;
        p.op = cycle[(i - 1) % 4];
        switch (p.op) {
            case AugOp::TM: {
                p.t_width = static_cast<int>(rng.range(1, max_t));
                p.t_start = static_cast<int>(rng.range(0, T - p.t_width));
                vs.views.push_back(time_mask(x, p.t_start, p.t_width));
                break;
            }
            case AugOp::FM: {
                p.f_width = static_cast<int>(rng.range(1, max_f));
                p.f_start = static_cast<int>(rng.range(0, F - p.f_width));
                vs.views.push_back(freq_mask(x, p.f_start, p.f_width));
                break;
            }
            case AugOp::TFM: {
                p.t_width = static_cast<int>(rng.range(1, max_t));
                p.t_start = static_cast<int>(rng.range(0, T - p.t_width));
                p.f_width = static_cast<int>(rng.range(1, max_f));
                p.f_start = static_cast<int>(rng.range(0, F - p.f_width));
                vs.views.push_back(time_freq_mask(x, p.t_start, p.t_width, p.f_start, p.f_width));
                break;
            }
            case AugOp::TR: {
                vs.views.push_back(time_reorder(x));
                break;
            }
            case AugOp::ID: break;
        }
        vs.provenance.push_back(p);
    }
    return vs;
}

} // namespace ttapt
