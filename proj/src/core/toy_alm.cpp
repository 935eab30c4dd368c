#include "core/toy_alm.hpp"

#include <algorithm>

#include "core/adamw.hpp"
#include "core/checkpoint.hpp"

namespace ttapt {

void ModelDims::validate() const {
    if (embed_dim < 1 || text_dim < 1 || audio_hidden < 1 || text_hidden < 1)
        raise(ErrorCode::Config, "model dimensions must be positive");
    if (max_tokens < 1) raise(ErrorCode::Config, "max_tokens must be positive");
    if (vocab < 2) raise(ErrorCode::Config, "vocab must hold at least 2 tokens");
    if (n_mels < 2) raise(ErrorCode::Config, "n_mels must be >= 2");
}

ToyModel init_model(const ModelDims& dims, double tau, uint64_t seed) {
    dims.validate();
    if (tau <= 0.0) raise(ErrorCode::Config, "tau must be positive");

    Rng rng(seed, "model_init");
    ToyModel m;
    m.dims = dims;
    m.tau = tau;
    m.norm.mean.assign(dims.n_mels, 0.0);
    m.norm.std.assign(dims.n_mels, 1.0);

    auto scaled = [&](int rows, int cols) {
        return randn(rows, cols, 1.0 / std::sqrt(static_cast<double>(cols)), rng);
    };
    // biases start slightly off zero; an all-zero input must still embed
    auto bias = [&](int n) {
        Vec b(n);
        for (auto& v : b) v = 0.01 * rng.gaussian();
        return b;
    };
    m.tok_table = randn(dims.vocab, dims.text_dim, 0.5, rng);
    m.pos_table = randn(dims.max_tokens, dims.text_dim, 0.1, rng);
    m.a_w1 = scaled(dims.audio_hidden, 2 * dims.n_mels);
    m.a_b1 = bias(dims.audio_hidden);
    m.a_w2 = scaled(dims.embed_dim, dims.audio_hidden);
    m.a_b2 = bias(dims.embed_dim);
    m.t_w1 = scaled(dims.text_hidden, dims.text_dim);
    m.t_b1 = bias(dims.text_hidden);
    m.t_w2 = scaled(dims.text_dim, dims.text_hidden);
    m.t_b2 = bias(dims.text_dim);
    m.t_proj = scaled(dims.embed_dim, dims.text_dim);
    m.t_q = bias(dims.embed_dim);
    return m;
}

Vec pooled_stats(const MelSpectrogram& m) {
    const int F = m.bins(), T = m.frames();
    Vec out(2 * F, 0.0);
    for (int t = 0; t < T; ++t) {
        const double* row = m.data.row(t);
        for (int f = 0; f < F; ++f) out[f] += row[f];
    }
    for (int f = 0; f < F; ++f) out[f] /= T;
    for (int t = 0; t < T; ++t) {
        const double* row = m.data.row(t);
        for (int f = 0; f < F; ++f) {
            const double d = row[f] - out[f];
            out[F + f] += d * d;
        }
    }
    for (int f = 0; f < F; ++f) out[F + f] = std::sqrt(out[F + f] / T);
    return out;
}

static Vec normalize_unit(Vec z, const char* what) {
    const double n = norm2(z.data(), static_cast<int>(z.size()));
    if (!std::isfinite(n) || n < 1e-12)
        raise(ErrorCode::Numerical, std::string("cannot normalize ") + what);
    for (auto& x : z) x /= n;
    return z;
}

Vec encode_audio_from_stats(const ToyModel& model, const Vec& stats_in) {
    if (static_cast<int>(stats_in.size()) != 2 * model.dims.n_mels)
        raise(ErrorCode::Shape, "audio encoder input size mismatch");
    check_finite(stats_in.data(), stats_in.size(), "audio encoder input");

    Vec h(model.dims.audio_hidden);
    matvec(model.a_w1, stats_in.data(), h.data());
    for (int i = 0; i < model.dims.audio_hidden; ++i) h[i] = std::tanh(h[i] + model.a_b1[i]);

    Vec z(model.dims.embed_dim);
    matvec(model.a_w2, h.data(), z.data());
    for (int i = 0; i < model.dims.embed_dim; ++i) z[i] += model.a_b2[i];
    return normalize_unit(std::move(z), "audio embedding");
}

Vec encode_audio(const ToyModel& model, const MelSpectrogram& m) {
    if (m.bins() != model.dims.n_mels) raise(ErrorCode::Shape, "mel bin count mismatch");
    return encode_audio_from_stats(model, pooled_stats(m));
}

TextCache encode_text_cached(const ToyModel& model, const Mat& tokens) {
    const int L = tokens.rows;
    const ModelDims& d = model.dims;
    if (L < 1) raise(ErrorCode::Length, "empty token sequence");
    if (L > d.max_tokens) raise(ErrorCode::Length, "token sequence exceeds max_tokens");
    if (tokens.cols != d.text_dim) raise(ErrorCode::Shape, "token width mismatch");

    TextCache c;
    c.x = Mat(L, d.text_dim);
    c.h = Mat(L, d.text_hidden);
    c.pooled.assign(d.text_dim, 0.0);

    Vec a(d.text_hidden), y(d.text_dim);
    for (int s = 0; s < L; ++s) {
        double* xs = c.x.row(s);
        const double* ts = tokens.row(s);
        const double* ps = model.pos_table.row(s);
        for (int i = 0; i < d.text_dim; ++i) xs[i] = ts[i] + ps[i];

        matvec(model.t_w1, xs, a.data());
        double* hs = c.h.row(s);
        for (int i = 0; i < d.text_hidden; ++i) hs[i] = std::tanh(a[i] + model.t_b1[i]);

        matvec(model.t_w2, hs, y.data());
        for (int i = 0; i < d.text_dim; ++i) c.pooled[i] += y[i] + model.t_b2[i];
    }
    for (int i = 0; i < d.text_dim; ++i) c.pooled[i] /= L;

    c.z.assign(d.embed_dim, 0.0);
    matvec(model.t_proj, c.pooled.data(), c.z.data());
    for (int i = 0; i < d.embed_dim; ++i) c.z[i] += model.t_q[i];

    c.z_norm = norm2(c.z.data(), d.embed_dim);
    if (!std::isfinite(c.z_norm) || c.z_norm < 1e-12)
        raise(ErrorCode::Numerical, "cannot normalize text embedding");
    c.u = c.z;
    for (auto& v : c.u) v /= c.z_norm;
    return c;
}

Vec encode_text(const ToyModel& model, const Mat& tokens) {
    return encode_text_cached(model, tokens).u;
}

// Shared first half of the text backward: upstream on u -> gradient on the
// per-token tanh pre-activations. Returns ga (L x text_hidden) plus the
// intermediate gy (per-token, identical across slots) and gz for param grads.
struct TextBackScratch {
    Vec gz;  // embed_dim
    Vec gy;  // text_dim, gradient on each y_s (same for all s)
    Mat ga;  // L x text_hidden
};

static TextBackScratch text_backward_common(const ToyModel& model, const TextCache& c,
                                            const Vec& upstream) {
    const ModelDims& d = model.dims;
    const int L = c.x.rows;
    if (static_cast<int>(upstream.size()) != d.embed_dim)
        raise(ErrorCode::Shape, "upstream size mismatch");

    TextBackScratch s;
    // through u = z / ||z||:  gz = (g - (g.u) u) / ||z||
    const double gu_dot_u = dot(upstream.data(), c.u.data(), d.embed_dim);
    s.gz.resize(d.embed_dim);
    for (int i = 0; i < d.embed_dim; ++i)
        s.gz[i] = (upstream[i] - gu_dot_u * c.u[i]) / c.z_norm;

    Vec gm(d.text_dim, 0.0);
    matvec_t_acc(model.t_proj, s.gz.data(), gm.data());

    s.gy.resize(d.text_dim);
    for (int i = 0; i < d.text_dim; ++i) s.gy[i] = gm[i] / L;

    Vec gh(d.text_hidden, 0.0);
    matvec_t_acc(model.t_w2, s.gy.data(), gh.data());

    s.ga = Mat(L, d.text_hidden);
    for (int sl = 0; sl < L; ++sl) {
        const double* hs = c.h.row(sl);
        double* gas = s.ga.row(sl);
        for (int i = 0; i < d.text_hidden; ++i) gas[i] = (1.0 - hs[i] * hs[i]) * gh[i];
    }
    return s;
}

Mat text_vjp_from_cache(const ToyModel& model, const TextCache& cache, const Vec& upstream) {
    const int L = cache.x.rows;
    TextBackScratch s = text_backward_common(model, cache, upstream);
    Mat gt(L, model.dims.text_dim);
    for (int sl = 0; sl < L; ++sl) {
        std::fill(gt.row(sl), gt.row(sl) + model.dims.text_dim, 0.0);
        matvec_t_acc(model.t_w1, s.ga.row(sl), gt.row(sl));
    }
    return gt;
}

Mat encode_text_vjp(const ToyModel& model, const Mat& tokens, const Vec& upstream) {
    return text_vjp_from_cache(model, encode_text_cached(model, tokens), upstream);
}

Mat logits(const Mat& v, const Mat& u, double tau) {
    if (v.cols != u.cols) raise(ErrorCode::Shape, "embedding dimensions differ");
    Mat g(v.rows, u.rows);
    for (int i = 0; i < v.rows; ++i)
        for (int c = 0; c < u.rows; ++c) g(i, c) = dot(v.row(i), u.row(c), v.cols) / tau;
    return g;
}

Mat logits_per_view(const Mat& v, const std::vector<Mat>& u, double tau) {
    if (static_cast<int>(u.size()) != v.rows)
        raise(ErrorCode::Shape, "need one text embedding set per view");
    const int n_classes = u.empty() ? 0 : u[0].rows;
    Mat g(v.rows, n_classes);
    for (int i = 0; i < v.rows; ++i) {
        if (u[i].rows != n_classes || u[i].cols != v.cols)
            raise(ErrorCode::Shape, "text embedding set shape mismatch");
        for (int c = 0; c < n_classes; ++c) g(i, c) = dot(v.row(i), u[i].row(c), v.cols) / tau;
    }
    return g;
}

Vec softmax(const double* s, int n) {
    double mx = s[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, s[i]);
    Vec p(n);
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
        p[i] = std::exp(s[i] - mx);
        z += p[i];
    }
    for (int i = 0; i < n; ++i) p[i] /= z;
    return p;
}

Mat gather_tokens(const ToyModel& model, const std::vector<int>& ids) {
    Mat t(static_cast<int>(ids.size()), model.dims.text_dim);
    for (size_t s = 0; s < ids.size(); ++s) {
        if (ids[s] < 0 || ids[s] >= model.dims.vocab)
            raise(ErrorCode::Artifact, "token id out of vocab range");
        const double* src = model.tok_table.row(ids[s]);
        std::copy(src, src + model.dims.text_dim, t.row(static_cast<int>(s)));
    }
    return t;
}

Vec zero_shot_distribution(const ToyModel& model, const Vec& audio_emb,
                           const std::vector<std::vector<int>>& class_tokens) {
    const int n = static_cast<int>(class_tokens.size());
    Vec scores(n);
    for (int c = 0; c < n; ++c) {
        const Vec u = encode_text(model, gather_tokens(model, class_tokens[c]));
        scores[c] = dot(audio_emb.data(), u.data(), model.dims.embed_dim) / model.tau;
    }
    return softmax(scores.data(), n);
}

// ---- pretraining -----------------------------------------------------------

namespace {

// flat views over everything the pretraining loop updates
struct ParamSeg {
    double* w;
    double* g;
    size_t n;
};

struct PretrainGrads {
    Mat tok_table, pos_table, a_w1, a_w2, t_w1, t_w2, t_proj;
    Vec a_b1, a_b2, t_b1, t_b2, t_q;

    explicit PretrainGrads(const ToyModel& m)
        : tok_table(m.tok_table.rows, m.tok_table.cols),
          pos_table(m.pos_table.rows, m.pos_table.cols),
          a_w1(m.a_w1.rows, m.a_w1.cols),
          a_w2(m.a_w2.rows, m.a_w2.cols),
          t_w1(m.t_w1.rows, m.t_w1.cols),
          t_w2(m.t_w2.rows, m.t_w2.cols),
          t_proj(m.t_proj.rows, m.t_proj.cols),
          a_b1(m.a_b1.size(), 0.0),
          a_b2(m.a_b2.size(), 0.0),
          t_b1(m.t_b1.size(), 0.0),
          t_b2(m.t_b2.size(), 0.0),
          t_q(m.t_q.size(), 0.0) {}

    void zero() {
        for (Mat* m : {&tok_table, &pos_table, &a_w1, &a_w2, &t_w1, &t_w2, &t_proj})
            std::fill(m->a.begin(), m->a.end(), 0.0);
        for (Vec* v : {&a_b1, &a_b2, &t_b1, &t_b2, &t_q})
            std::fill(v->begin(), v->end(), 0.0);
    }
};

std::vector<ParamSeg> param_segments(ToyModel& m, PretrainGrads& g) {
    return {
        {m.tok_table.a.data(), g.tok_table.a.data(), m.tok_table.size()},
        {m.pos_table.a.data(), g.pos_table.a.data(), m.pos_table.size()},
        {m.a_w1.a.data(), g.a_w1.a.data(), m.a_w1.size()},
        {m.a_b1.data(), g.a_b1.data(), m.a_b1.size()},
        {m.a_w2.a.data(), g.a_w2.a.data(), m.a_w2.size()},
        {m.a_b2.data(), g.a_b2.data(), m.a_b2.size()},
        {m.t_w1.a.data(), g.t_w1.a.data(), m.t_w1.size()},
        {m.t_b1.data(), g.t_b1.data(), m.t_b1.size()},
        {m.t_w2.a.data(), g.t_w2.a.data(), m.t_w2.size()},
        {m.t_b2.data(), g.t_b2.data(), m.t_b2.size()},
        {m.t_proj.a.data(), g.t_proj.a.data(), m.t_proj.size()},
        {m.t_q.data(), g.t_q.data(), m.t_q.size()},
    };
}

struct AudioCache {
    Vec in;     // 2F
    Vec h;      // audio_hidden, tanh activations
    Vec z;      // embed_dim
    double z_norm = 0.0;
    Vec v;      // unit
};

AudioCache encode_audio_cached(const ToyModel& model, const Vec& stats_in) {
    AudioCache c;
    c.in = stats_in;
    c.h.resize(model.dims.audio_hidden);
    matvec(model.a_w1, c.in.data(), c.h.data());
    for (int i = 0; i < model.dims.audio_hidden; ++i) c.h[i] = std::tanh(c.h[i] + model.a_b1[i]);
    c.z.assign(model.dims.embed_dim, 0.0);
    matvec(model.a_w2, c.h.data(), c.z.data());
    for (int i = 0; i < model.dims.embed_dim; ++i) c.z[i] += model.a_b2[i];
    c.z_norm = norm2(c.z.data(), model.dims.embed_dim);
    if (c.z_norm < 1e-12) raise(ErrorCode::Numerical, "cannot normalize audio embedding");
    c.v = c.z;
    for (auto& x : c.v) x /= c.z_norm;
    return c;
}

void audio_backward(const ToyModel& model, const AudioCache& c, const Vec& gv,
                    PretrainGrads& g) {
    const ModelDims& d = model.dims;
    const double gv_dot_v = dot(gv.data(), c.v.data(), d.embed_dim);
    Vec gz(d.embed_dim);
    for (int i = 0; i < d.embed_dim; ++i) gz[i] = (gv[i] - gv_dot_v * c.v[i]) / c.z_norm;

    for (int r = 0; r < d.embed_dim; ++r) {
        double* row = g.a_w2.row(r);
        for (int cix = 0; cix < d.audio_hidden; ++cix) row[cix] += gz[r] * c.h[cix];
        g.a_b2[r] += gz[r];
    }
    Vec gh(d.audio_hidden, 0.0);
    matvec_t_acc(model.a_w2, gz.data(), gh.data());
    for (int i = 0; i < d.audio_hidden; ++i) gh[i] *= (1.0 - c.h[i] * c.h[i]);
    for (int r = 0; r < d.audio_hidden; ++r) {
        double* row = g.a_w1.row(r);
        for (int cix = 0; cix < 2 * d.n_mels; ++cix) row[cix] += gh[r] * c.in[cix];
        g.a_b1[r] += gh[r];
    }
}

void text_backward_params(const ToyModel& model, const TextCache& c,
                          const std::vector<int>& token_ids, const Vec& upstream,
                          PretrainGrads& g) {
    const ModelDims& d = model.dims;
    const int L = c.x.rows;
    TextBackScratch s = text_backward_common(model, c, upstream);

    // projection
    for (int r = 0; r < d.embed_dim; ++r) {
        double* row = g.t_proj.row(r);
        for (int cix = 0; cix < d.text_dim; ++cix) row[cix] += s.gz[r] * c.pooled[cix];
        g.t_q[r] += s.gz[r];
    }
    // per-token block; gy identical across slots
    Vec h_sum(d.text_hidden, 0.0);
    for (int sl = 0; sl < L; ++sl) {
        const double* hs = c.h.row(sl);
        for (int i = 0; i < d.text_hidden; ++i) h_sum[i] += hs[i];
    }
    for (int r = 0; r < d.text_dim; ++r) {
        double* row = g.t_w2.row(r);
        for (int cix = 0; cix < d.text_hidden; ++cix) row[cix] += s.gy[r] * h_sum[cix];
        g.t_b2[r] += s.gy[r] * L;
    }
    Vec gx(d.text_dim);
    for (int sl = 0; sl < L; ++sl) {
        const double* gas = s.ga.row(sl);
        const double* xs = c.x.row(sl);
        for (int r = 0; r < d.text_hidden; ++r) {
            double* row = g.t_w1.row(r);
            for (int cix = 0; cix < d.text_dim; ++cix) row[cix] += gas[r] * xs[cix];
            g.t_b1[r] += gas[r];
        }
        std::fill(gx.begin(), gx.end(), 0.0);
        matvec_t_acc(model.t_w1, gas, gx.data());
        double* gpos = g.pos_table.row(sl);
        double* gtok = g.tok_table.row(token_ids[sl]);
        for (int i = 0; i < d.text_dim; ++i) {
            gpos[i] += gx[i];
            gtok[i] += gx[i];
        }
    }
}

} // namespace

PretrainResult pretrain_toy(ToyModel& model, const std::vector<PretrainExample>& train,
                            const std::vector<PretrainExample>& val,
                            const std::vector<std::vector<int>>& class_tokens,
                            const PretrainConfig& cfg) {
    const int n_classes = static_cast<int>(class_tokens.size());
    if (n_classes < 2) raise(ErrorCode::Config, "pretraining needs at least 2 classes");
    if (train.empty() || val.empty()) raise(ErrorCode::Config, "empty pretraining split");

    std::vector<std::vector<int>> by_class(n_classes);
    for (size_t i = 0; i < train.size(); ++i) {
        if (train[i].label < 0 || train[i].label >= n_classes)
            raise(ErrorCode::Config, "train label out of range");
        by_class[train[i].label].push_back(static_cast<int>(i));
    }
    size_t per_class = train.size();
    for (const auto& v : by_class) {
        if (v.empty()) raise(ErrorCode::Config, "a class has no pretraining examples");
        per_class = std::min(per_class, v.size());
    }

    auto val_accuracy = [&]() {
        int correct = 0;
        for (const auto& ex : val) {
            const Vec v = encode_audio_from_stats(model, ex.stats);
            const Vec p = zero_shot_distribution(model, v, class_tokens);
            const int pred = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
            if (pred == ex.label) ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(val.size());
    };

    PretrainGrads grads(model);
    auto segs = param_segments(model, grads);
    std::vector<AdamWState> opt(segs.size());
    for (size_t i = 0; i < segs.size(); ++i) opt[i].init(segs[i].n);
    AdamWConfig opt_cfg;
    opt_cfg.weight_decay = 0.0;

    Rng shuffle_rng(cfg.seed, "pretrain_shuffle");
    PretrainResult res;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // deterministic per-class shuffles; each batch holds one clip per class
        for (auto& idxs : by_class) {
            for (size_t i = idxs.size(); i > 1; --i)
                std::swap(idxs[i - 1], idxs[shuffle_rng.below(i)]);
        }

        double epoch_loss = 0.0;
        for (size_t b = 0; b < per_class; ++b) {
            grads.zero();

            std::vector<AudioCache> ac(n_classes);
            std::vector<TextCache> tc(n_classes);
            Mat v(n_classes, model.dims.embed_dim), u(n_classes, model.dims.embed_dim);
            for (int c = 0; c < n_classes; ++c) {
                ac[c] = encode_audio_cached(model, train[by_class[c][b]].stats);
                tc[c] = encode_text_cached(model, gather_tokens(model, class_tokens[c]));
                std::copy(ac[c].v.begin(), ac[c].v.end(), v.row(c));
                std::copy(tc[c].u.begin(), tc[c].u.end(), u.row(c));
            }

            const Mat s = logits(v, u, model.tau);

            // symmetric InfoNCE: audio->text rows and text->audio columns
            Mat gs(n_classes, n_classes);
            double loss = 0.0;
            const double inv = 1.0 / (2.0 * n_classes);
            for (int i = 0; i < n_classes; ++i) {
                const Vec p = softmax(s.row(i), n_classes);
                loss += -std::log(std::max(p[i], 1e-300)) * inv;
                for (int c = 0; c < n_classes; ++c)
                    gs(i, c) = (p[c] - (c == i ? 1.0 : 0.0)) * inv;
            }
            Vec col(n_classes);
            for (int c = 0; c < n_classes; ++c) {
                for (int i = 0; i < n_classes; ++i) col[i] = s(i, c);
                const Vec p = softmax(col.data(), n_classes);
                loss += -std::log(std::max(p[c], 1e-300)) * inv;
                for (int i = 0; i < n_classes; ++i)
                    gs(i, c) += (p[i] - (i == c ? 1.0 : 0.0)) * inv;
            }

            // ds/dv_i = u_c / tau, ds/du_c = v_i / tau
            for (int i = 0; i < n_classes; ++i) {
                Vec gv(model.dims.embed_dim, 0.0);
                for (int c = 0; c < n_classes; ++c) {
                    const double w = gs(i, c) / model.tau;
                    const double* uc = u.row(c);
                    for (int k = 0; k < model.dims.embed_dim; ++k) gv[k] += w * uc[k];
                }
                audio_backward(model, ac[i], gv, grads);
            }
            for (int c = 0; c < n_classes; ++c) {
                Vec gu(model.dims.embed_dim, 0.0);
                for (int i = 0; i < n_classes; ++i) {
                    const double w = gs(i, c) / model.tau;
                    const double* vi = v.row(i);
                    for (int k = 0; k < model.dims.embed_dim; ++k) gu[k] += w * vi[k];
                }
                text_backward_params(model, tc[c], class_tokens[c], gu, grads);
            }

            for (size_t i = 0; i < segs.size(); ++i)
                adamw_step(segs[i].w, segs[i].g, segs[i].n, opt[i], cfg.lr, opt_cfg);
            epoch_loss += loss;
        }

        res.epochs_run = epoch + 1;
        res.final_loss = epoch_loss / static_cast<double>(per_class);
        res.val_acc = val_accuracy();
        if (res.val_acc >= cfg.target_acc) return res;
    }
    raise(ErrorCode::PretrainDivergence,
          "pretraining exhausted its epoch budget below the target accuracy");
}

// ---- checkpoint ------------------------------------------------------------

void save_model(const std::string& path, const ToyModel& m) {
    nlohmann::json hdr = {
        {"kind", "model"},
        {"embed_dim", m.dims.embed_dim},
        {"text_dim", m.dims.text_dim},
        {"audio_hidden", m.dims.audio_hidden},
        {"text_hidden", m.dims.text_hidden},
        {"max_tokens", m.dims.max_tokens},
        {"vocab", m.dims.vocab},
        {"n_mels", m.dims.n_mels},
        {"tau", m.tau},
    };
    write_checkpoint(path, hdr,
                     {
                         {"norm_mean", m.norm.mean},
                         {"norm_std", m.norm.std},
                         {"tok_table", m.tok_table.a},
                         {"pos_table", m.pos_table.a},
                         {"a_w1", m.a_w1.a},
                         {"a_b1", m.a_b1},
                         {"a_w2", m.a_w2.a},
                         {"a_b2", m.a_b2},
                         {"t_w1", m.t_w1.a},
                         {"t_b1", m.t_b1},
                         {"t_w2", m.t_w2.a},
                         {"t_b2", m.t_b2},
                         {"t_proj", m.t_proj.a},
                         {"t_q", m.t_q},
                     });
}

ToyModel load_model(const std::string& path) {
    const LoadedCheckpoint ck = read_checkpoint(path);
    if (ck.header.value("kind", "") != "model")
        raise(ErrorCode::Schema, "not a model checkpoint: " + path);

    ToyModel m;
    try {
        m.dims.embed_dim = ck.header.at("embed_dim");
        m.dims.text_dim = ck.header.at("text_dim");
        m.dims.audio_hidden = ck.header.at("audio_hidden");
        m.dims.text_hidden = ck.header.at("text_hidden");
        m.dims.max_tokens = ck.header.at("max_tokens");
        m.dims.vocab = ck.header.at("vocab");
        m.dims.n_mels = ck.header.at("n_mels");
        m.tau = ck.header.at("tau");
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::Schema, "malformed model header in " + path + ": " + e.what());
    }
    m.dims.validate();

    auto mat = [&](const std::string& name, int rows, int cols) {
        const Vec& v = ck.block(name);
        if (v.size() != static_cast<size_t>(rows) * cols)
            raise(ErrorCode::Schema, "block '" + name + "' has unexpected size in " + path);
        Mat out(rows, cols);
        out.a = v;
        return out;
    };
    const ModelDims& d = m.dims;
    m.norm.mean = ck.block("norm_mean");
    m.norm.std = ck.block("norm_std");
    m.tok_table = mat("tok_table", d.vocab, d.text_dim);
    m.pos_table = mat("pos_table", d.max_tokens, d.text_dim);
    m.a_w1 = mat("a_w1", d.audio_hidden, 2 * d.n_mels);
    m.a_b1 = ck.block("a_b1");
    m.a_w2 = mat("a_w2", d.embed_dim, d.audio_hidden);
    m.a_b2 = ck.block("a_b2");
    m.t_w1 = mat("t_w1", d.text_hidden, d.text_dim);
    m.t_b1 = ck.block("t_b1");
    m.t_w2 = mat("t_w2", d.text_dim, d.text_hidden);
    m.t_b2 = ck.block("t_b2");
    m.t_proj = mat("t_proj", d.embed_dim, d.text_dim);
    m.t_q = ck.block("t_q");
    return m;
}

} // namespace ttapt
