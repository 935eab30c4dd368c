#include "core/tta_engine.hpp"

#include <algorithm>
#include <cmath>

#include "core/checkpoint.hpp"

namespace ttapt {

static constexpr double kLogEps = 1e-12;

void AdaptConfig::validate() const {
    if (lr <= 0.0) raise(ErrorCode::Config, "lr must be positive");
    if (steps_per_batch < 0) raise(ErrorCode::Config, "steps_per_batch must be >= 0");
    if (batch_size < 1) raise(ErrorCode::Config, "batch_size must be >= 1");
    if (lambda_contrastive < 0.0) raise(ErrorCode::Config, "lambda_contrastive must be >= 0");
    if (n_views < 1) raise(ErrorCode::Config, "n_views must be >= 1");
    if (disable_cnet && disable_dnet)
        raise(ErrorCode::Config, "both prompt nets disabled: nothing to adapt");
    if (disable_contrastive && disable_entropy)
        raise(ErrorCode::Config, "both losses disabled: nothing to optimize");
}

int argmax_lowest_tie(const Vec& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

static Vec mean_embedding(const Mat& v) {
    Vec m(v.cols, 0.0);
    for (int i = 0; i < v.rows; ++i) {
        const double* row = v.row(i);
        for (int c = 0; c < v.cols; ++c) m[c] += row[c];
    }
    for (auto& x : m) x /= v.rows;
    const double n = norm2(m.data(), static_cast<int>(m.size()));
    if (n < 1e-12) raise(ErrorCode::Numerical, "degenerate view-mean embedding");
    for (auto& x : m) x /= n;
    return m;
}

SampleForward forward_sample(const ToyModel& model, const PromptState& state,
                             const ViewSet& views, const AdaptConfig& cfg) {
    const int M = views.size();
    const int N = state.n_classes();
    const int d = model.dims.embed_dim;

    SampleForward f;
    f.v = Mat(M, d);
    for (int i = 0; i < M; ++i) {
        const Vec vi = encode_audio(model, views.views[i]);
        std::copy(vi.begin(), vi.end(), f.v.row(i));
    }

    const int n_cond = cfg.condition_on_mean ? 1 : M;
    f.c_caches.reserve(n_cond);
    f.d_caches.reserve(n_cond);
    f.text.resize(n_cond);

    Vec zero_offset(state.text_dim, 0.0);
    Mat empty_domain(0, state.text_dim);

    for (int j = 0; j < n_cond; ++j) {
        Vec cond(d);
        if (cfg.condition_on_mean) {
            cond = mean_embedding(f.v);
        } else {
            std::copy(f.v.row(j), f.v.row(j) + d, cond.begin());
        }
        f.c_caches.push_back(state.c_net.forward(cond));
        f.d_caches.push_back(state.d_net.forward(cond));

        const Vec& offset = cfg.disable_cnet ? zero_offset : f.c_caches.back().output;
        Mat domain(0, state.text_dim);
        if (!cfg.disable_dnet) {
            domain = Mat(state.domain_tokens, state.text_dim);
            const Vec& flat = f.d_caches.back().output;
            std::copy(flat.begin(), flat.begin() + domain.size(), domain.a.begin());
        }

        f.text[j].reserve(N);
        for (int c = 0; c < N; ++c) {
            const Mat tokens = compose_prompt(state, c, offset,
                                              cfg.disable_dnet ? empty_domain : domain,
                                              !cfg.disable_dnet, model.dims.max_tokens);
            f.text[j].push_back(encode_text_cached(model, tokens));
        }
    }

    f.g = Mat(M, N);
    f.g_avg.assign(N, 0.0);
    Vec scores(N);
    for (int i = 0; i < M; ++i) {
        const int j = cfg.condition_on_mean ? 0 : i;
        for (int c = 0; c < N; ++c)
            scores[c] = dot(f.v.row(i), f.text[j][c].u.data(), d) / model.tau;
        const Vec p = softmax(scores.data(), N);
        double sum = 0.0;
        for (int c = 0; c < N; ++c) {
            f.g(i, c) = p[c];
            f.g_avg[c] += p[c] / M;
            sum += p[c];
        }
        if (std::abs(sum - 1.0) > 1e-6)
            raise(ErrorCode::Numerical, "per-view distribution does not sum to 1");
    }
    return f;
}

std::vector<SampleForward> forward_batch(const ToyModel& model, const PromptState& state,
                                         const std::vector<ViewSet>& batch,
                                         const AdaptConfig& cfg) {
    std::vector<SampleForward> out;
    out.reserve(batch.size());
    for (const auto& views : batch) out.push_back(forward_sample(model, state, views, cfg));
    return out;
}

double consistency_loss(const std::vector<Vec>& g_avg) {
    double total = 0.0;
    for (const auto& g : g_avg) {
        double h = 0.0;
        for (double p : g) h -= p * std::log(p + kLogEps);
        total += h;
    }
    return total / static_cast<double>(g_avg.size());
}

double contrastive_loss(const std::vector<Vec>& g_avg) {
    const int B = static_cast<int>(g_avg.size());
    if (B < 2) return 0.0;
    const int N = static_cast<int>(g_avg[0].size());
    const double pairs = 0.5 * B * (B - 1);

    double total = 0.0;
    for (int k1 = 0; k1 < B; ++k1) {
        for (int k2 = k1 + 1; k2 < B; ++k2) {
            double mse = 0.0;
            for (int c = 0; c < N; ++c) {
                const double diff = g_avg[k1][c] - g_avg[k2][c];
                mse += diff * diff;
            }
            total += mse / N;
        }
    }
    return -total / pairs;
}

LossReport final_loss(const std::vector<Vec>& g_avg, const AdaptConfig& cfg) {
    if (cfg.disable_contrastive && cfg.disable_entropy)
        raise(ErrorCode::Config, "both losses disabled: nothing to optimize");
    const int N = static_cast<int>(g_avg[0].size());

    LossReport r;
    if (!cfg.disable_entropy) {
        r.consistency = consistency_loss(g_avg);
        if (*r.consistency < -1e-9 || *r.consistency > std::log(static_cast<double>(N)) + 1e-9)
            raise(ErrorCode::Numerical, "consistency loss outside [0, ln N]");
        r.final_loss += *r.consistency;
    }
    if (!cfg.disable_contrastive) {
        r.contrastive = contrastive_loss(g_avg);
        if (*r.contrastive > 1e-9 || *r.contrastive < -2.0 / N - 1e-9)
            raise(ErrorCode::Numerical, "contrastive loss outside [-2/N, 0]");
        r.final_loss += cfg.lambda_contrastive * *r.contrastive;
    }
    return r;
}

PromptGradients backward_batch(const ToyModel& model, const PromptState& state,
                               const std::vector<SampleForward>& fwd, const AdaptConfig& cfg) {
    const int B = static_cast<int>(fwd.size());
    const int N = state.n_classes();
    const int d = model.dims.embed_dim;

    PromptGradients grads;
    grads.init(state);

    for (int k = 0; k < B; ++k) {
        const SampleForward& f = fwd[k];
        const int M = f.g.rows;

        // d(loss)/d(g_avg_k)
        Vec dg_avg(N, 0.0);
        if (!cfg.disable_entropy) {
            // batch-mean of -sum g ln(g + eps)
            for (int c = 0; c < N; ++c) {
                const double g = f.g_avg[c];
                dg_avg[c] += (-std::log(g + kLogEps) - g / (g + kLogEps)) / B;
            }
        }
        if (!cfg.disable_contrastive && B >= 2) {
            const double pairs = 0.5 * B * (B - 1);
            for (int c = 0; c < N; ++c) {
                double acc = 0.0;
                for (int j = 0; j < B; ++j) {
                    if (j == k) continue;
                    acc += 2.0 * (f.g_avg[c] - fwd[j].g_avg[c]);
                }
                dg_avg[c] += cfg.lambda_contrastive * (-acc / (N * pairs));
            }
        }

        const int n_cond = cfg.condition_on_mean ? 1 : M;
        // du accumulators per conditioning set and class
        std::vector<Mat> du(n_cond, Mat(N, d));

        Vec ds(N);
        for (int i = 0; i < M; ++i) {
            // softmax backward on view i; dg for the view is dg_avg / M
            double inner = 0.0;
            for (int c = 0; c < N; ++c) inner += dg_avg[c] * f.g(i, c);
            for (int c = 0; c < N; ++c) ds[c] = f.g(i, c) * (dg_avg[c] - inner) / M;

            const int j = cfg.condition_on_mean ? 0 : i;
            for (int c = 0; c < N; ++c) {
                const double w = ds[c] / model.tau;
                const double* vi = f.v.row(i);
                double* du_row = du[j].row(c);
                for (int e = 0; e < d; ++e) du_row[e] += w * vi[e];
            }
        }

        for (int j = 0; j < n_cond; ++j) {
            for (int c = 0; c < N; ++c) {
                Vec upstream(du[j].row(c), du[j].row(c) + d);
                const Mat token_grads = text_vjp_from_cache(model, f.text[j][c], upstream);
                prompt_vjp(state, f.c_caches[j], f.d_caches[j], token_grads, !cfg.disable_cnet,
                           !cfg.disable_dnet, grads);
            }
        }
    }

    check_finite(grads.theta1.data(), grads.theta1.size(), "theta1 gradient");
    check_finite(grads.theta2.data(), grads.theta2.size(), "theta2 gradient");
    return grads;
}

void adamw_step_prompts(PromptState& state, const PromptGradients& grads, OptimizerState& opt,
                        double lr) {
    adamw_step(state.c_net.w.data(), grads.theta1.data(), grads.theta1.size(), opt.theta1, lr,
               opt.cfg);
    adamw_step(state.d_net.w.data(), grads.theta2.data(), grads.theta2.size(), opt.theta2, lr,
               opt.cfg);
}

TraceWriter::TraceWriter(const std::string& path) {
    f_ = std::fopen(path.c_str(), "wb");
    if (!f_) raise(ErrorCode::Config, "cannot open for writing: " + path);
}

TraceWriter::~TraceWriter() {
    if (f_) std::fclose(f_);
}

void TraceWriter::write_step(const StepRecord& r) {
    nlohmann::json j = {{"type", "step"}, {"batch", r.batch}, {"step", r.step},
                        {"loss_final", r.loss.final_loss}};
    if (r.loss.consistency) j["loss_consistency"] = *r.loss.consistency;
    if (r.loss.contrastive) j["loss_contrastive"] = *r.loss.contrastive;
    const std::string line = j.dump() + "\n";
    std::fwrite(line.data(), 1, line.size(), f_);
}

void TraceWriter::write_pred(const Prediction& p) {
    nlohmann::json j = {{"type", "pred"}, {"clip", p.clip_id}, {"pred", p.predicted}};
    const std::string line = j.dump() + "\n";
    std::fwrite(line.data(), 1, line.size(), f_);
}

void TraceWriter::write_reset(int batch_index) {
    nlohmann::json j = {{"type", "reset"}, {"batch", batch_index}};
    const std::string line = j.dump() + "\n";
    std::fwrite(line.data(), 1, line.size(), f_);
}

static std::vector<ViewSet> make_batch_views(const std::vector<EngineSample>& batch,
                                             const AdaptConfig& cfg) {
    std::vector<ViewSet> views;
    views.reserve(batch.size());
    for (const auto& s : batch) {
        AugmentConfig acfg;
        acfg.n_views = cfg.n_views;
        acfg.max_time_mask = cfg.max_time_mask;
        acfg.max_freq_mask = cfg.max_freq_mask;
        // keyed by clip id, not stream position: batch order cannot leak in
        acfg.seed = hash_combine(stream_key(cfg.seed, "augment"),
                                 static_cast<uint64_t>(s.clip_id));
        views.push_back(make_views(s.mel, acfg));
    }
    return views;
}

AdaptBatchResult adapt_batch(const ToyModel& model, PromptState& state, OptimizerState& opt,
                             const std::vector<EngineSample>& batch, const AdaptConfig& cfg,
                             int batch_index, TraceWriter* trace) {
    cfg.validate();
    const std::vector<ViewSet> views = make_batch_views(batch, cfg);

    AdaptBatchResult res;
    for (int step = 0; step < cfg.steps_per_batch; ++step) {
        const auto fwd = forward_batch(model, state, views, cfg);
        std::vector<Vec> g_avg;
        g_avg.reserve(fwd.size());
        for (const auto& f : fwd) g_avg.push_back(f.g_avg);

        StepRecord rec;
        rec.batch = batch_index;
        rec.step = step;
        rec.loss = final_loss(g_avg, cfg);
        res.trace.push_back(rec);
        if (trace) trace->write_step(rec);

        const PromptGradients grads = backward_batch(model, state, fwd, cfg);
        adamw_step_prompts(state, grads, opt, cfg.lr);
    }

    // predictions under the final parameters
    const auto fwd = forward_batch(model, state, views, cfg);
    for (size_t k = 0; k < batch.size(); ++k) {
        Prediction p;
        p.clip_id = batch[k].clip_id;
        p.predicted = argmax_lowest_tie(fwd[k].g_avg);
        res.predictions.push_back(p);
        if (trace) trace->write_pred(p);
    }
    return res;
}

AdaptRun run_adaptation(const ToyModel& model, PromptState& state,
                        const std::vector<EngineSample>& samples, const AdaptConfig& cfg,
                        TraceWriter* trace) {
    cfg.validate();
    if (samples.empty()) raise(ErrorCode::Config, "empty dataset");

    if (!cfg.disable_contrastive &&
        (cfg.batch_size == 1 || samples.size() == 1))
        std::fprintf(stderr,
                     "warning: contrastive loss is zero for singleton batches\n");

    AdaptRun run;
    run.theta1_init = state.c_net.w;
    run.theta2_init = state.d_net.w;
    run.opt.init(state);

    int batch_index = 0;
    for (size_t start = 0; start < samples.size(); start += cfg.batch_size) {
        if (cfg.mode == AdaptConfig::Mode::Episodic) {
            state.c_net.w = run.theta1_init;
            state.d_net.w = run.theta2_init;
            run.opt.init(state);
            run.reset_batches.push_back(batch_index);
            if (trace) trace->write_reset(batch_index);
        }
        const size_t end = std::min(samples.size(), start + cfg.batch_size);
        const std::vector<EngineSample> batch(samples.begin() + start, samples.begin() + end);
        auto res = adapt_batch(model, state, run.opt, batch, cfg, batch_index, trace);
        run.predictions.insert(run.predictions.end(), res.predictions.begin(),
                               res.predictions.end());
        run.trace.insert(run.trace.end(), res.trace.begin(), res.trace.end());
        ++batch_index;
    }
    return run;
}

std::vector<Prediction> predict_all(const ToyModel& model, const PromptState& state,
                                    const std::vector<EngineSample>& samples,
                                    const AdaptConfig& cfg) {
    std::vector<Prediction> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        AugmentConfig acfg;
        acfg.n_views = cfg.n_views;
        acfg.max_time_mask = cfg.max_time_mask;
        acfg.max_freq_mask = cfg.max_freq_mask;
        acfg.seed = hash_combine(stream_key(cfg.seed, "augment"),
                                 static_cast<uint64_t>(s.clip_id));
        const SampleForward f = forward_sample(model, state, make_views(s.mel, acfg), cfg);
        out.push_back({s.clip_id, argmax_lowest_tie(f.g_avg)});
    }
    return out;
}

void save_run_checkpoint(const std::string& path, const nlohmann::json& config_echo,
                         uint64_t seed, const std::string& model_hash, const PromptState& state,
                         const OptimizerState& opt) {
    nlohmann::json hdr = {
        {"kind", "run"},
        {"config", config_echo},
        {"seed", seed},
        {"model_hash", model_hash},
    };
    write_checkpoint(path, hdr,
                     {
                         {"theta1", state.c_net.w},
                         {"theta2", state.d_net.w},
                         {"opt_m1", opt.theta1.m},
                         {"opt_v1", opt.theta1.v},
                         {"opt_m2", opt.theta2.m},
                         {"opt_v2", opt.theta2.v},
                     });
}

} // namespace ttapt
