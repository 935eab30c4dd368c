#include "core/gradcheck.hpp"

#include <algorithm>

namespace ttapt {

namespace {

struct Instance {
    ToyModel model;
    PromptState state;
    std::vector<ViewSet> views;
    AdaptConfig cfg;
};

Instance make_instance(const GradCheckConfig& gc, uint64_t seed) {
    Instance in;

    ModelDims dims;
    dims.embed_dim = 8;
    dims.text_dim = 8;
    dims.audio_hidden = 8;
    dims.text_hidden = 8;
    dims.max_tokens = 8;
    dims.n_mels = 4;
    dims.vocab = 1 + gc.n_classes; // shared prefix token + one id token per class
    in.model = init_model(dims, 0.1, seed);

    std::vector<std::vector<int>> class_tokens;
    for (int c = 0; c < gc.n_classes; ++c) {
        std::vector<int> ids(gc.prompt_len, 0);
        ids.back() = 1 + c;
        class_tokens.push_back(ids);
    }

    PromptNetConfig pc;
    pc.mlp_depth = gc.mlp_depth;
    pc.mlp_hidden = 8;
    pc.domain_tokens = gc.domain_tokens;
    pc.seed = seed;
    in.state = init_prompt_state(in.model, class_tokens, pc);

    // randomize both nets away from zero-init so every parameter is live
    Rng rng(seed, "gradcheck_theta");
    for (auto& w : in.state.c_net.w) w = 0.2 * rng.gaussian();
    for (auto& w : in.state.d_net.w) w = 0.2 * rng.gaussian();

    in.cfg.n_views = gc.n_views;
    in.cfg.batch_size = gc.batch_size;
    in.cfg.lambda_contrastive = 0.7;
    in.cfg.max_time_mask = 2;
    in.cfg.max_freq_mask = 2;
    in.cfg.condition_on_mean = gc.condition_on_mean;
    in.cfg.seed = seed;

    Rng mel_rng(seed, "gradcheck_mels");
    for (int k = 0; k < gc.batch_size; ++k) {
        MelSpectrogram mel;
        mel.data = Mat(6, dims.n_mels);
        for (auto& x : mel.data.a) x = mel_rng.gaussian();
        AugmentConfig acfg;
        acfg.n_views = gc.n_views;
        acfg.max_time_mask = 2;
        acfg.max_freq_mask = 2;
        acfg.seed = hash_combine(seed, static_cast<uint64_t>(k));
        in.views.push_back(make_views(mel, acfg));
    }
    return in;
}

double loss_of(const Instance& in) {
    const auto fwd = forward_batch(in.model, in.state, in.views, in.cfg);
    std::vector<Vec> g_avg;
    g_avg.reserve(fwd.size());
    for (const auto& f : fwd) g_avg.push_back(f.g_avg);
    return final_loss(g_avg, in.cfg).final_loss;
}

double rel_err(double analytic, double fd) {
    const double scale = std::max(std::abs(analytic), std::abs(fd));
    if (scale < 1e-8) return 0.0;
    return std::abs(analytic - fd) / scale;
}

} // namespace

GradCheckResult check_gradients(const GradCheckConfig& gc) {
    GradCheckResult res;

    for (int inst = 0; inst < gc.instances; ++inst) {
        Instance in = make_instance(gc, hash_combine(gc.seed, static_cast<uint64_t>(inst)));

        const auto fwd = forward_batch(in.model, in.state, in.views, in.cfg);
        const PromptGradients analytic = backward_batch(in.model, in.state, fwd, in.cfg);

        auto check_param = [&](Vec& w, size_t i, double g) {
            const double orig = w[i];
            w[i] = orig + gc.h;
            const double lp = loss_of(in);
            w[i] = orig - gc.h;
            const double lm = loss_of(in);
            w[i] = orig;
            const double fd = (lp - lm) / (2.0 * gc.h);
            res.max_rel_err = std::max(res.max_rel_err, rel_err(g, fd));
            ++res.params_checked;
        };

        for (size_t i = 0; i < in.state.c_net.w.size(); ++i)
            check_param(in.state.c_net.w, i, analytic.theta1[i]);
        for (size_t i = 0; i < in.state.d_net.w.size(); ++i)
            check_param(in.state.d_net.w, i, analytic.theta2[i]);

        ++res.instances_run;
    }
    res.ok = res.max_rel_err <= gc.tolerance;
    return res;
}

} // namespace ttapt
