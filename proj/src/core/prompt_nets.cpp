#include "core/prompt_nets.hpp"

namespace ttapt {

Mlp Mlp::make(int in, int hidden, int out, int depth, uint64_t seed) {
    if (depth < 1 || depth > 8) raise(ErrorCode::Config, "mlp depth out of range");
    if (in < 1 || hidden < 1 || out < 1) raise(ErrorCode::Config, "mlp dims must be positive");

    Mlp m;
    m.in = in;
    m.hidden = hidden;
    m.out = out;
    m.depth = depth;

    size_t off = 0;
    for (int l = 0; l < depth; ++l) {
        const int li = (l == 0) ? in : hidden;
        const int lo = (l == depth - 1) ? out : hidden;
        m.layers.push_back({li, lo, off, off + static_cast<size_t>(li) * lo});
        off += static_cast<size_t>(li) * lo + lo;
    }
    m.w.assign(off, 0.0);

    Rng rng(seed, "mlp_init");
    for (int l = 0; l < depth - 1; ++l) { // final layer stays zero
        const auto& ls = m.layers[l];
        const double scale = 1.0 / std::sqrt(static_cast<double>(ls.in));
        for (size_t i = 0; i < static_cast<size_t>(ls.in) * ls.out; ++i)
            m.w[ls.w_off + i] = scale * rng.gaussian();
    }
    return m;
}

Mlp::Cache Mlp::forward(const Vec& x) const {
    if (static_cast<int>(x.size()) != in) raise(ErrorCode::Shape, "mlp input size mismatch");
    Cache c;
    c.input = x;
    c.act.reserve(depth - 1);

    const Vec* cur = &c.input;
    for (int l = 0; l < depth; ++l) {
        const auto& ls = layers[l];
        Vec next(ls.out);
        for (int r = 0; r < ls.out; ++r) {
            const double* wr = w.data() + ls.w_off + static_cast<size_t>(r) * ls.in;
            next[r] = w[ls.b_off + r] + dot(wr, cur->data(), ls.in);
        }
        if (l < depth - 1) {
            for (auto& v : next) v = std::tanh(v);
            c.act.push_back(std::move(next));
            cur = &c.act.back();
        } else {
            c.output = std::move(next);
        }
    }
    return c;
}

void Mlp::backward(const Cache& c, const Vec& upstream, Vec& grad) const {
    if (grad.size() != w.size()) raise(ErrorCode::Shape, "mlp gradient size mismatch");
    if (static_cast<int>(upstream.size()) != out) raise(ErrorCode::Shape, "mlp upstream size mismatch");

    Vec delta = upstream; // gradient on the current layer's pre-activation
    for (int l = depth - 1; l >= 0; --l) {
        const auto& ls = layers[l];
        const Vec& input = (l == 0) ? c.input : c.act[l - 1];
        for (int r = 0; r < ls.out; ++r) {
            double* gw = grad.data() + ls.w_off + static_cast<size_t>(r) * ls.in;
            const double d = delta[r];
            for (int i = 0; i < ls.in; ++i) gw[i] += d * input[i];
            grad[ls.b_off + r] += d;
        }
        if (l == 0) break;
        Vec prev(ls.in, 0.0);
        for (int r = 0; r < ls.out; ++r) {
            const double* wr = w.data() + ls.w_off + static_cast<size_t>(r) * ls.in;
            const double d = delta[r];
            for (int i = 0; i < ls.in; ++i) prev[i] += wr[i] * d;
        }
        const Vec& act = c.act[l - 1];
        for (int i = 0; i < ls.in; ++i) prev[i] *= (1.0 - act[i] * act[i]);
        delta = std::move(prev);
    }
}

PromptState init_prompt_state(const ToyModel& model,
                              const std::vector<std::vector<int>>& class_tokens,
                              const PromptNetConfig& cfg) {
    if (class_tokens.empty()) raise(ErrorCode::Config, "need at least one class prompt");
    if (cfg.domain_tokens < 0) raise(ErrorCode::Config, "domain_tokens must be >= 0");
    if (cfg.width_mult < 1) raise(ErrorCode::Config, "width_mult must be >= 1");

    PromptState s;
    s.text_dim = model.dims.text_dim;
    s.domain_tokens = cfg.domain_tokens;
    s.origin_ids = class_tokens;
    const size_t len = class_tokens[0].size();
    for (const auto& ids : class_tokens) {
        if (ids.size() != len) raise(ErrorCode::Config, "class prompts must share one length");
        s.p_origin.push_back(gather_tokens(model, ids));
    }

    const int hidden = cfg.mlp_hidden * cfg.width_mult;
    s.c_net = Mlp::make(model.dims.embed_dim, hidden, model.dims.text_dim, cfg.mlp_depth,
                        hash_combine(cfg.seed, 0x11));
    const int d_out = std::max(1, cfg.domain_tokens) * model.dims.text_dim;
    s.d_net = Mlp::make(model.dims.embed_dim, hidden, d_out, cfg.mlp_depth,
                        hash_combine(cfg.seed, 0x22));
    return s;
}

Vec c_net_forward(const PromptState& s, const Vec& v) { return s.c_net.forward(v).output; }

Mat d_net_forward(const PromptState& s, const Vec& v) {
    const Vec flat = s.d_net.forward(v).output;
    Mat out(s.domain_tokens, s.text_dim);
    std::copy(flat.begin(), flat.begin() + out.size(), out.a.begin());
    return out;
}

Mat compose_prompt(const PromptState& s, int cls, const Vec& offset, const Mat& domain_tokens,
                   bool include_domain, int max_tokens) {
    if (cls < 0 || cls >= s.n_classes()) raise(ErrorCode::Shape, "class index out of range");
    const Mat& origin = s.p_origin[cls];
    const int L_d = include_domain ? domain_tokens.rows : 0;
    const int L = L_d + origin.rows;
    if (L > max_tokens) raise(ErrorCode::Length, "composed prompt exceeds max_tokens");

    Mat tokens(L, s.text_dim);
    for (int t = 0; t < L_d; ++t) {
        const double* src = domain_tokens.row(t);
        std::copy(src, src + s.text_dim, tokens.row(t));
    }
    for (int t = 0; t < origin.rows; ++t) {
        const double* src = origin.row(t);
        double* dst = tokens.row(L_d + t);
        for (int i = 0; i < s.text_dim; ++i) dst[i] = src[i] + offset[i];
    }
    return tokens;
}

void prompt_vjp(const PromptState& s, const Mlp::Cache& c_cache, const Mlp::Cache& d_cache,
                const Mat& upstream_tokens, bool cnet_enabled, bool dnet_enabled,
                PromptGradients& grads) {
    const int L_d = dnet_enabled ? s.domain_tokens : 0;
    const int L_c = upstream_tokens.rows - L_d;
    if (L_c < 1) raise(ErrorCode::Shape, "upstream token gradient too short");

    if (cnet_enabled) {
        // offset is broadcast over the origin slots, so its gradient is the sum
        Vec g_offset(s.text_dim, 0.0);
        for (int t = L_d; t < upstream_tokens.rows; ++t) {
            const double* row = upstream_tokens.row(t);
            for (int i = 0; i < s.text_dim; ++i) g_offset[i] += row[i];
        }
        s.c_net.backward(c_cache, g_offset, grads.theta1);
    }
    if (dnet_enabled && L_d > 0) {
        Vec g_dom(static_cast<size_t>(s.domain_tokens) * s.text_dim, 0.0);
        for (int t = 0; t < L_d; ++t) {
            const double* row = upstream_tokens.row(t);
            std::copy(row, row + s.text_dim, g_dom.begin() + static_cast<size_t>(t) * s.text_dim);
        }
        s.d_net.backward(d_cache, g_dom, grads.theta2);
    }
}

} // namespace ttapt
