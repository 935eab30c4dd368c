#pragma once

#include <cstdint>
#include <vector>

#include "core/mat.hpp"
#include "core/toy_alm.hpp"

namespace ttapt {

// Small tanh MLP with a flat parameter vector. Layer l maps in_l -> out_l;
// tanh between layers, none after the last. The final layer is
// zero-initialized so a fresh net contributes nothing to the prompt.
struct Mlp {
    int in = 0, hidden = 0, out = 0, depth = 0;
    Vec w;

    struct LayerSpec {
        int in, out;
        size_t w_off, b_off;
    };
    std::vector<LayerSpec> layers;

    static Mlp make(int in, int hidden, int out, int depth, uint64_t seed);
    size_t n_params() const { return w.size(); }

    struct Cache {
        Vec input;
        std::vector<Vec> act; // post-tanh activation per hidden layer
        Vec output;
    };

    Cache forward(const Vec& x) const;
    // accumulate parameter gradients for upstream d<loss>/d<output>
    void backward(const Cache& c, const Vec& upstream, Vec& grad) const;
};

// The two conditional consistency networks plus the frozen per-class prompt
// tokens. theta1 (c-net) emits one offset vector broadcast-added to every
// origin token; theta2 (d-net) emits domain tokens prepended to the sequence.
struct PromptState {
    std::vector<Mat> p_origin;             // frozen: N entries, each L_c x text_dim
    std::vector<std::vector<int>> origin_ids; // the token ids p_origin was gathered from
    Mlp c_net;                             // d -> text_dim
    Mlp d_net;                             // d -> domain_tokens * text_dim
    int domain_tokens = 4;                 // L_d
    int text_dim = 0;

    int n_classes() const { return static_cast<int>(p_origin.size()); }
    int prompt_len() const { return p_origin.empty() ? 0 : p_origin[0].rows; }
};

struct PromptNetConfig {
    int mlp_depth = 3;
    int mlp_hidden = 64;
    int width_mult = 1; // doubles hidden width for the params*2 ablation
    int domain_tokens = 4;
    uint64_t seed = 0;
};

PromptState init_prompt_state(const ToyModel& model,
                              const std::vector<std::vector<int>>& class_tokens,
                              const PromptNetConfig& cfg);

struct PromptGradients {
    Vec theta1;
    Vec theta2;

    void init(const PromptState& s) {
        theta1.assign(s.c_net.n_params(), 0.0);
        theta2.assign(s.d_net.n_params(), 0.0);
    }
    void zero() {
        std::fill(theta1.begin(), theta1.end(), 0.0);
        std::fill(theta2.begin(), theta2.end(), 0.0);
    }
};

Vec c_net_forward(const PromptState& s, const Vec& v);
Mat d_net_forward(const PromptState& s, const Vec& v); // domain_tokens x text_dim

// domain tokens prepended, offset broadcast-added to every origin token.
// include_domain=false (d-net ablation) drops the prepended block entirely
// so the result reduces to p_origin[c] + offset.
Mat compose_prompt(const PromptState& s, int cls, const Vec& offset, const Mat& domain_tokens,
                   bool include_domain, int max_tokens);

// Route upstream per-token gradients of a composed prompt back into theta1
// and theta2: the offset receives the sum over origin-token slots, the
// domain block receives the first L_d slots.
void prompt_vjp(const PromptState& s, const Mlp::Cache& c_cache, const Mlp::Cache& d_cache,
                const Mat& upstream_tokens, bool cnet_enabled, bool dnet_enabled,
                PromptGradients& grads);

} // namespace ttapt
