#include <doctest.h>

#include <cmath>

#include "core/prompt_nets.hpp"

using namespace ttapt;

namespace {

ModelDims tiny_dims() {
    ModelDims d;
    d.embed_dim = 6;
    d.text_dim = 6;
    d.audio_hidden = 6;
    d.text_hidden = 6;
    d.max_tokens = 6;
    d.vocab = 4;
    d.n_mels = 4;
    return d;
}

std::vector<std::vector<int>> two_classes() { return {{0, 1}, {0, 2}}; }

Vec unit_vec(int dim, uint64_t seed) {
    Rng rng(seed, "unit_vec");
    Vec v(dim);
    for (auto& x : v) x = rng.gaussian();
    const double n = norm2(v.data(), dim);
    for (auto& x : v) x /= n;
    return v;
}

} // namespace

TEST_CASE("zero-initialized nets emit zero offsets and zero domain tokens") {
    const ToyModel model = init_model(tiny_dims(), 0.07, 1);
    PromptNetConfig cfg;
    cfg.mlp_hidden = 6;
    cfg.domain_tokens = 2;
    const PromptState s = init_prompt_state(model, two_classes(), cfg);

    const Vec off = c_net_forward(s, unit_vec(6, 2));
    for (double v : off) CHECK(v == 0.0);

    const Mat dom = d_net_forward(s, unit_vec(6, 3));
    CHECK(dom.rows == 2);
    CHECK(dom.cols == 6);
    for (double v : dom.a) CHECK(v == 0.0);
}

TEST_CASE("1-layer identity-weight net passes the input through") {
    Mlp net = Mlp::make(6, 6, 6, 1, 5);
    for (int i = 0; i < 6; ++i) net.w[net.layers[0].w_off + i * 6 + i] = 1.0;
    Vec e1(6, 0.0);
    e1[0] = 1.0;
    const Vec out = net.forward(e1).output;
    for (int i = 0; i < 6; ++i) CHECK(out[i] == doctest::Approx(e1[i]));
}

TEST_CASE("compose_prompt") {
    const ToyModel model = init_model(tiny_dims(), 0.07, 7);
    PromptNetConfig cfg;
    cfg.mlp_hidden = 6;
    cfg.domain_tokens = 1;
    const PromptState s = init_prompt_state(model, two_classes(), cfg);

    const Vec zero_off(6, 0.0);
    const Mat no_dom(0, 6);

    SUBCASE("d-net ablated, zero offset -> exactly p_origin") {
        const Mat t = compose_prompt(s, 1, zero_off, no_dom, false, 6);
        CHECK(t.a == s.p_origin[1].a);
    }
    SUBCASE("L_c=2, L_d=1 layout and broadcast offset") {
        Rng rng(9, "compose");
        Vec off(6);
        for (auto& v : off) v = rng.gaussian();
        Mat dom(1, 6);
        for (auto& v : dom.a) v = rng.gaussian();

        const Mat t = compose_prompt(s, 0, off, dom, true, 6);
        REQUIRE(t.rows == 3);
        for (int i = 0; i < 6; ++i) {
            CHECK(t(0, i) == dom(0, i));
            CHECK(t(1, i) == doctest::Approx(s.p_origin[0](0, i) + off[i]));
            CHECK(t(2, i) == doctest::Approx(s.p_origin[0](1, i) + off[i]));
        }
        for (int i = 0; i < 6; ++i)
            CHECK(t(1, i) - s.p_origin[0](0, i) ==
                  doctest::Approx(t(2, i) - s.p_origin[0](1, i)).epsilon(1e-12));
    }
    SUBCASE("length limit enforced") {
        Mat dom(5, 6);
        CHECK_THROWS_AS(compose_prompt(s, 0, zero_off, dom, true, 6), Error);
    }
}

TEST_CASE("prompt_vjp routes gradients exactly (finite-difference check)") {
    const ToyModel model = init_model(tiny_dims(), 0.07, 11);
    PromptNetConfig cfg;
    cfg.mlp_hidden = 6;
    cfg.domain_tokens = 1;
    cfg.mlp_depth = 2;
    PromptState s = init_prompt_state(model, two_classes(), cfg);

    Rng rng(13, "vjp_inst");
    for (auto& w : s.c_net.w) w = 0.3 * rng.gaussian();
    for (auto& w : s.d_net.w) w = 0.3 * rng.gaussian();

    const Vec v = unit_vec(6, 17);
    Vec upstream(6);
    for (auto& x : upstream) x = rng.gaussian();
    const int cls = 1;

    // scalar objective: <upstream, encode_text(composed prompt)>
    auto objective = [&]() {
        const Mlp::Cache cc = s.c_net.forward(v);
        const Mlp::Cache dc = s.d_net.forward(v);
        Mat dom(s.domain_tokens, s.text_dim);
        std::copy(dc.output.begin(), dc.output.end(), dom.a.begin());
        const Mat tokens = compose_prompt(s, cls, cc.output, dom, true, 6);
        const Vec u = encode_text(model, tokens);
        return dot(upstream.data(), u.data(), 6);
    };

    const Mlp::Cache cc = s.c_net.forward(v);
    const Mlp::Cache dc = s.d_net.forward(v);
    Mat dom(s.domain_tokens, s.text_dim);
    std::copy(dc.output.begin(), dc.output.end(), dom.a.begin());
    const Mat tokens = compose_prompt(s, cls, cc.output, dom, true, 6);
    const Mat token_grads = encode_text_vjp(model, tokens, upstream);

    PromptGradients grads;
    grads.init(s);
    prompt_vjp(s, cc, dc, token_grads, true, true, grads);

    const double h = 1e-5;
    auto fd_check = [&](Vec& w, const Vec& analytic) {
        for (size_t i = 0; i < w.size(); ++i) {
            const double orig = w[i];
            w[i] = orig + h;
            const double up = objective();
            w[i] = orig - h;
            const double dn = objective();
            w[i] = orig;
            const double fd = (up - dn) / (2.0 * h);
            const double scale = std::max({std::abs(fd), std::abs(analytic[i]), 1e-8});
            CHECK(std::abs(fd - analytic[i]) / scale < 1e-4);
        }
    };
    fd_check(s.c_net.w, grads.theta1);
    fd_check(s.d_net.w, grads.theta2);
}

TEST_CASE("prompt_vjp gating") {
    const ToyModel model = init_model(tiny_dims(), 0.07, 19);
    PromptNetConfig cfg;
    cfg.mlp_hidden = 6;
    cfg.domain_tokens = 1;
    PromptState s = init_prompt_state(model, two_classes(), cfg);
    Rng rng(23, "gating");
    for (auto& w : s.c_net.w) w = 0.3 * rng.gaussian();
    for (auto& w : s.d_net.w) w = 0.3 * rng.gaussian();

    const Vec v = unit_vec(6, 29);
    const Mlp::Cache cc = s.c_net.forward(v);
    const Mlp::Cache dc = s.d_net.forward(v);

    SUBCASE("zero upstream -> zero gradients") {
        PromptGradients g;
        g.init(s);
        prompt_vjp(s, cc, dc, Mat(3, 6), true, true, g);
        for (double x : g.theta1) CHECK(x == 0.0);
        for (double x : g.theta2) CHECK(x == 0.0);
    }
    SUBCASE("d-net disabled -> theta2 untouched") {
        Mat up(2, 6); // no domain slot when the d-net is ablated
        for (auto& x : up.a) x = rng.gaussian();
        PromptGradients g;
        g.init(s);
        prompt_vjp(s, cc, dc, up, true, false, g);
        bool theta1_nonzero = false;
        for (double x : g.theta1) theta1_nonzero |= (x != 0.0);
        CHECK(theta1_nonzero);
        for (double x : g.theta2) CHECK(x == 0.0);
    }
}

TEST_CASE("mlp depth and width configuration drive the parameter count") {
    const Mlp d1 = Mlp::make(8, 16, 4, 1, 0);
    CHECK(d1.n_params() == 8 * 4 + 4);
    const Mlp d3 = Mlp::make(8, 16, 4, 3, 0);
    CHECK(d3.n_params() == (8 * 16 + 16) + (16 * 16 + 16) + (16 * 4 + 4));
    const Mlp wide = Mlp::make(8, 32, 4, 3, 0);
    CHECK(wide.n_params() > 2 * d3.n_params());
}
