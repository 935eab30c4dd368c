#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "core/toy_alm.hpp"

using namespace ttapt;

namespace {

ModelDims tiny_dims() {
    ModelDims d;
    d.embed_dim = 8;
    d.text_dim = 8;
    d.audio_hidden = 8;
    d.text_hidden = 8;
    d.max_tokens = 6;
    d.vocab = 5;
    d.n_mels = 4;
    return d;
}

Mat random_tokens(int len, int dim, uint64_t seed) {
    Rng rng(seed, "tok_test");
    Mat t(len, dim);
    for (auto& v : t.a) v = rng.gaussian();
    return t;
}

} // namespace

TEST_CASE("encode_audio") {
    const ToyModel model = init_model(tiny_dims(), 0.07, 11);

    MelSpectrogram mel;
    mel.data = Mat(5, 4);
    Rng rng(12, "audio_test");
    for (auto& v : mel.data.a) v = rng.gaussian();

    SUBCASE("deterministic") { CHECK(encode_audio(model, mel) == encode_audio(model, mel)); }
    SUBCASE("unit norm over 100 random inputs") {
        for (int i = 0; i < 100; ++i) {
            for (auto& v : mel.data.a) v = rng.gaussian();
            const Vec e = encode_audio(model, mel);
            CHECK(norm2(e.data(), 8) == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
    SUBCASE("zero input still yields a finite unit vector") {
        MelSpectrogram z;
        z.data = Mat(5, 4, 0.0);
        const Vec e = encode_audio(model, z);
        check_finite(e.data(), e.size(), "embedding");
        CHECK(norm2(e.data(), 8) == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("non-finite input rejected") {
        mel.data(0, 0) = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(encode_audio(model, mel), Error);
    }
}

TEST_CASE("encode_text") {
    const ToyModel model = init_model(tiny_dims(), 0.07, 13);

    SUBCASE("positional embeddings matter") {
        Mat one = random_tokens(1, 8, 21);
        Mat two(2, 8);
        std::copy(one.row(0), one.row(0) + 8, two.row(0));
        std::copy(one.row(0), one.row(0) + 8, two.row(1));
        CHECK(encode_text(model, one) != encode_text(model, two));

        Mat ab = random_tokens(2, 8, 22);
        Mat ba(2, 8);
        std::copy(ab.row(1), ab.row(1) + 8, ba.row(0));
        std::copy(ab.row(0), ab.row(0) + 8, ba.row(1));
        CHECK(encode_text(model, ab) != encode_text(model, ba));
    }
    SUBCASE("unit norm for random sequences") {
        for (int i = 0; i < 50; ++i) {
            const Mat t = random_tokens(1 + i % 6, 8, 100 + i);
            const Vec u = encode_text(model, t);
            CHECK(norm2(u.data(), 8) == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
    SUBCASE("length limits enforced") {
        CHECK_THROWS_AS(encode_text(model, random_tokens(7, 8, 31)), Error);
        CHECK_THROWS_AS(encode_text(model, Mat(0, 8)), Error);
    }
}

TEST_CASE("encode_text_vjp matches finite differences") {
    const ToyModel model = init_model(tiny_dims(), 0.07, 17);
    const double h = 1e-4;

    for (int inst = 0; inst < 20; ++inst) {
        Rng rng(500 + inst, "vjp_test");
        const int len = 1 + static_cast<int>(rng.below(5));
        Mat tokens = random_tokens(len, 8, 900 + inst);
        Vec upstream(8);
        for (auto& v : upstream) v = rng.gaussian();

        const Mat grad = encode_text_vjp(model, tokens, upstream);
        REQUIRE(grad.rows == len);
        REQUIRE(grad.cols == 8);

        for (int s = 0; s < len; ++s) {
            for (int i = 0; i < 8; ++i) {
                const double orig = tokens(s, i);
                tokens(s, i) = orig + h;
                const Vec up = encode_text(model, tokens);
                tokens(s, i) = orig - h;
                const Vec dn = encode_text(model, tokens);
                tokens(s, i) = orig;
                const double fd =
                    (dot(upstream.data(), up.data(), 8) - dot(upstream.data(), dn.data(), 8)) /
                    (2.0 * h);
                const double scale = std::max({std::abs(fd), std::abs(grad(s, i)), 1e-8});
                CHECK(std::abs(grad(s, i) - fd) / scale < 1e-4);
            }
        }
    }
}

TEST_CASE("encode_text_vjp zero upstream gives zero gradients") {
    const ToyModel model = init_model(tiny_dims(), 0.07, 19);
    const Mat tokens = random_tokens(3, 8, 41);
    const Mat grad = encode_text_vjp(model, tokens, Vec(8, 0.0));
    for (double g : grad.a) CHECK(g == 0.0);
}

TEST_CASE("logits") {
    SUBCASE("hand-computed 2-d example") {
        Mat v(1, 2), u(2, 2);
        v(0, 0) = 1.0;
        v(0, 1) = 0.0;
        u(0, 0) = 1.0;
        u(0, 1) = 0.0;
        u(1, 0) = 0.0;
        u(1, 1) = 1.0;
        const Mat g = logits(v, u, 1.0);
        CHECK(g(0, 0) == doctest::Approx(1.0));
        CHECK(g(0, 1) == doctest::Approx(0.0));
        const Vec p = softmax(g.row(0), 2);
        CHECK(p[0] == doctest::Approx(0.7310585786).epsilon(1e-9));
        CHECK(p[1] == doctest::Approx(0.2689414214).epsilon(1e-9));
    }
    SUBCASE("identical rows give 1/tau on the diagonal; all entries bounded by 1/tau") {
        const ToyModel model = init_model(tiny_dims(), 0.07, 23);
        Mat v(3, 8);
        Rng rng(55, "logit_test");
        for (int i = 0; i < 3; ++i) {
            Vec x(8);
            for (auto& e : x) e = rng.gaussian();
            const double n = norm2(x.data(), 8);
            for (int k = 0; k < 8; ++k) v(i, k) = x[k] / n;
        }
        const Mat g = logits(v, v, model.tau);
        for (int i = 0; i < 3; ++i) {
            CHECK(g(i, i) == doctest::Approx(1.0 / model.tau).epsilon(1e-9));
            for (int c = 0; c < 3; ++c) CHECK(std::abs(g(i, c)) <= 1.0 / model.tau + 1e-9);
        }
    }
    SUBCASE("dimension mismatch raises") {
        CHECK_THROWS_AS(logits(Mat(1, 3), Mat(2, 4), 1.0), Error);
    }
    SUBCASE("per-view text embeddings") {
        Rng rng(66, "per_view");
        Mat v(2, 4);
        for (auto& x : v.a) x = rng.gaussian();
        std::vector<Mat> u(2, Mat(3, 4));
        for (auto& m : u)
            for (auto& x : m.a) x = rng.gaussian();
        const Mat g = logits_per_view(v, u, 0.5);
        for (int i = 0; i < 2; ++i)
            for (int c = 0; c < 3; ++c)
                CHECK(g(i, c) == doctest::Approx(dot(v.row(i), u[i].row(c), 4) / 0.5));
        CHECK_THROWS_AS(logits_per_view(v, {u[0]}, 0.5), Error);
    }
}

TEST_CASE("pretrain_toy separates two synthetic classes") {
    ModelDims dims = tiny_dims();
    dims.vocab = 3;

    auto make_split = [&](int per_class, uint64_t seed) {
        std::vector<PretrainExample> out;
        Rng rng(seed, "pretrain_data");
        for (int c = 0; c < 2; ++c) {
            for (int i = 0; i < per_class; ++i) {
                PretrainExample ex;
                ex.label = c;
                ex.stats.resize(8);
                const double sign = c == 0 ? 1.0 : -1.0;
                for (auto& v : ex.stats) v = sign + 0.1 * rng.gaussian();
                out.push_back(std::move(ex));
            }
        }
        return out;
    };
    const std::vector<std::vector<int>> class_tokens = {{0, 1}, {0, 2}};

    PretrainConfig cfg;
    cfg.epochs = 50;
    cfg.lr = 5e-3;
    cfg.target_acc = 0.95;
    cfg.seed = 77;

    ToyModel model = init_model(dims, 0.07, 77);
    const PretrainResult res =
        pretrain_toy(model, make_split(20, 1), make_split(10, 2), class_tokens, cfg);
    CHECK(res.val_acc >= 0.95);

    // same seed -> bit-identical parameters
    ToyModel again = init_model(dims, 0.07, 77);
    pretrain_toy(again, make_split(20, 1), make_split(10, 2), class_tokens, cfg);
    CHECK(model.tok_table.a == again.tok_table.a);
    CHECK(model.a_w1.a == again.a_w1.a);
    CHECK(model.t_proj.a == again.t_proj.a);
}

TEST_CASE("pretrain_toy reports divergence when the budget runs out") {
    ModelDims dims = tiny_dims();
    dims.vocab = 3;
    std::vector<PretrainExample> data(4);
    for (size_t i = 0; i < data.size(); ++i) {
        data[i].label = static_cast<int>(i % 2);
        data[i].stats.assign(8, 0.1); // identical stats: unlearnable
    }
    PretrainConfig cfg;
    cfg.epochs = 2;
    cfg.target_acc = 0.95;
    ToyModel model = init_model(dims, 0.07, 5);
    try {
        pretrain_toy(model, data, data, {{0, 1}, {0, 2}}, cfg);
        FAIL("expected PretrainDivergence");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PretrainDivergence);
    }
}

TEST_CASE("model checkpoint round-trips bit-exactly") {
    namespace fs = std::filesystem;
    ToyModel model = init_model(tiny_dims(), 0.07, 31);
    model.norm.mean.assign(4, 0.25);
    model.norm.std.assign(4, 1.75);

    const auto p1 = fs::temp_directory_path() / "ttapt_model_a.ckpt";
    const auto p2 = fs::temp_directory_path() / "ttapt_model_b.ckpt";
    save_model(p1.string(), model);
    const ToyModel loaded = load_model(p1.string());
    save_model(p2.string(), loaded);

    CHECK(loaded.tok_table.a == model.tok_table.a);
    CHECK(loaded.norm.mean == model.norm.mean);
    CHECK(loaded.tau == model.tau);

    const auto bytes = [](const fs::path& p) {
        std::FILE* f = std::fopen(p.string().c_str(), "rb");
        REQUIRE(f);
        std::vector<unsigned char> out(fs::file_size(p));
        REQUIRE(std::fread(out.data(), 1, out.size(), f) == out.size());
        std::fclose(f);
        return out;
    };
    CHECK(bytes(p1) == bytes(p2));
    fs::remove(p1);
    fs::remove(p2);
}
