#include <doctest.h>

#include <algorithm>

#include "core/augment.hpp"
#include "core/rng.hpp"

using namespace ttapt;

namespace {

MelSpectrogram random_mel(int t, int f, uint64_t seed) {
    MelSpectrogram m;
    m.data = Mat(t, f);
    Rng rng(seed, "aug_test");
    for (auto& v : m.data.a) v = rng.gaussian();
    return m;
}

double mat_mean(const MelSpectrogram& m) {
    double s = 0.0;
    for (double v : m.data.a) s += v;
    return s / m.data.size();
}

} // namespace

TEST_CASE("time_mask fills masked rows with the global mean") {
    MelSpectrogram x = random_mel(4, 2, 1);
    const double mean = mat_mean(x);

    SUBCASE("width 0 is the identity") { CHECK(time_mask(x, 2, 0).data.a == x.data.a); }
    SUBCASE("hand-computed 4x2 case") {
        const MelSpectrogram y = time_mask(x, 1, 2);
        for (int f = 0; f < 2; ++f) {
            CHECK(y.data(0, f) == x.data(0, f));
            CHECK(y.data(1, f) == doctest::Approx(mean).epsilon(1e-15));
            CHECK(y.data(2, f) == doctest::Approx(mean).epsilon(1e-15));
            CHECK(y.data(3, f) == x.data(3, f));
        }
    }
    SUBCASE("masking everything yields a constant matrix") {
        for (double v : time_mask(x, 0, 4).data.a) CHECK(v == doctest::Approx(mean));
    }
    SUBCASE("out of range raises") { CHECK_THROWS_AS(time_mask(x, 3, 2), Error); }
}

TEST_CASE("freq_mask mirrors time_mask along the bin axis") {
    MelSpectrogram x = random_mel(2, 4, 2);
    const double mean = mat_mean(x);

    CHECK(freq_mask(x, 1, 0).data.a == x.data.a);

    const MelSpectrogram y = freq_mask(x, 0, 1);
    for (int t = 0; t < 2; ++t) {
        CHECK(y.data(t, 0) == doctest::Approx(mean).epsilon(1e-15));
        for (int f = 1; f < 4; ++f) CHECK(y.data(t, f) == x.data(t, f));
    }

    // both masks with width 0 compose to the identity
    CHECK(freq_mask(time_mask(x, 0, 0), 0, 0).data.a == x.data.a);
}

TEST_CASE("time_freq_mask uses the original mean for both fills") {
    MelSpectrogram x = random_mel(4, 4, 3);
    const double mean = mat_mean(x);

    CHECK(time_freq_mask(x, 0, 0, 0, 0).data.a == x.data.a);

    const MelSpectrogram y = time_freq_mask(x, 1, 1, 2, 1);
    for (int t = 0; t < 4; ++t) {
        for (int f = 0; f < 4; ++f) {
            if (t == 1 || f == 2)
                CHECK(y.data(t, f) == doctest::Approx(mean).epsilon(1e-15));
            else
                CHECK(y.data(t, f) == x.data(t, f));
        }
    }

    for (double v : time_freq_mask(x, 0, 4, 0, 4).data.a) CHECK(v == doctest::Approx(mean));
}

TEST_CASE("time_reorder swaps the halves") {
    SUBCASE("even length is an involution") {
        MelSpectrogram x = random_mel(4, 3, 4);
        const MelSpectrogram y = time_reorder(x);
        // rows [r0,r1,r2,r3] -> [r2,r3,r0,r1]
        for (int f = 0; f < 3; ++f) {
            CHECK(y.data(0, f) == x.data(2, f));
            CHECK(y.data(1, f) == x.data(3, f));
            CHECK(y.data(2, f) == x.data(0, f));
            CHECK(y.data(3, f) == x.data(1, f));
        }
        CHECK(time_reorder(y).data.a == x.data.a);
    }
    SUBCASE("odd length splits at floor(T/2)") {
        MelSpectrogram x = random_mel(5, 2, 5);
        const MelSpectrogram y = time_reorder(x); // [r2,r3,r4,r0,r1]
        const int order[5] = {2, 3, 4, 0, 1};
        for (int t = 0; t < 5; ++t)
            for (int f = 0; f < 2; ++f) CHECK(y.data(t, f) == x.data(order[t], f));
    }
    SUBCASE("row multiset is preserved") {
        MelSpectrogram x = random_mel(9, 4, 6);
        const MelSpectrogram y = time_reorder(x);
        auto rows = [](const MelSpectrogram& m) {
            std::vector<std::vector<double>> r;
            for (int t = 0; t < m.frames(); ++t)
                r.emplace_back(m.data.row(t), m.data.row(t) + m.bins());
            std::sort(r.begin(), r.end());
            return r;
        };
        CHECK(rows(x) == rows(y));
    }
    SUBCASE("T < 2 raises") {
        MelSpectrogram x = random_mel(1, 3, 7);
        CHECK_THROWS_AS(time_reorder(x), Error);
    }
}

TEST_CASE("make_views") {
    MelSpectrogram x = random_mel(16, 8, 8);
    AugmentConfig cfg;
    cfg.max_time_mask = 4;
    cfg.max_freq_mask = 3;
    cfg.seed = 99;

    SUBCASE("M=5 produces the canonical tag list") {
        cfg.n_views = 5;
        const ViewSet vs = make_views(x, cfg);
        REQUIRE(vs.size() == 5);
        const AugOp expect[5] = {AugOp::ID, AugOp::TM, AugOp::FM, AugOp::TFM, AugOp::TR};
        for (int i = 0; i < 5; ++i) CHECK(vs.provenance[i].op == expect[i]);
        CHECK(vs.views[0].data.a == x.data.a);
    }
    SUBCASE("M=1 is just the input") {
        cfg.n_views = 1;
        const ViewSet vs = make_views(x, cfg);
        REQUIRE(vs.size() == 1);
        CHECK(vs.views[0].data.a == x.data.a);
        CHECK(vs.provenance[0].op == AugOp::ID);
    }
    SUBCASE("deterministic under a fixed seed") {
        cfg.n_views = 9;
        const ViewSet a = make_views(x, cfg);
        const ViewSet b = make_views(x, cfg);
        REQUIRE(a.size() == b.size());
        for (int i = 0; i < a.size(); ++i) CHECK(a.views[i].data.a == b.views[i].data.a);
    }
    SUBCASE("input too small for any mask is rejected") {
        MelSpectrogram tiny = random_mel(1, 1, 9);
        cfg.n_views = 3;
        CHECK_THROWS_AS(make_views(tiny, cfg), Error);
    }
    SUBCASE("shape preserved and mask locality holds") {
        cfg.n_views = 9;
        const ViewSet vs = make_views(x, cfg);
        for (int i = 0; i < vs.size(); ++i) {
            CHECK(vs.views[i].frames() == x.frames());
            CHECK(vs.views[i].bins() == x.bins());
            const ViewProvenance& p = vs.provenance[i];
            if (p.op != AugOp::TM && p.op != AugOp::FM && p.op != AugOp::TFM) continue;
            for (int t = 0; t < x.frames(); ++t) {
                const bool t_masked = t >= p.t_start && t < p.t_start + p.t_width;
                for (int f = 0; f < x.bins(); ++f) {
                    const bool f_masked = f >= p.f_start && f < p.f_start + p.f_width;
                    if (!t_masked && !f_masked)
                        CHECK(vs.views[i].data(t, f) == x.data(t, f));
                }
            }
        }
    }
}
