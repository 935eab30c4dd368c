#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace ttapt {

// Counter-based deterministic RNG. Every draw is a pure function of
// (key, counter), so streams can be split per subsystem / per clip / per
// view and evaluated in any order without changing results. std::random
// distributions are implementation-defined, so we roll our own.

inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
    return mix64(a ^ (mix64(b) + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
}

inline uint64_t stream_key(uint64_t seed, std::string_view name) {
    uint64_t h = 0xcbf29ce484222325ull; // FNV-1a offset basis
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return hash_combine(seed, h);
}

class Rng {
  public:
    explicit Rng(uint64_t key) : key_(key) {}
    Rng(uint64_t seed, std::string_view stream) : key_(stream_key(seed, stream)) {}

    uint64_t next_u64() { return mix64(key_ + 0x632be59bd9b4e019ull * ++ctr_); }

    // uniform in [0, 1) with 53-bit resolution
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // uniform integer in [0, n)
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // uniform integer in [lo, hi] inclusive
    int64_t range(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    uint64_t key_;
    uint64_t ctr_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace ttapt
