#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace magsim {

// Counter-seeded PRNG (splitmix64 core). Every consumer derives a private
// stream from (master seed, purpose, indices), so simulation results do not
// depend on evaluation order or worker count.
class Rng {
public:
    enum Purpose : uint64_t {
        kSiteProperties = 1,
        kShot = 2,
        kCycleOrder = 3,
        kProbeShot = 4,
        kAssembly = 5,
    };

    explicit Rng(uint64_t state) : state_(state) {}

    static Rng stream(uint64_t master, uint64_t purpose, uint64_t i = 0, uint64_t j = 0) {
        uint64_t h = mix(master ^ 0x6d616773696d2e31ull);
        h = mix(h ^ (0x9e3779b97f4a7c15ull * (purpose + 1)));
        h = mix(h ^ (0xbf58476d1ce4e5b9ull * (i + 1)));
        h = mix(h ^ (0x94d049bb133111ebull * (j + 1)));
        return Rng(h);
    }

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller; consumes exactly two uniforms per sample.
    double gaussian(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Unbiased integer in [0, n) via 128-bit multiply-shift rejection.
    uint64_t uniform_int(uint64_t n) {
        __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
        auto lo = static_cast<uint64_t>(m);
        if (lo < n) {
            const uint64_t threshold = -n % n;
            while (lo < threshold) {
                m = static_cast<__uint128_t>(next_u64()) * n;
                lo = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_int(i)]);
        }
    }

private:
    static uint64_t mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    uint64_t state_;
};

}  // namespace magsim
