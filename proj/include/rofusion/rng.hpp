#pragma once

#include <cmath>
#include <cstdint>

namespace rofusion {

// Counter-based deterministic generator.
//
// Algorithm: draw n is mix64(key + (n+1) * GOLDEN), where mix64 is the
// splitmix64 finalizer and GOLDEN = 0x9E3779B97F4A7C15. The stream is a pure
// function of (key, draw index), so identical seeds replay identical streams
// regardless of how calls interleave, and the scheme is trivially portable
// to other languages.
class CounterRng {
public:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static CounterRng from_seed(std::uint64_t seed) {
        return CounterRng(mix64(seed + kGolden));
    }

    // Independent child stream; ids give disjoint keys with overwhelming
    // probability. Stream ids used by the simulator are documented in sim.hpp.
    CounterRng derive(std::uint64_t stream_id) const {
        return CounterRng(mix64(key_ ^ mix64(stream_id + kGolden)));
    }

    std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

    // [0,1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Inclusive on both ends. floor(u*n) has bias < 2^-53 per draw,
    // irrelevant at simulator scale.
    int uniform_int(int lo, int hi) {
        const int n = hi - lo + 1;
        int k = static_cast<int>(uniform01() * n);
        if (k >= n) k = n - 1;
        return lo + k;
    }

    // Box-Muller, always consuming exactly two draws so the stream position
    // does not depend on call history.
    double gaussian() {
        const double u1 = 1.0 - uniform01();  // (0,1], log-safe
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// FNV-1a, used to turn layer path strings into RNG stream ids and to hash
// dataset files in the ablation harness.
inline std::uint64_t fnv1a64(const void* bytes, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(bytes);
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace rofusion
