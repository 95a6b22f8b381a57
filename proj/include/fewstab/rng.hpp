#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

// Deterministic random number generation. Episode manifests must be
// reproducible bit-for-bit from (master_seed, task_index) alone, so we use
// named algorithms (SplitMix64 for seed derivation, xoshiro256** for the
// per-task streams) instead of std:: distributions, whose output is
// implementation-defined.

namespace fewstab::rng {

inline constexpr std::uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t splitmix64_finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        state += kSplitMixGamma;
        return splitmix64_finalize(state);
    }
};

// Seed for task #index within a suite: the index-th output of the SplitMix64
// stream started at master_seed. The stream has a closed form, so no
// sequential walk is needed.
inline std::uint64_t derive_task_seed(std::uint64_t master_seed, std::uint64_t index) {
    return splitmix64_finalize(master_seed + (index + 1) * kSplitMixGamma);
}

class Xoshiro256ss {
  public:
    explicit Xoshiro256ss(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& word : state_) word = sm.next();
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Unbiased uniform draw from [0, bound) by rejection. bound > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
        std::uint64_t x = next();
        while (x < threshold) x = next();
        return x % bound;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Standard normal via the Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * unit() - 1.0;
            v = 2.0 * unit() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// First k elements of a uniform random permutation of `items`, in selection
// order (partial Fisher-Yates). k <= items.size().
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> items, std::size_t k, Xoshiro256ss& gen) {
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(gen.below(items.size() - i));
        std::swap(items[i], items[j]);
    }
    items.resize(k);
    return items;
}

}  // namespace fewstab::rng
