#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace coverd {

/// splitmix64 step; used for seed derivation and stateless hashing so that
/// results do not depend on the standard library's distribution internals.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    return splitmix64(seed ^ splitmix64(salt));
}

/// Deterministic RNG wrapper. All sampling goes through explicit reduction
/// so that identical seeds give identical streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    /// Uniform integer in [0, n), n > 0. Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below(0)");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double unit() { return double(gen_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return unit() < p; }

private:
    std::mt19937_64 gen_;
};

/// k distinct values drawn uniformly from [1, n], in draw order.
/// Sparse Fisher-Yates; memory is O(k) regardless of n.
inline std::vector<std::uint64_t> sample_distinct(Rng& rng, std::uint64_t n,
                                                  std::uint64_t k) {
    if (k > n) throw std::invalid_argument("sample_distinct: k > n");
    std::unordered_map<std::uint64_t, std::uint64_t> swapped;
    std::vector<std::uint64_t> out;
    out.reserve(std::size_t(k));
    for (std::uint64_t i = 0; i < k; ++i) {
        std::uint64_t j = i + rng.below(n - i);
        auto it_j = swapped.find(j);
        std::uint64_t value = it_j == swapped.end() ? j : it_j->second;
        auto it_i = swapped.find(i);
        swapped[j] = it_i == swapped.end() ? i : it_i->second;
        out.push_back(value + 1);
    }
    return out;
}

/// Stateless hash of an index set, for reproducible per-block decisions.
inline std::uint64_t hash_indices(std::uint64_t seed,
                                  const std::vector<std::uint32_t>& ix) {
    std::uint64_t h = splitmix64(seed ^ 0x01000193);
    for (auto v : ix) h = splitmix64(h ^ v);
    return h;
}

}  // namespace coverd
