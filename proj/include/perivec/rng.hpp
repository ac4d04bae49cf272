#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace perivec {

// Deterministic, platform-independent PRNG. All randomized components use
// this instead of <random> distributions, whose outputs differ between
// standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // splitmix64 step
    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform integer in [0, n), n >= 1
    std::uint64_t uniform(std::uint64_t n) {
        // multiply-shift bounded draw; bias is < 2^-64 * n, irrelevant here
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        return static_cast<std::uint64_t>(m >> 64);
    }

    // uniform double in [0, 1)
    double real01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform double in [lo, hi)
    double real(double lo, double hi) { return lo + (hi - lo) * real01(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

// Mixes a base seed with stream coordinates so that parallel workers can draw
// from independent, order-free streams (walk generation, fold shuffles, ...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    auto mix = [](std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(seed ^ 0x51afd7ed558ccd6dULL);
    h = mix(h ^ a * 0x9e3779b97f4a7c15ULL);
    h = mix(h ^ b * 0xc2b2ae3d27d4eb4fULL);
    return h;
}

// Walker alias table for O(1) sampling from a fixed discrete distribution.
class AliasTable {
public:
    AliasTable() = default;

    explicit AliasTable(const std::vector<double>& weights) { build(weights); }

    void build(const std::vector<double>& weights) {
        const std::size_t n = weights.size();
        prob_.assign(n, 0.0);
        alias_.assign(n, 0);
        double total = 0.0;
        for (double w : weights) total += w;
        std::vector<double> scaled(n);
        std::vector<std::uint32_t> small, large;
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = weights[i] * static_cast<double>(n) / total;
            (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
        }
        while (!small.empty() && !large.empty()) {
            std::uint32_t s = small.back(); small.pop_back();
            std::uint32_t l = large.back(); large.pop_back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            (scaled[l] < 1.0 ? small : large).push_back(l);
        }
        while (!large.empty()) { prob_[large.back()] = 1.0; large.pop_back(); }
        while (!small.empty()) { prob_[small.back()] = 1.0; small.pop_back(); }
    }

    std::size_t size() const { return prob_.size(); }

    std::uint32_t sample(Rng& rng) const {
        std::size_t i = static_cast<std::size_t>(rng.uniform(prob_.size()));
        return rng.real01() < prob_[i] ? static_cast<std::uint32_t>(i) : alias_[i];
    }

private:
    std::vector<double> prob_;
    std::vector<std::uint32_t> alias_;
};

} // namespace perivec
