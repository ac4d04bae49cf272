#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "perivec/text.hpp"

namespace perivec {

// Sparse hashed bag-of-words: feature index -> raw term frequency.
struct HashedVector {
    std::size_t m = 0;                                    // feature-space dimensionality
    std::vector<std::pair<std::uint32_t, double>> entries; // sorted by index, counts > 0

    double l1() const {
        double s = 0.0;
        for (const auto& [i, c] : entries) s += c;
        return s;
    }
};

constexpr std::size_t kDefaultHashDim = std::size_t{1} << 20;

// Token t contributes f(t) at index fnv1a64(t) mod m; raw frequency sums, no
// sign trick. The hash and tokenizer are normative: any reimplementation must
// match them bit-for-bit.
inline HashedVector hash_vectorize(std::string_view text, std::size_t m = kDefaultHashDim) {
    if (m < 2) throw std::invalid_argument("feature dimensionality must be >= 2");
    HashedVector v;
    v.m = m;
    std::unordered_map<std::uint32_t, double> counts;
    for (const auto& token : tokenize(text))
        counts[static_cast<std::uint32_t>(fnv1a64(token) % m)] += 1.0;
    v.entries.assign(counts.begin(), counts.end());
    std::sort(v.entries.begin(), v.entries.end());
    return v;
}

} // namespace perivec
