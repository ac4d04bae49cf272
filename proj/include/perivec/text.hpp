#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace perivec {

// 64-bit FNV-1a over raw bytes. This hash is normative for feature hashing:
// any reimplementation (other languages, external tooling) must match it
// bit-for-bit.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

namespace detail {
// Token bytes are ASCII alphanumerics plus any byte >= 0x80, so multi-byte
// UTF-8 sequences stay intact instead of being split mid-character.
inline bool is_token_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
           (c >= 'A' && c <= 'Z') || c >= 0x80;
}

inline char ascii_lower(unsigned char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}
} // namespace detail

// Normative tokenizer shared by the hashing vectorizer and the topic model:
// lowercase ASCII letters, split on runs of non-token bytes.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (detail::is_token_byte(c)) {
            cur.push_back(detail::ascii_lower(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

// Canonical form used to match periodical names across files: lowercase,
// with every run of non-token bytes collapsed to a single space.
inline std::string canonicalize_name(std::string_view name) {
    std::string out;
    bool pending_gap = false;
    for (unsigned char c : name) {
        if (detail::is_token_byte(c)) {
            if (pending_gap && !out.empty()) out.push_back(' ');
            pending_gap = false;
            out.push_back(detail::ascii_lower(c));
        } else {
            pending_gap = true;
        }
    }
    return out;
}

} // namespace perivec
