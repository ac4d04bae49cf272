#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "perivec/io.hpp"
#include "perivec/rng.hpp"

namespace perivec {

// Dense V x d matrix of token vectors; tokens are periodical dense ids but
// any int32 key works. Rows are addressed by vocabulary position.
struct EmbeddingMatrix {
    std::size_t dim = 0;
    std::vector<std::int32_t> tokens; // row -> token id
    std::unordered_map<std::int32_t, std::size_t> row_of;
    std::vector<double> data; // row-major, tokens.size() * dim

    std::size_t vocab_size() const { return tokens.size(); }

    double* row(std::size_t r) { return data.data() + r * dim; }
    const double* row(std::size_t r) const { return data.data() + r * dim; }

    std::size_t row_for(std::int32_t token) const {
        const auto it = row_of.find(token);
        if (it == row_of.end())
            throw std::out_of_range("token " + std::to_string(token) + " not in vocabulary");
        return it->second;
    }

    bool contains(std::int32_t token) const { return row_of.count(token) != 0; }

    static EmbeddingMatrix zeros(std::vector<std::int32_t> token_ids, std::size_t dim) {
        EmbeddingMatrix m;
        m.dim = dim;
        m.tokens = std::move(token_ids);
        m.data.assign(m.tokens.size() * dim, 0.0);
        m.row_of.reserve(m.tokens.size());
        for (std::size_t r = 0; r < m.tokens.size(); ++r) {
            if (!m.row_of.emplace(m.tokens[r], r).second)
                throw std::invalid_argument("duplicate token in vocabulary");
        }
        return m;
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline double dot(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const double* a, std::size_t d) { return std::sqrt(dot(a, a, d)); }

// Cosine similarity; zero vectors compare as 0 against everything.
inline double cosine(const double* a, const double* b, std::size_t d) {
    const double na = norm(a, d), nb = norm(b, d);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b, d) / (na * nb);
}

struct Neighbor {
    std::int32_t token;
    double similarity;
};

// Top-k most cosine-similar tokens to `query`, self excluded, descending
// similarity with ties broken by ascending token id.
inline std::vector<Neighbor> cosine_top_k(const EmbeddingMatrix& m, std::int32_t query, int k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    const auto qrow = m.row_for(query);
    std::vector<Neighbor> all;
    all.reserve(m.vocab_size());
    for (std::size_t r = 0; r < m.vocab_size(); ++r) {
        if (r == qrow) continue;
        all.push_back({m.tokens[r], cosine(m.row(qrow), m.row(r), m.dim)});
    }
    const auto cmp = [](const Neighbor& a, const Neighbor& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.token < b.token;
    };
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), cmp);
    all.resize(take);
    return all;
}

// Text interchange: header `V d`, then `token_id v1 ... vd` per line.
inline void write_embeddings(const std::string& path, const EmbeddingMatrix& m) {
    std::string body = std::to_string(m.vocab_size()) + " " + std::to_string(m.dim) + "\n";
    for (std::size_t r = 0; r < m.vocab_size(); ++r) {
        body += std::to_string(m.tokens[r]);
        for (std::size_t j = 0; j < m.dim; ++j) {
            body += ' ';
            body += format_double(m.row(r)[j]);
        }
        body += '\n';
    }
    write_file(path, body);
}

inline EmbeddingMatrix read_embeddings(const std::string& path) {
    EmbeddingMatrix m;
    bool header_seen = false;
    std::size_t expect_rows = 0, next = 0;
    for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        const auto bad = [&](const char* why) {
            return std::runtime_error(path + ":" + std::to_string(lineno) + ": " + why);
        };
        const auto fields = split(line, ' ');
        if (!header_seen) {
            if (fields.size() != 2) throw bad("expected `V d` header");
            expect_rows = static_cast<std::size_t>(parse_int(fields[0], "V"));
            m.dim = static_cast<std::size_t>(parse_int(fields[1], "d"));
            m.tokens.resize(expect_rows);
            m.data.resize(expect_rows * m.dim);
            header_seen = true;
            return;
        }
        if (fields.size() != m.dim + 1) throw bad("wrong number of vector components");
        if (next >= expect_rows) throw bad("more rows than the header declared");
        m.tokens[next] = static_cast<std::int32_t>(parse_int(fields[0], "token id"));
        for (std::size_t j = 0; j < m.dim; ++j)
            m.data[next * m.dim + j] = parse_double(fields[j + 1], "vector component");
        ++next;
    });
    if (!header_seen) throw std::runtime_error(path + ": empty embedding file");
    if (next != expect_rows) throw std::runtime_error(path + ": fewer rows than the header declared");
    m.row_of.reserve(m.tokens.size());
    for (std::size_t r = 0; r < m.tokens.size(); ++r)
        if (!m.row_of.emplace(m.tokens[r], r).second)
            throw std::runtime_error(path + ": duplicate token id");
    return m;
}

// First two principal components of the row vectors, for 2-D layout when no
// curated coordinates exist. Deterministic power iteration with deflation.
inline std::vector<std::array<double, 2>> pca_2d(const EmbeddingMatrix& m) {
    const std::size_t n = m.vocab_size(), d = m.dim;
    std::vector<std::array<double, 2>> coords(n, {0.0, 0.0});
    if (n == 0 || d == 0) return coords;

    std::vector<double> mean(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < d; ++j) mean[j] += m.row(r)[j];
    for (auto& v : mean) v /= static_cast<double>(n);

    std::vector<double> cov(d * d, 0.0);
    std::vector<double> centered(d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < d; ++j) centered[j] = m.row(r)[j] - mean[j];
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) cov[a * d + b] += centered[a] * centered[b];
    }
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    for (auto& v : cov) v /= denom;

    // Power iteration; the second component is kept orthogonal to the first
    // inside every iteration, which is numerically safer than deflating cov.
    auto power_component = [&](std::uint64_t seed, const std::vector<double>* ortho,
                               double lambda_floor) {
        std::vector<double> v(d);
        Rng rng(seed);
        for (auto& x : v) x = rng.real(-1.0, 1.0);
        std::vector<double> next(d);
        double lambda = 0.0;
        for (int iter = 0; iter < 300; ++iter) {
            for (std::size_t a = 0; a < d; ++a) {
                double s = 0.0;
                for (std::size_t b = 0; b < d; ++b) s += cov[a * d + b] * v[b];
                next[a] = s;
            }
            if (ortho) {
                const double proj = dot(next.data(), ortho->data(), d);
                for (std::size_t a = 0; a < d; ++a) next[a] -= proj * (*ortho)[a];
            }
            lambda = norm(next.data(), d);
            if (lambda <= lambda_floor) { // degenerate: no variance left this way
                std::fill(v.begin(), v.end(), 0.0);
                return std::pair{v, 0.0};
            }
            for (std::size_t a = 0; a < d; ++a) next[a] /= lambda;
            v.swap(next);
        }
        return std::pair{v, lambda};
    };

    auto [v1, l1] = power_component(0x5ca1ab1eULL, nullptr, 1e-300);
    auto [v2, l2] = power_component(0x0ddba11ULL, &v1, std::max(1e-300, l1 * 1e-9));
    (void)l2;

    for (std::size_t r = 0; r < n; ++r) {
        double x = 0.0, y = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = m.row(r)[j] - mean[j];
            x += c * v1[j];
            y += c * v2[j];
        }
        coords[r] = {x, y};
    }
    return coords;
}

} // namespace perivec
