#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "perivec/corpus.hpp"
#include "perivec/io.hpp"
#include "perivec/matrix.hpp"
#include "perivec/rng.hpp"

namespace perivec {

struct WalkConfig {
    int walks_per_source = 10; // r
    int walk_length = 80;      // l, counted in visited nodes
    double return_param = 1.0; // p
    double inout_param = 1.0;  // q
    std::uint64_t seed = 1;

    void validate() const {
        if (walks_per_source < 1) throw std::invalid_argument("walks_per_source must be >= 1");
        if (walk_length < 1) throw std::invalid_argument("walk_length must be >= 1");
        if (!(return_param > 0.0)) throw std::invalid_argument("return_param must be > 0");
        if (!(inout_param > 0.0)) throw std::invalid_argument("inout_param must be > 0");
    }
};

// Sequences of periodical dense-id tokens, ordered by (source, walk_index).
struct TrailCorpus {
    std::vector<std::vector<std::int32_t>> trails;

    std::size_t size() const { return trails.size(); }

    std::size_t token_count() const {
        std::size_t n = 0;
        for (const auto& t : trails) n += t.size();
        return n;
    }
};

// Samples r trails from every retained paper: each step follows a uniformly
// random outgoing reference, stopping at walk_length visited papers or at a
// dead end, and each visited paper emits its periodical token. RNG streams
// are derived per (source, walk_index), so the corpus is independent of
// generation order.
inline TrailCorpus generate_citation_trails(const CitationGraph& graph, const WalkConfig& config) {
    config.validate();
    std::vector<std::int32_t> sources;
    for (std::size_t p = 0; p < graph.num_papers(); ++p)
        if (graph.retained[p]) sources.push_back(static_cast<std::int32_t>(p));

    TrailCorpus corpus;
    corpus.trails.resize(sources.size() * static_cast<std::size_t>(config.walks_per_source));
    const auto r = static_cast<std::size_t>(config.walks_per_source);
    for (std::size_t si = 0; si < sources.size(); ++si) {
        const auto source = sources[si];
        for (std::size_t w = 0; w < r; ++w) {
            Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(source), w));
            auto& trail = corpus.trails[si * r + w];
            trail.reserve(static_cast<std::size_t>(config.walk_length));
            std::int32_t cur = source;
            trail.push_back(graph.periodical_of[static_cast<std::size_t>(cur)]);
            for (int step = 1; step < config.walk_length; ++step) {
                const auto deg = graph.out_degree(cur);
                if (deg == 0) break;
                cur = graph.out(cur).first[rng.uniform(deg)];
                trail.push_back(graph.periodical_of[static_cast<std::size_t>(cur)]);
            }
        }
    }
    return corpus;
}

namespace detail {

// One biased step: candidates are cur's out-neighbors; the second-order bias
// rescales each candidate's edge weight by 1/p (back to prev), 1 (prev links
// to the candidate) or 1/q. prev < 0 means first-order sampling.
inline std::int32_t node2vec_step(const PeriodicalMatrix& m, std::int32_t prev, std::int32_t cur,
                                  const WalkConfig& config, Rng& rng, std::vector<double>& cumulative) {
    const auto i = static_cast<std::size_t>(cur);
    const std::size_t begin = m.row_begin(i), end = m.row_end(i);
    if (begin == end) return -1;
    cumulative.clear();
    double total = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
        double w = m.values[k];
        if (prev >= 0) {
            const auto x = m.cols[k];
            if (x == prev)
                w /= config.return_param;
            else if (m.at(static_cast<std::size_t>(prev), static_cast<std::size_t>(x)) == 0.0)
                w /= config.inout_param;
        }
        total += w;
        cumulative.push_back(total);
    }
    if (total <= 0.0) return -1;
    const double draw = rng.real(0.0, total);
    std::size_t lo = 0, hi = cumulative.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (cumulative[mid] > draw)
            hi = mid;
        else
            lo = mid + 1;
    }
    return m.cols[begin + lo];
}

} // namespace detail

// Second-order biased walks over a weighted periodical graph (rows of the
// matrix are out-edges). Every node is a source for r walks; zero-out-weight
// nodes yield length-1 trails. With p=q=1 this is first-order sampling
// proportional to edge weight.
inline TrailCorpus node2vec_walks(const PeriodicalMatrix& weighted_matrix, const WalkConfig& config) {
    config.validate();
    TrailCorpus corpus;
    const std::size_t n = weighted_matrix.dimension;
    const auto r = static_cast<std::size_t>(config.walks_per_source);
    corpus.trails.resize(n * r);
    std::vector<double> cumulative;
    for (std::size_t node = 0; node < n; ++node) {
        for (std::size_t w = 0; w < r; ++w) {
            Rng rng(derive_seed(config.seed, node, w));
            auto& trail = corpus.trails[node * r + w];
            trail.reserve(static_cast<std::size_t>(config.walk_length));
            std::int32_t prev = -1;
            std::int32_t cur = static_cast<std::int32_t>(node);
            trail.push_back(cur);
            for (int step = 1; step < config.walk_length; ++step) {
                const auto next = detail::node2vec_step(weighted_matrix, prev, cur, config, rng, cumulative);
                if (next < 0) break;
                prev = cur;
                cur = next;
                trail.push_back(cur);
            }
        }
    }
    return corpus;
}

// Corpus interchange: one trail per line, space-separated periodical dense
// ids; a .gz path compresses on write and decompresses on read.
inline void write_trails(const std::string& path, const TrailCorpus& corpus) {
    std::string body;
    for (const auto& trail : corpus.trails) {
        for (std::size_t i = 0; i < trail.size(); ++i) {
            if (i) body += ' ';
            body += std::to_string(trail[i]);
        }
        body += '\n';
    }
    write_file(path, body);
}

inline TrailCorpus read_trails(const std::string& path) {
    TrailCorpus corpus;
    for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        std::vector<std::int32_t> trail;
        for (auto tok : split(line, ' ')) {
            if (tok.empty()) continue;
            trail.push_back(static_cast<std::int32_t>(parse_int(tok, "trail token")));
        }
        if (trail.empty())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty trail");
        corpus.trails.push_back(std::move(trail));
    });
    return corpus;
}

} // namespace perivec
