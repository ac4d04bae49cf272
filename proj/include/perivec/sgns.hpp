#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <thread>
#include <vector>

#include "perivec/embedding.hpp"
#include "perivec/rng.hpp"
#include "perivec/walks.hpp"

namespace perivec {

// What the exported token vector is. Input vectors alone capture only
// second-order (shared-context) similarity: on a corpus of disjoint bigrams
// they provably anti-align co-occurring tokens. Averaging input and context
// vectors recovers first-order co-occurrence structure as well, so it is the
// default.
enum class SgnsRepresentation { mean_input_context, input_only };

struct SgnsConfig {
    int dimension = 128;
    int window = 5;
    int negatives = 5;
    int epochs = 5;
    double learning_rate = 0.025; // decays linearly to 1e-4 of itself
    double subsample = 0.0;       // 0 = off; else word2vec-style discard threshold
    int workers = 1;              // >1 trains asynchronously (non-deterministic)
    SgnsRepresentation representation = SgnsRepresentation::mean_input_context;
    std::uint64_t seed = 1;

    void validate() const {
        if (dimension < 1) throw std::invalid_argument("dimension must be >= 1");
        if (window < 1) throw std::invalid_argument("window must be >= 1");
        if (negatives < 1) throw std::invalid_argument("negatives must be >= 1");
        if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
        if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
        if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    }
};

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Loss of one training pair: L = -log s(u.vo) - sum_n log s(-u.vn).
// Kept separate from the gradient so finite differences have an independent
// target to probe.
inline double sgns_pair_loss(const double* u, const double* vo, const double* const* vn,
                             int negatives, std::size_t d) {
    double loss = -std::log(sigmoid(dot(u, vo, d)));
    for (int n = 0; n < negatives; ++n) loss += -std::log(sigmoid(-dot(u, vn[n], d)));
    return loss;
}

// Analytic gradients of sgns_pair_loss with respect to u, vo and each vn.
// This is the exact computation the trainer applies (times -lr).
inline void sgns_pair_grad(const double* u, const double* vo, const double* const* vn,
                           int negatives, std::size_t d, double* gu, double* gvo, double** gvn) {
    const double so = sigmoid(dot(u, vo, d)) - 1.0;
    for (std::size_t i = 0; i < d; ++i) {
        gu[i] = so * vo[i];
        gvo[i] = so * u[i];
    }
    for (int n = 0; n < negatives; ++n) {
        const double sn = sigmoid(dot(u, vn[n], d));
        for (std::size_t i = 0; i < d; ++i) {
            gu[i] += sn * vn[n][i];
            gvn[n][i] = sn * u[i];
        }
    }
}

} // namespace detail

struct SgnsModel {
    EmbeddingMatrix embeddings;      // the periodical representation (see SgnsConfig)
    EmbeddingMatrix context;         // context-side vectors, kept for inspection
    std::vector<double> epoch_loss;  // mean pair loss per epoch
};

namespace detail {

struct SgnsVocab {
    std::vector<std::int32_t> tokens;                    // ascending token id
    std::unordered_map<std::int32_t, std::size_t> row;   // token -> row
    std::vector<double> counts;                          // per row
    double total = 0.0;
};

inline SgnsVocab sgns_vocab(const TrailCorpus& corpus) {
    std::map<std::int32_t, double> counts;
    for (const auto& trail : corpus.trails)
        for (auto t : trail) counts[t] += 1.0;
    SgnsVocab v;
    for (const auto& [token, c] : counts) {
        v.row.emplace(token, v.tokens.size());
        v.tokens.push_back(token);
        v.counts.push_back(c);
        v.total += c;
    }
    return v;
}

} // namespace detail

// Skip-gram with negative sampling over trail corpora. Every in-window pair
// is trained once per epoch; negatives come from the unigram^0.75
// distribution. workers=1 is bit-deterministic under a fixed seed; workers>1
// updates shared parameters without synchronization (asynchronous SGD), which
// trades determinism for throughput.
inline SgnsModel train_sgns(const TrailCorpus& corpus, const SgnsConfig& config) {
    config.validate();
    if (corpus.trails.empty()) throw std::invalid_argument("empty corpus");
    const auto vocab = detail::sgns_vocab(corpus);
    const std::size_t V = vocab.tokens.size();
    if (V < 2) throw std::invalid_argument("vocabulary must contain at least 2 tokens");
    const auto d = static_cast<std::size_t>(config.dimension);

    // noise distribution: unigram counts raised to 3/4
    std::vector<double> noise(V);
    for (std::size_t r = 0; r < V; ++r) noise[r] = std::pow(vocab.counts[r], 0.75);
    AliasTable noise_table;
    noise_table.build(noise);

    // token-row remap of the corpus, so the hot loop indexes rows directly
    std::vector<std::vector<std::uint32_t>> trails;
    trails.reserve(corpus.trails.size());
    for (const auto& trail : corpus.trails) {
        std::vector<std::uint32_t> t(trail.size());
        for (std::size_t i = 0; i < trail.size(); ++i)
            t[i] = static_cast<std::uint32_t>(vocab.row.at(trail[i]));
        trails.push_back(std::move(t));
    }

    std::vector<double> in(V * d), ctx(V * d, 0.0);
    {
        Rng init_rng(derive_seed(config.seed, 0x696e6974ULL)); // "init"
        for (auto& x : in) x = (init_rng.real01() - 0.5) / static_cast<double>(d);
    }

    // total pair count drives the linear learning-rate decay
    const int window = config.window;
    std::uint64_t pairs_per_epoch = 0;
    for (const auto& t : trails) {
        const auto L = static_cast<std::int64_t>(t.size());
        for (std::int64_t i = 0; i < L; ++i)
            pairs_per_epoch += static_cast<std::uint64_t>(std::min<std::int64_t>(i, window) +
                                                          std::min<std::int64_t>(L - 1 - i, window));
    }
    const double total_pairs =
        static_cast<double>(pairs_per_epoch) * static_cast<double>(config.epochs);

    std::atomic<std::uint64_t> pairs_done{0};
    const double lr0 = config.learning_rate;
    const int negatives = config.negatives;

    SgnsModel model;
    model.epoch_loss.assign(static_cast<std::size_t>(config.epochs), 0.0);

    auto train_range = [&](int epoch, std::size_t begin, std::size_t end, std::uint64_t stream,
                           double* loss_out, std::uint64_t* pairs_out) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch) + 1, stream));
        std::vector<double> neu1e(d);
        std::vector<std::uint32_t> kept;
        double loss_sum = 0.0;
        std::uint64_t local_pairs = 0, since_update = 0;
        double lr = lr0 * std::max(1e-4, 1.0 - static_cast<double>(pairs_done.load(std::memory_order_relaxed)) / total_pairs);
        for (std::size_t ti = begin; ti < end; ++ti) {
            const auto* trail = &trails[ti];
            if (config.subsample > 0.0) {
                kept.clear();
                for (auto rowid : *trail) {
                    const double f = vocab.counts[rowid] / vocab.total;
                    const double discard = 1.0 - std::sqrt(config.subsample / f);
                    if (discard <= 0.0 || rng.real01() >= discard) kept.push_back(rowid);
                }
                trail = &kept;
            }
            const auto L = static_cast<std::int64_t>(trail->size());
            for (std::int64_t i = 0; i < L; ++i) {
                const std::size_t center = (*trail)[static_cast<std::size_t>(i)];
                double* u = in.data() + center * d;
                const std::int64_t lo = std::max<std::int64_t>(0, i - window);
                const std::int64_t hi = std::min<std::int64_t>(L - 1, i + window);
                for (std::int64_t j = lo; j <= hi; ++j) {
                    if (j == i) continue;
                    const std::size_t target = (*trail)[static_cast<std::size_t>(j)];
                    std::fill(neu1e.begin(), neu1e.end(), 0.0);
                    // positive sample
                    {
                        double* vo = ctx.data() + target * d;
                        const double s = detail::sigmoid(dot(u, vo, d));
                        loss_sum += -std::log(s);
                        const double g = (s - 1.0) * lr;
                        for (std::size_t c = 0; c < d; ++c) {
                            neu1e[c] += g * vo[c];
                            vo[c] -= g * u[c];
                        }
                    }
                    // negative samples; drawing the target itself wastes the draw
                    for (int n = 0; n < negatives; ++n) {
                        const std::size_t neg = noise_table.sample(rng);
                        if (neg == target) continue;
                        double* vn = ctx.data() + neg * d;
                        const double s = detail::sigmoid(dot(u, vn, d));
                        loss_sum += -std::log(1.0 - s);
                        const double g = s * lr;
                        for (std::size_t c = 0; c < d; ++c) {
                            neu1e[c] += g * vn[c];
                            vn[c] -= g * u[c];
                        }
                    }
                    for (std::size_t c = 0; c < d; ++c) u[c] -= neu1e[c];
                    ++local_pairs;
                    if (++since_update == 1024) {
                        pairs_done.fetch_add(since_update, std::memory_order_relaxed);
                        since_update = 0;
                        lr = lr0 * std::max(1e-4, 1.0 - static_cast<double>(pairs_done.load(std::memory_order_relaxed)) / total_pairs);
                    }
                }
            }
        }
        pairs_done.fetch_add(since_update, std::memory_order_relaxed);
        *loss_out = loss_sum;
        *pairs_out = local_pairs;
    };

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::uint64_t epoch_pairs = 0;
        if (config.workers == 1) {
            train_range(epoch, 0, trails.size(), 0, &epoch_loss, &epoch_pairs);
        } else {
            const auto W = static_cast<std::size_t>(config.workers);
            std::vector<double> losses(W, 0.0);
            std::vector<std::uint64_t> counts(W, 0);
            std::vector<std::thread> threads;
            const std::size_t chunk = (trails.size() + W - 1) / W;
            for (std::size_t w = 0; w < W; ++w) {
                const std::size_t b = std::min(w * chunk, trails.size());
                const std::size_t e = std::min(b + chunk, trails.size());
                threads.emplace_back(train_range, epoch, b, e, w, &losses[w], &counts[w]);
            }
            for (auto& t : threads) t.join();
            for (std::size_t w = 0; w < W; ++w) {
                epoch_loss += losses[w];
                epoch_pairs += counts[w];
            }
        }
        model.epoch_loss[static_cast<std::size_t>(epoch)] =
            epoch_pairs ? epoch_loss / static_cast<double>(epoch_pairs) : 0.0;
    }

    model.embeddings = EmbeddingMatrix::zeros(vocab.tokens, d);
    if (config.representation == SgnsRepresentation::mean_input_context) {
        for (std::size_t i = 0; i < in.size(); ++i)
            model.embeddings.data[i] = 0.5 * (in[i] + ctx[i]);
    } else {
        model.embeddings.data = in;
    }
    model.context = EmbeddingMatrix::zeros(vocab.tokens, d);
    model.context.data = std::move(ctx);
    if (!model.embeddings.all_finite() || !model.context.all_finite())
        throw std::runtime_error("training produced non-finite embeddings");
    return model;
}

} // namespace perivec
