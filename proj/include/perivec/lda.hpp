#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "perivec/io.hpp"
#include "perivec/rng.hpp"
#include "perivec/text.hpp"

namespace perivec {

struct LdaConfig {
    int topics = 30;
    double alpha = 0.0; // document prior; 0 means "use 50 / T"
    double beta = 0.01; // word prior
    int iterations = 1000;
    int burn_in = 200;
    std::uint64_t seed = 0;
    bool validate = true;

    double effective_alpha() const {
        return alpha > 0.0 ? alpha : 50.0 / static_cast<double>(topics);
    }
};

// Tokenized corpus with a dense vocabulary. Vocabulary ids are assigned in
// ascending token order so the mapping is reproducible from the text alone.
struct LdaCorpus {
    std::vector<std::string> vocab;
    std::vector<std::vector<int>> docs;     // token-id sequences, no empties
    std::vector<std::size_t> doc_index;     // position in the original text list
    std::size_t dropped_empty = 0;

    std::size_t token_count() const {
        std::size_t n = 0;
        for (const auto& d : docs) n += d.size();
        return n;
    }
};

inline LdaCorpus lda_corpus(const std::vector<std::string>& texts) {
    LdaCorpus corpus;
    std::vector<std::vector<std::string>> tokenized(texts.size());
    std::map<std::string, int> vocab_ids;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        tokenized[i] = tokenize(texts[i]);
        for (const auto& t : tokenized[i]) vocab_ids.emplace(t, 0);
    }
    int next = 0;
    for (auto& [token, id] : vocab_ids) {
        id = next++;
        corpus.vocab.push_back(token);
    }
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (tokenized[i].empty()) {
            ++corpus.dropped_empty;
            continue;
        }
        std::vector<int> doc;
        doc.reserve(tokenized[i].size());
        for (const auto& t : tokenized[i]) doc.push_back(vocab_ids.at(t));
        corpus.docs.push_back(std::move(doc));
        corpus.doc_index.push_back(i);
    }
    return corpus;
}

struct LdaModel {
    int topics = 0;
    std::vector<std::vector<double>> theta; // corpus.docs.size() x T, rows sum to 1
    std::vector<std::vector<double>> phi;   // T x vocab, rows sum to 1
    double initial_log_likelihood = 0.0;
    double final_log_likelihood = 0.0;
};

namespace detail {

// Mean per-token log p(w) under count-based point estimates of theta and phi.
inline double lda_log_likelihood(const LdaCorpus& corpus, const std::vector<int>& n_dk,
                                 const std::vector<int>& n_kw, const std::vector<int>& n_k,
                                 int topics, double alpha, double beta) {
    const auto v = static_cast<double>(corpus.vocab.size());
    const auto t = static_cast<double>(topics);
    double ll = 0.0;
    for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
        const auto len = static_cast<double>(corpus.docs[d].size());
        for (int w : corpus.docs[d]) {
            double p = 0.0;
            for (int k = 0; k < topics; ++k) {
                const double theta_dk =
                    (n_dk[d * static_cast<std::size_t>(topics) + static_cast<std::size_t>(k)] +
                     alpha) /
                    (len + t * alpha);
                const double phi_kw =
                    (n_kw[static_cast<std::size_t>(k) * corpus.vocab.size() +
                          static_cast<std::size_t>(w)] +
                     beta) /
                    (static_cast<double>(n_k[static_cast<std::size_t>(k)]) + v * beta);
                p += theta_dk * phi_kw;
            }
            ll += std::log(p);
        }
    }
    return ll;
}

} // namespace detail

// Collapsed Gibbs sampler. theta and phi come from counts accumulated over
// the post-burn-in sweeps, smoothed by the Dirichlet priors.
inline LdaModel fit_lda(const LdaCorpus& corpus, const LdaConfig& cfg) {
    if (cfg.topics < 2) throw std::invalid_argument("fit_lda: need at least 2 topics");
    if (!(cfg.beta > 0.0)) throw std::invalid_argument("fit_lda: beta must be positive");
    if (cfg.alpha < 0.0) throw std::invalid_argument("fit_lda: alpha must be non-negative");
    if (cfg.iterations < 1 || cfg.burn_in < 0 || cfg.burn_in >= cfg.iterations)
        throw std::invalid_argument("fit_lda: need burn_in < iterations");
    if (corpus.docs.empty()) throw std::invalid_argument("fit_lda: empty corpus");
    if (corpus.vocab.size() < static_cast<std::size_t>(cfg.topics))
        throw std::invalid_argument("fit_lda: vocabulary smaller than the topic count");

    const std::size_t num_docs = corpus.docs.size();
    const std::size_t vocab = corpus.vocab.size();
    const auto topics = static_cast<std::size_t>(cfg.topics);
    const double alpha = cfg.effective_alpha();
    const double beta = cfg.beta;
    const std::size_t total_tokens = corpus.token_count();

    std::vector<int> n_dk(num_docs * topics, 0);
    std::vector<int> n_kw(topics * vocab, 0);
    std::vector<int> n_k(topics, 0);
    std::vector<std::vector<int>> z(num_docs);

    Rng rng(derive_seed(cfg.seed, 0x1dab00ULL));
    for (std::size_t d = 0; d < num_docs; ++d) {
        z[d].resize(corpus.docs[d].size());
        for (std::size_t i = 0; i < corpus.docs[d].size(); ++i) {
            const auto k = static_cast<std::size_t>(rng.uniform(topics));
            z[d][i] = static_cast<int>(k);
            ++n_dk[d * topics + k];
            ++n_kw[k * vocab + static_cast<std::size_t>(corpus.docs[d][i])];
            ++n_k[k];
        }
    }

    LdaModel model;
    model.topics = cfg.topics;
    model.initial_log_likelihood = detail::lda_log_likelihood(corpus, n_dk, n_kw, n_k,
                                                              cfg.topics, alpha, beta);

    std::vector<long long> acc_dk(num_docs * topics, 0);
    std::vector<long long> acc_kw(topics * vocab, 0);
    std::vector<double> weight(topics);
    const double v_beta = static_cast<double>(vocab) * beta;

    for (int sweep = 0; sweep < cfg.iterations; ++sweep) {
        for (std::size_t d = 0; d < num_docs; ++d) {
            const auto& doc = corpus.docs[d];
            for (std::size_t i = 0; i < doc.size(); ++i) {
                const auto w = static_cast<std::size_t>(doc[i]);
                const auto old_k = static_cast<std::size_t>(z[d][i]);
                --n_dk[d * topics + old_k];
                --n_kw[old_k * vocab + w];
                --n_k[old_k];

                double total = 0.0;
                for (std::size_t k = 0; k < topics; ++k) {
                    total += (static_cast<double>(n_dk[d * topics + k]) + alpha) *
                             (static_cast<double>(n_kw[k * vocab + w]) + beta) /
                             (static_cast<double>(n_k[k]) + v_beta);
                    weight[k] = total;
                }
                const double target = rng.real01() * total;
                const auto it = std::upper_bound(weight.begin(), weight.end(), target);
                auto new_k = static_cast<std::size_t>(it - weight.begin());
                if (new_k >= topics) new_k = topics - 1; // guard against fp edge at 1.0

                z[d][i] = static_cast<int>(new_k);
                ++n_dk[d * topics + new_k];
                ++n_kw[new_k * vocab + w];
                ++n_k[new_k];
            }
        }
        if (cfg.validate) {
            std::size_t conserved = 0;
            for (std::size_t k = 0; k < topics; ++k)
                conserved += static_cast<std::size_t>(n_k[k]);
            if (conserved != total_tokens)
                throw std::logic_error("fit_lda: token count not conserved");
        }
        if (sweep >= cfg.burn_in) {
            for (std::size_t i = 0; i < acc_dk.size(); ++i) acc_dk[i] += n_dk[i];
            for (std::size_t i = 0; i < acc_kw.size(); ++i) acc_kw[i] += n_kw[i];
        }
    }

    model.final_log_likelihood =
        detail::lda_log_likelihood(corpus, n_dk, n_kw, n_k, cfg.topics, alpha, beta);

    const auto sweeps = static_cast<double>(cfg.iterations - cfg.burn_in);
    model.theta.assign(num_docs, std::vector<double>(topics, 0.0));
    for (std::size_t d = 0; d < num_docs; ++d) {
        const double len = static_cast<double>(corpus.docs[d].size());
        const double denom = len + static_cast<double>(topics) * alpha;
        for (std::size_t k = 0; k < topics; ++k)
            model.theta[d][k] =
                (static_cast<double>(acc_dk[d * topics + k]) / sweeps + alpha) / denom;
    }
    model.phi.assign(topics, std::vector<double>(vocab, 0.0));
    for (std::size_t k = 0; k < topics; ++k) {
        double topic_total = 0.0;
        for (std::size_t w = 0; w < vocab; ++w)
            topic_total += static_cast<double>(acc_kw[k * vocab + w]) / sweeps;
        const double denom = topic_total + static_cast<double>(vocab) * beta;
        for (std::size_t w = 0; w < vocab; ++w)
            model.phi[k][w] =
                (static_cast<double>(acc_kw[k * vocab + w]) / sweeps + beta) / denom;
    }
    return model;
}

// Arg-max per row; ties go to the smallest topic index.
inline std::vector<int> dominant_topic(const std::vector<std::vector<double>>& theta) {
    std::vector<int> out;
    out.reserve(theta.size());
    for (const auto& row : theta) {
        if (row.empty()) throw std::invalid_argument("dominant_topic: empty row");
        std::size_t best = 0;
        for (std::size_t k = 1; k < row.size(); ++k)
            if (row[k] > row[best]) best = k;
        out.push_back(static_cast<int>(best));
    }
    return out;
}

// Word ids of a topic's n most probable words, probability descending, ties
// to the smaller word id.
inline std::vector<int> top_topic_words(const LdaModel& model, std::size_t topic, std::size_t n) {
    const auto& row = model.phi.at(topic);
    std::vector<int> order(row.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    const auto cmp = [&](int a, int b) {
        if (row[static_cast<std::size_t>(a)] != row[static_cast<std::size_t>(b)])
            return row[static_cast<std::size_t>(a)] > row[static_cast<std::size_t>(b)];
        return a < b;
    };
    const std::size_t k = std::min(n, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      cmp);
    order.resize(k);
    return order;
}

// UMass intrinsic coherence of one word list: sum over ranked pairs of
// log((co-document-frequency + 1) / document-frequency of the earlier word).
inline double umass_coherence(const std::vector<int>& words, const LdaCorpus& corpus) {
    if (words.size() < 2) throw std::invalid_argument("umass_coherence: need >= 2 words");
    std::vector<std::set<std::size_t>> docs_with(words.size());
    for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
        for (int w : corpus.docs[d]) {
            for (std::size_t i = 0; i < words.size(); ++i)
                if (w == words[i]) docs_with[i].insert(d);
        }
    }
    double score = 0.0;
    for (std::size_t i = 1; i < words.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            std::size_t both = 0;
            for (std::size_t d : docs_with[i])
                both += docs_with[j].count(d);
            const double dj = static_cast<double>(docs_with[j].size());
            if (dj == 0.0)
                throw std::invalid_argument("umass_coherence: word absent from the corpus");
            score += std::log((static_cast<double>(both) + 1.0) / dj);
        }
    }
    return score;
}

// Mean UMass coherence over topics, each summarized by its top-n words.
inline double model_coherence(const LdaModel& model, const LdaCorpus& corpus,
                              std::size_t top_n = 10) {
    double total = 0.0;
    for (std::size_t k = 0; k < model.phi.size(); ++k)
        total += umass_coherence(top_topic_words(model, k, top_n), corpus);
    return total / static_cast<double>(model.phi.size());
}

struct CoherencePoint {
    int topics = 0;
    double coherence = 0.0;
    bool failed = false;
    std::string error;
};

struct CoherenceScan {
    std::vector<CoherencePoint> points; // grid order
    int selected = 0;                   // arg-max coherence; ties to the smaller T
    std::size_t sampled_docs = 0;
};

inline std::vector<int> default_topic_grid() {
    std::vector<int> grid;
    for (int t = 10; t <= 200; t += 10) grid.push_back(t);
    return grid;
}

// Fits one model per grid entry on a shared document sample and picks the
// coherence arg-max. Models are independent, so grid entries can run on
// worker threads; per-T seeds keep the result schedule-independent.
inline CoherenceScan coherence_scan(const LdaCorpus& corpus, const std::vector<int>& grid,
                                    const LdaConfig& base, double sample_fraction = 1.0,
                                    unsigned workers = 1) {
    if (grid.empty()) throw std::invalid_argument("coherence_scan: empty grid");
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
        throw std::invalid_argument("coherence_scan: sample fraction must be in (0, 1]");
    if (corpus.docs.empty()) throw std::invalid_argument("coherence_scan: empty corpus");

    LdaCorpus sample;
    const LdaCorpus* fit_corpus = &corpus;
    if (sample_fraction < 1.0) {
        std::vector<std::size_t> order(corpus.docs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(derive_seed(base.seed, 0x5ca1eULL));
        rng.shuffle(order);
        auto keep = static_cast<std::size_t>(
            std::ceil(sample_fraction * static_cast<double>(corpus.docs.size())));
        keep = std::max<std::size_t>(1, std::min(keep, corpus.docs.size()));
        order.resize(keep);
        std::sort(order.begin(), order.end());
        sample.vocab = corpus.vocab;
        for (std::size_t i : order) {
            sample.docs.push_back(corpus.docs[i]);
            sample.doc_index.push_back(corpus.doc_index[i]);
        }
        fit_corpus = &sample;
    }

    CoherenceScan scan;
    scan.sampled_docs = fit_corpus->docs.size();
    scan.points.resize(grid.size());

    std::atomic<std::size_t> cursor{0};
    auto run = [&]() {
        while (true) {
            const std::size_t g = cursor.fetch_add(1);
            if (g >= grid.size()) break;
            CoherencePoint& point = scan.points[g];
            point.topics = grid[g];
            try {
                LdaConfig cfg = base;
                cfg.topics = grid[g];
                cfg.seed = derive_seed(base.seed, 0x5caf17ULL, static_cast<std::uint64_t>(grid[g]));
                const LdaModel model = fit_lda(*fit_corpus, cfg);
                point.coherence = model_coherence(model, *fit_corpus);
            } catch (const std::exception& e) {
                point.failed = true;
                point.error = e.what();
            }
        }
    };
    if (workers <= 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(run);
        for (auto& t : pool) t.join();
    }

    const CoherencePoint* best = nullptr;
    for (const auto& p : scan.points)
        if (!p.failed && (!best || p.coherence > best->coherence)) best = &p;
    if (!best) throw std::runtime_error("coherence_scan: every grid entry failed");
    scan.selected = best->topics;
    return scan;
}

// doc_id <TAB> theta_1,...,theta_T
inline void write_theta(const std::string& path, const std::vector<std::string>& doc_ids,
                        const std::vector<std::vector<double>>& theta) {
    if (doc_ids.size() != theta.size())
        throw std::invalid_argument("write_theta: mismatched inputs");
    std::string out;
    for (std::size_t d = 0; d < theta.size(); ++d) {
        out += doc_ids[d];
        out += '\t';
        for (std::size_t k = 0; k < theta[d].size(); ++k) {
            if (k) out += ',';
            out += format_double(theta[d][k]);
        }
        out += '\n';
    }
    write_file(path, out);
}

// topic_id <TAB> word <TAB> probability, top words per topic in rank order.
inline void write_topic_report(const std::string& path, const LdaModel& model,
                               const LdaCorpus& corpus, std::size_t top_n = 10) {
    std::string out;
    for (std::size_t k = 0; k < model.phi.size(); ++k) {
        for (int w : top_topic_words(model, k, top_n)) {
            out += std::to_string(k);
            out += '\t';
            out += corpus.vocab[static_cast<std::size_t>(w)];
            out += '\t';
            out += format_double(model.phi[k][static_cast<std::size_t>(w)]);
            out += '\n';
        }
    }
    write_file(path, out);
}

} // namespace perivec
