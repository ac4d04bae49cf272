#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "perivec/embedding.hpp"
#include "perivec/matrix.hpp"
#include "perivec/rng.hpp"

namespace perivec {

struct KmeansConfig {
    int k = 26;
    int max_iters = 100;
    double tolerance = 1e-6; // relative inertia improvement that counts as converged
    int restarts = 10;
    bool normalize = false; // L2-normalize rows before clustering
    std::uint64_t seed = 1;

    void validate() const {
        if (k < 1) throw std::invalid_argument("k must be >= 1");
        if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
        if (tolerance < 0.0) throw std::invalid_argument("tolerance must be >= 0");
        if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
    }
};

struct KmeansResult {
    std::vector<std::int32_t> labels; // renumbered by descending cluster size
    std::vector<std::vector<double>> centroids;
    double inertia = 0.0;
    int iterations = 0;   // of the winning restart
    int best_restart = 0;
};

namespace detail {

// Dense row-major view; owns a scaled copy only when normalizing.
class DenseRows {
public:
    DenseRows(const double* data, std::size_t n, std::size_t d, bool normalize)
        : n_(n), d_(d) {
        if (normalize) {
            owned_.assign(data, data + n * d);
            for (std::size_t i = 0; i < n; ++i) {
                const double nm = norm(owned_.data() + i * d, d);
                if (nm > 0.0)
                    for (std::size_t j = 0; j < d; ++j) owned_[i * d + j] /= nm;
            }
            data_ = owned_.data();
        } else {
            data_ = data;
        }
        sq_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            sq_[i] = dot(data_ + i * d, data_ + i * d, d);
            if (!std::isfinite(sq_[i])) throw std::invalid_argument("non-finite input row");
        }
    }

    std::size_t size() const { return n_; }
    std::size_t dim() const { return d_; }
    double sq_norm(std::size_t i) const { return sq_[i]; }
    double dot_with(std::size_t i, const double* c) const { return dot(data_ + i * d_, c, d_); }
    void add_to(std::size_t i, double* acc) const {
        const double* r = data_ + i * d_;
        for (std::size_t j = 0; j < d_; ++j) acc[j] += r[j];
    }
    void write_dense(std::size_t i, double* out) const {
        std::copy(data_ + i * d_, data_ + (i + 1) * d_, out);
    }

private:
    const double* data_;
    std::vector<double> owned_;
    std::vector<double> sq_;
    std::size_t n_, d_;
};

// CSR view over a PeriodicalMatrix; distances use the sparse identity
// ||x-c||^2 = ||x||^2 - 2<x,c> + ||c||^2.
class SparseRows {
public:
    SparseRows(const PeriodicalMatrix& m, bool normalize) : m_(&m) {
        if (normalize) {
            scaled_ = m.values;
            for (std::size_t i = 0; i < m.dimension; ++i) {
                double s = 0.0;
                for (std::size_t k = m.offsets[i]; k < m.offsets[i + 1]; ++k)
                    s += m.values[k] * m.values[k];
                const double nm = std::sqrt(s);
                if (nm > 0.0)
                    for (std::size_t k = m.offsets[i]; k < m.offsets[i + 1]; ++k) scaled_[k] /= nm;
            }
            values_ = scaled_.data();
        } else {
            values_ = m.values.data();
        }
        sq_.resize(m.dimension);
        for (std::size_t i = 0; i < m.dimension; ++i) {
            double s = 0.0;
            for (std::size_t k = m.offsets[i]; k < m.offsets[i + 1]; ++k)
                s += values_[k] * values_[k];
            if (!std::isfinite(s)) throw std::invalid_argument("non-finite input row");
            sq_[i] = s;
        }
    }

    std::size_t size() const { return m_->dimension; }
    std::size_t dim() const { return m_->dimension; }
    double sq_norm(std::size_t i) const { return sq_[i]; }
    double dot_with(std::size_t i, const double* c) const {
        double s = 0.0;
        for (std::size_t k = m_->offsets[i]; k < m_->offsets[i + 1]; ++k)
            s += values_[k] * c[static_cast<std::size_t>(m_->cols[k])];
        return s;
    }
    void add_to(std::size_t i, double* acc) const {
        for (std::size_t k = m_->offsets[i]; k < m_->offsets[i + 1]; ++k)
            acc[static_cast<std::size_t>(m_->cols[k])] += values_[k];
    }
    void write_dense(std::size_t i, double* out) const {
        std::fill(out, out + m_->dimension, 0.0);
        for (std::size_t k = m_->offsets[i]; k < m_->offsets[i + 1]; ++k)
            out[static_cast<std::size_t>(m_->cols[k])] = values_[k];
    }

private:
    const PeriodicalMatrix* m_;
    const double* values_;
    std::vector<double> scaled_;
    std::vector<double> sq_;
};

template <class View>
struct LloydRun {
    std::vector<std::int32_t> labels;
    std::vector<std::vector<double>> centroids;
    double inertia = 0.0;
    int iterations = 0;
};

template <class View>
LloydRun<View> lloyd_once(const View& view, const KmeansConfig& cfg, Rng& rng) {
    const std::size_t n = view.size(), d = view.dim();
    const auto k = static_cast<std::size_t>(cfg.k);

    std::vector<std::vector<double>> centroids(k, std::vector<double>(d, 0.0));
    std::vector<double> c_sq(k, 0.0);

    // k-means++ seeding: first centroid uniform, then D^2-weighted
    std::vector<double> best_d2(n, std::numeric_limits<double>::infinity());
    view.write_dense(rng.uniform(n), centroids[0].data());
    c_sq[0] = dot(centroids[0].data(), centroids[0].data(), d);
    for (std::size_t c = 1; c < k; ++c) {
        const auto& prev = centroids[c - 1];
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dist = std::max(0.0, view.sq_norm(i) - 2.0 * view.dot_with(i, prev.data()) + c_sq[c - 1]);
            best_d2[i] = std::min(best_d2[i], dist);
            total += best_d2[i];
        }
        std::size_t pick;
        if (total > 0.0) {
            const double draw = rng.real(0.0, total);
            double run = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                run += best_d2[i];
                if (run > draw) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.uniform(n); // all residual distances zero: duplicate points
        }
        view.write_dense(pick, centroids[c].data());
        c_sq[c] = dot(centroids[c].data(), centroids[c].data(), d);
    }

    LloydRun<View> run;
    run.labels.assign(n, 0);
    std::vector<double> cost(n, 0.0);
    std::vector<std::size_t> count(k, 0);

    auto assign = [&]() {
        double inertia = 0.0;
        std::fill(count.begin(), count.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const double dist = view.sq_norm(i) - 2.0 * view.dot_with(i, centroids[c].data()) + c_sq[c];
                if (dist < best) {
                    best = dist;
                    arg = c;
                }
            }
            best = std::max(0.0, best);
            run.labels[i] = static_cast<std::int32_t>(arg);
            cost[i] = best;
            inertia += best;
        }
        for (auto l : run.labels) ++count[static_cast<std::size_t>(l)];
        // empty-cluster repair: reseed from the point farthest from its centroid
        for (std::size_t c = 0; c < k; ++c) {
            if (count[c] != 0) continue;
            std::size_t far = 0;
            double far_cost = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (count[static_cast<std::size_t>(run.labels[i])] <= 1) continue; // keep singletons alive
                if (cost[i] > far_cost) {
                    far_cost = cost[i];
                    far = i;
                }
            }
            --count[static_cast<std::size_t>(run.labels[far])];
            inertia -= cost[far];
            run.labels[far] = static_cast<std::int32_t>(c);
            count[c] = 1;
            cost[far] = 0.0;
            view.write_dense(far, centroids[c].data());
            c_sq[c] = dot(centroids[c].data(), centroids[c].data(), d);
        }
        return inertia;
    };

    double inertia = assign();
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        run.iterations = iter + 1;
        // update step: centroid = mean of members (fixed-order summation)
        for (auto& c : centroids) std::fill(c.begin(), c.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            view.add_to(i, centroids[static_cast<std::size_t>(run.labels[i])].data());
        for (std::size_t c = 0; c < k; ++c) {
            for (auto& v : centroids[c]) v /= static_cast<double>(count[c]);
            c_sq[c] = dot(centroids[c].data(), centroids[c].data(), d);
        }
        const auto prev_labels = run.labels;
        const double next = assign();
        if (next > inertia * (1.0 + 1e-9) + 1e-12)
            throw std::logic_error("k-means inertia increased between iterations");
        const bool converged =
            prev_labels == run.labels || (inertia - next) <= cfg.tolerance * std::max(inertia, 1e-300);
        inertia = next;
        if (converged) break;
    }
    run.inertia = inertia;
    run.centroids = std::move(centroids);
    return run;
}

template <class View>
KmeansResult kmeans_impl(const View& view, const KmeansConfig& cfg) {
    cfg.validate();
    if (view.size() < static_cast<std::size_t>(cfg.k))
        throw std::invalid_argument("fewer points than clusters");

    LloydRun<View> best;
    int best_restart = 0;
    for (int r = 0; r < cfg.restarts; ++r) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(r)));
        auto run = lloyd_once(view, cfg, rng);
        if (r == 0 || run.inertia < best.inertia) {
            best = std::move(run);
            best_restart = r;
        }
    }

    // renumber labels by descending cluster size (ties: lower original id)
    const auto k = static_cast<std::size_t>(cfg.k);
    std::vector<std::size_t> count(k, 0);
    for (auto l : best.labels) ++count[static_cast<std::size_t>(l)];
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (count[a] != count[b]) return count[a] > count[b];
        return a < b;
    });
    std::vector<std::int32_t> remap(k);
    for (std::size_t pos = 0; pos < k; ++pos) remap[order[pos]] = static_cast<std::int32_t>(pos);

    KmeansResult res;
    res.labels.resize(best.labels.size());
    for (std::size_t i = 0; i < best.labels.size(); ++i)
        res.labels[i] = remap[static_cast<std::size_t>(best.labels[i])];
    res.centroids.resize(k);
    for (std::size_t c = 0; c < k; ++c)
        res.centroids[static_cast<std::size_t>(remap[c])] = std::move(best.centroids[c]);
    res.inertia = best.inertia;
    res.iterations = best.iterations;
    res.best_restart = best_restart;
    return res;
}

} // namespace detail

inline KmeansResult kmeans(const EmbeddingMatrix& m, const KmeansConfig& cfg) {
    detail::DenseRows view(m.data.data(), m.vocab_size(), m.dim, cfg.normalize);
    return detail::kmeans_impl(view, cfg);
}

inline KmeansResult kmeans(const PeriodicalMatrix& m, const KmeansConfig& cfg) {
    detail::SparseRows view(m, cfg.normalize);
    return detail::kmeans_impl(view, cfg);
}

inline KmeansResult kmeans_rows(const std::vector<std::vector<double>>& rows, const KmeansConfig& cfg) {
    if (rows.empty()) throw std::invalid_argument("no rows");
    std::vector<double> flat;
    flat.reserve(rows.size() * rows.front().size());
    for (const auto& r : rows) {
        if (r.size() != rows.front().size()) throw std::invalid_argument("ragged rows");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    detail::DenseRows view(flat.data(), rows.size(), rows.front().size(), cfg.normalize);
    return detail::kmeans_impl(view, cfg);
}

} // namespace perivec
