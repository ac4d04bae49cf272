#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace perivec {

// ---------------------------------------------------------------------------
// Multi-class precision / recall / F1
// ---------------------------------------------------------------------------

struct ClassPrf {
    int label = 0;
    std::size_t support = 0;   // true occurrences
    std::size_t predicted = 0; // predicted occurrences
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool zero_predicted = false; // precision forced to 0
};

struct PrfReport {
    std::vector<ClassPrf> per_class;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
    double accuracy = 0.0;
};

// Macro = unweighted mean over classes present in y_true or y_pred;
// weighted = support-weighted mean. Classes never predicted get precision 0.
inline PrfReport prf_scores(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.empty() || y_true.size() != y_pred.size())
        throw std::invalid_argument("prf_scores: empty or mismatched inputs");
    int num_labels = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] < 0 || y_pred[i] < 0)
            throw std::invalid_argument("prf_scores: negative label");
        num_labels = std::max({num_labels, y_true[i] + 1, y_pred[i] + 1});
    }
    std::vector<std::size_t> tp(num_labels, 0), sup(num_labels, 0), pred(num_labels, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        ++sup[y_true[i]];
        ++pred[y_pred[i]];
        if (y_true[i] == y_pred[i]) { ++tp[y_true[i]]; ++correct; }
    }
    PrfReport rep;
    double wp = 0, wr = 0, wf = 0, mp = 0, mr = 0, mf = 0;
    std::size_t active = 0, total_support = 0;
    for (int c = 0; c < num_labels; ++c) {
        if (sup[c] == 0 && pred[c] == 0) continue;
        ClassPrf m;
        m.label = c;
        m.support = sup[c];
        m.predicted = pred[c];
        m.zero_predicted = pred[c] == 0;
        m.precision = pred[c] ? static_cast<double>(tp[c]) / static_cast<double>(pred[c]) : 0.0;
        m.recall = sup[c] ? static_cast<double>(tp[c]) / static_cast<double>(sup[c]) : 0.0;
        m.f1 = (m.precision + m.recall) > 0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
        mp += m.precision; mr += m.recall; mf += m.f1;
        wp += m.precision * static_cast<double>(m.support);
        wr += m.recall * static_cast<double>(m.support);
        wf += m.f1 * static_cast<double>(m.support);
        total_support += m.support;
        ++active;
        rep.per_class.push_back(m);
    }
    rep.macro_precision = mp / static_cast<double>(active);
    rep.macro_recall = mr / static_cast<double>(active);
    rep.macro_f1 = mf / static_cast<double>(active);
    rep.weighted_precision = wp / static_cast<double>(total_support);
    rep.weighted_recall = wr / static_cast<double>(total_support);
    rep.weighted_f1 = wf / static_cast<double>(total_support);
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(y_true.size());
    return rep;
}

// ---------------------------------------------------------------------------
// Label-ranking metrics
// ---------------------------------------------------------------------------

// One sample's per-label scores together with the set of true labels.
struct RankedPrediction {
    std::vector<double> scores;        // score per label id
    std::vector<std::uint8_t> relevant; // 1 where the label is true
};

namespace detail {
// Indices sorted by descending score, walked as tie groups by the ranking
// metrics below.
inline std::vector<std::size_t> score_order(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}
} // namespace detail

// Ranking average precision: per true label j, the count of true labels
// scored at or above j divided by j's rank (1 = highest score, ties by
// average rank); averaged over true labels, then samples. Reduces to mean
// reciprocal rank for single-label data.
inline double ranking_average_precision(const std::vector<RankedPrediction>& preds) {
    if (preds.empty())
        throw std::invalid_argument("ranking_average_precision: no samples");
    double total = 0.0;
    for (const auto& p : preds) {
        if (p.scores.size() != p.relevant.size())
            throw std::invalid_argument("ranking_average_precision: shape mismatch");
        std::size_t n_true = 0;
        for (auto r : p.relevant) n_true += r;
        if (n_true == 0)
            throw std::invalid_argument("ranking_average_precision: sample without true label");
        const auto order = detail::score_order(p.scores);
        double sample = 0.0;
        std::size_t group_start = 0, true_above = 0;
        while (group_start < order.size()) {
            std::size_t group_end = group_start;
            std::size_t true_in_group = 0;
            const double s = p.scores[order[group_start]];
            for (; group_end < order.size() && p.scores[order[group_end]] == s; ++group_end)
                true_in_group += p.relevant[order[group_end]];
            // ranks group_start+1 .. group_end share the average rank
            const double avg_rank =
                (static_cast<double>(group_start) + 1.0 + static_cast<double>(group_end)) / 2.0;
            sample += static_cast<double>(true_in_group) *
                      static_cast<double>(true_above + true_in_group) / avg_rank;
            true_above += true_in_group;
            group_start = group_end;
        }
        total += sample / static_cast<double>(n_true);
    }
    return total / static_cast<double>(preds.size());
}

// Fraction of (true, false) label pairs ordered incorrectly (ties count as
// incorrect), normalized per sample by |Y||Y-bar| and averaged over samples.
inline double ranking_loss(const std::vector<RankedPrediction>& preds) {
    if (preds.empty()) throw std::invalid_argument("ranking_loss: no samples");
    double total = 0.0;
    for (const auto& p : preds) {
        if (p.scores.size() != p.relevant.size())
            throw std::invalid_argument("ranking_loss: shape mismatch");
        std::size_t n_true = 0;
        for (auto r : p.relevant) n_true += r;
        const std::size_t n_false = p.scores.size() - n_true;
        if (n_true == 0 || n_false == 0)
            throw std::invalid_argument("ranking_loss: sample needs both true and false labels");
        const auto order = detail::score_order(p.scores);
        // A pair (true j, false k) is incorrect when f(j) <= f(k): for each
        // true label, count false labels in its own tie group or above.
        std::size_t bad = 0, false_above = 0, group_start = 0;
        while (group_start < order.size()) {
            std::size_t group_end = group_start;
            std::size_t true_in_group = 0, false_in_group = 0;
            const double s = p.scores[order[group_start]];
            for (; group_end < order.size() && p.scores[order[group_end]] == s; ++group_end)
                (p.relevant[order[group_end]] ? true_in_group : false_in_group)++;
            bad += true_in_group * (false_above + false_in_group);
            false_above += false_in_group;
            group_start = group_end;
        }
        total += static_cast<double>(bad) /
                 (static_cast<double>(n_true) * static_cast<double>(n_false));
    }
    return total / static_cast<double>(preds.size());
}

// ---------------------------------------------------------------------------
// Binary PR / ROC curves, AP, AUC
// ---------------------------------------------------------------------------

struct CurvePoint {
    double threshold = 0.0;
    double x = 0.0; // PR: recall, ROC: false positive rate
    double y = 0.0; // PR: precision, ROC: true positive rate
};

struct BinaryCurves {
    std::vector<CurvePoint> pr;  // one point per distinct threshold, recall ascending
    std::vector<CurvePoint> roc; // includes the (0,0) origin
    double average_precision = 0.0;
    double auc = 0.0;
};

// Threshold sweep over distinct score values (tied scores move together).
// AP is the step-sum over the PR curve; AUC the trapezoid over the ROC curve.
inline BinaryCurves pr_roc_curves(const std::vector<double>& scores,
                                  const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("pr_roc_curves: empty or mismatched inputs");
    std::size_t pos = 0;
    for (auto l : labels) pos += l ? 1 : 0;
    const std::size_t neg = scores.size() - pos;
    if (pos == 0 || neg == 0)
        throw std::invalid_argument("pr_roc_curves: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    BinaryCurves out;
    out.roc.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    double prev_recall = 0.0, prev_fpr = 0.0, prev_tpr = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double thr = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == thr; ++i)
            (labels[order[i]] ? tp : fp)++;
        const double recall = static_cast<double>(tp) / static_cast<double>(pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double tpr = recall;
        const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
        out.pr.push_back({thr, recall, precision});
        out.roc.push_back({thr, fpr, tpr});
        out.average_precision += (recall - prev_recall) * precision;
        out.auc += (fpr - prev_fpr) * 0.5 * (tpr + prev_tpr);
        prev_recall = recall;
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    return out;
}

// Unweighted mean over per-class values (Macro-AP, Macro-AUC).
inline double macro_average(const std::vector<double>& per_class) {
    if (per_class.empty()) throw std::invalid_argument("macro_average: empty");
    return std::accumulate(per_class.begin(), per_class.end(), 0.0) /
           static_cast<double>(per_class.size());
}

// ---------------------------------------------------------------------------
// Partition agreement (NMI / ARI / FMI)
// ---------------------------------------------------------------------------

namespace detail {

struct Contingency {
    std::map<std::pair<int, int>, std::size_t> joint;
    std::map<int, std::size_t> rows, cols;
    std::size_t n = 0;
};

inline Contingency contingency(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("partition metrics: empty or mismatched universes");
    Contingency c;
    c.n = a.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++c.joint[{a[i], b[i]}];
        ++c.rows[a[i]];
        ++c.cols[b[i]];
    }
    return c;
}

inline double comb2(std::size_t x) {
    return x < 2 ? 0.0 : 0.5 * static_cast<double>(x) * static_cast<double>(x - 1);
}

inline double entropy(const std::map<int, std::size_t>& sizes, std::size_t n) {
    double h = 0.0;
    for (const auto& [label, cnt] : sizes) {
        const double p = static_cast<double>(cnt) / static_cast<double>(n);
        h -= p * std::log(p);
    }
    return h;
}

} // namespace detail

// Normalized mutual information, MI / sqrt(H(a) H(b)), natural log.
// Conventions: 1 when the partitions are identical up to relabeling even if
// both entropies are 0; 0 when exactly one side is a single cluster.
inline double nmi(const std::vector<int>& a, const std::vector<int>& b) {
    const auto c = detail::contingency(a, b);
    const double ha = detail::entropy(c.rows, c.n);
    const double hb = detail::entropy(c.cols, c.n);
    if (ha == 0.0 && hb == 0.0) return 1.0; // both single-cluster: identical
    if (ha == 0.0 || hb == 0.0) return 0.0;
    double mi = 0.0;
    const double n = static_cast<double>(c.n);
    for (const auto& [cell, cnt] : c.joint) {
        const double pij = static_cast<double>(cnt) / n;
        const double pi = static_cast<double>(c.rows.at(cell.first)) / n;
        const double qj = static_cast<double>(c.cols.at(cell.second)) / n;
        mi += pij * std::log(pij / (pi * qj));
    }
    return mi / std::sqrt(ha * hb);
}

// Adjusted Rand index in the pair-counting contingency form.
inline double ari(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() < 2) throw std::invalid_argument("ari: need at least 2 elements");
    const auto c = detail::contingency(a, b);
    double sum_joint = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [cell, cnt] : c.joint) sum_joint += detail::comb2(cnt);
    for (const auto& [l, cnt] : c.rows) sum_rows += detail::comb2(cnt);
    for (const auto& [l, cnt] : c.cols) sum_cols += detail::comb2(cnt);
    const double pairs = detail::comb2(c.n);
    const double expected = sum_rows * sum_cols / pairs;
    const double maximum = 0.5 * (sum_rows + sum_cols);
    if (maximum == expected) return 1.0; // degenerate: e.g. both all-singletons
    return (sum_joint - expected) / (maximum - expected);
}

// Fowlkes-Mallows index over co-membership pairs; the first labeling is the
// reference for the TP/FP/FN naming (the value itself is symmetric).
inline double fmi(const std::vector<int>& a, const std::vector<int>& b,
                  bool* degenerate = nullptr) {
    if (a.size() < 2) throw std::invalid_argument("fmi: need at least 2 elements");
    const auto c = detail::contingency(a, b);
    double tp = 0.0, together_a = 0.0, together_b = 0.0;
    for (const auto& [cell, cnt] : c.joint) tp += detail::comb2(cnt);
    for (const auto& [l, cnt] : c.rows) together_a += detail::comb2(cnt);
    for (const auto& [l, cnt] : c.cols) together_b += detail::comb2(cnt);
    if (degenerate) *degenerate = together_a == 0.0 || together_b == 0.0;
    if (together_a == 0.0 || together_b == 0.0) return 0.0;
    // together_a = TP + FN, together_b = TP + FP
    return tp / std::sqrt(together_b * together_a);
}

// ---------------------------------------------------------------------------
// Element-centric clustering similarity (hard partitions)
// ---------------------------------------------------------------------------

// Per-element agreement between two hard partitions. The affinity of element
// i to j is alpha/|C(i)| when j shares i's cluster plus (1-alpha) on i itself;
// S_i = 1 - (1/2alpha) * L1 distance between the two affinity rows.
inline std::vector<double> element_centric_similarity(const std::vector<int>& a,
                                                      const std::vector<int>& b,
                                                      double alpha = 0.9) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("element_centric_similarity: alpha must be in (0,1)");
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("element_centric_similarity: mismatched universes");
    const std::size_t n = a.size();
    std::unordered_map<int, std::vector<std::size_t>> clusters_a, clusters_b;
    for (std::size_t i = 0; i < n; ++i) {
        clusters_a[a[i]].push_back(i);
        clusters_b[b[i]].push_back(i);
    }
    std::vector<double> sim(n, 0.0);
    std::vector<double> row_a(n, 0.0), row_b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& ca = clusters_a.at(a[i]);
        const auto& cb = clusters_b.at(b[i]);
        for (std::size_t j : ca) row_a[j] = alpha / static_cast<double>(ca.size());
        for (std::size_t j : cb) row_b[j] = alpha / static_cast<double>(cb.size());
        row_a[i] += 1.0 - alpha;
        row_b[i] += 1.0 - alpha;
        double l1 = 0.0;
        for (std::size_t j : ca) l1 += std::abs(row_a[j] - row_b[j]);
        for (std::size_t j : cb)
            if (row_a[j] == 0.0) l1 += row_b[j]; // not in C_a(i), counted once
        sim[i] = 1.0 - l1 / (2.0 * alpha);
        for (std::size_t j : ca) row_a[j] = 0.0;
        for (std::size_t j : cb) row_b[j] = 0.0;
        row_a[i] = row_b[i] = 0.0;
    }
    return sim;
}

// ---------------------------------------------------------------------------
// Inverse distance weighting (Shepard interpolation)
// ---------------------------------------------------------------------------

struct IdwSample {
    double x = 0.0, y = 0.0, value = 0.0;
};

struct GridSpec {
    double x_min = 0.0, x_max = 1.0;
    double y_min = 0.0, y_max = 1.0;
    int nx = 2, ny = 2;
};

inline double idw_at(const std::vector<IdwSample>& samples, double qx, double qy,
                     double power) {
    if (samples.empty()) throw std::invalid_argument("idw: no samples");
    if (!(power > 0.0)) throw std::invalid_argument("idw: power must be positive");
    constexpr double kExactEps = 1e-12;
    double num = 0.0, den = 0.0;
    for (const auto& s : samples) {
        const double dx = qx - s.x, dy = qy - s.y;
        const double d = std::sqrt(dx * dx + dy * dy);
        if (d < kExactEps) return s.value;
        const double w = 1.0 / std::pow(d, power);
        num += w * s.value;
        den += w;
    }
    return num / den;
}

// Row-major ny x nx grid over the spec; grid lines include both ends.
inline std::vector<double> idw_interpolate(const std::vector<IdwSample>& samples,
                                           const GridSpec& grid, double power = 2.0) {
    if (grid.nx < 1 || grid.ny < 1) throw std::invalid_argument("idw: bad grid");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny));
    for (int iy = 0; iy < grid.ny; ++iy) {
        const double y = grid.ny == 1 ? grid.y_min
                                      : grid.y_min + (grid.y_max - grid.y_min) * iy / (grid.ny - 1);
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double x = grid.nx == 1 ? grid.x_min
                                          : grid.x_min + (grid.x_max - grid.x_min) * ix / (grid.nx - 1);
            out.push_back(idw_at(samples, x, y, power));
        }
    }
    return out;
}

} // namespace perivec
