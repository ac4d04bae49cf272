#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "perivec/hashing.hpp"
#include "perivec/io.hpp"
#include "perivec/metrics.hpp"
#include "perivec/rng.hpp"

namespace perivec {

struct CnbConfig {
    double alpha = 1.0;
    // Weight-normalized variant (divide each class's weight vector by its L1
    // norm). Changes ranking behaviour, so it stays off unless asked for.
    bool weight_normalize = false;
};

// Complement Naive Bayes. For each class y the model stores
//   w(i, y) = log P(x_i | y-bar) = log((c_i(y-bar) + alpha) / (c(y-bar) + alpha * V))
// over the vocabulary V of feature indices observed anywhere in training.
// A feature unseen in training scores with the zero-count weight.
struct CnbModel {
    std::size_t m = 0;          // hashed feature-space dimensionality
    std::size_t vocab_size = 0; // |V|: distinct feature indices observed in training
    double alpha = 1.0;
    bool weight_normalized = false;
    std::vector<int> classes;   // ascending label ids
    std::vector<double> log_prior;
    std::unordered_map<std::uint32_t, std::vector<double>> weights; // index -> per-class w
    std::vector<double> default_weight; // per-class w for an observed-nowhere index

    // Some class in the universe had no training documents; priors were
    // add-one smoothed: P(y) = (n_y + 1) / (N + |classes|).
    bool prior_smoothed = false;
    // Training saw fewer than two distinct classes (legal only when the
    // caller opts in, e.g. a one-vs-rest split whose "rest" side is empty).
    bool degenerate = false;

    std::size_t num_classes() const { return classes.size(); }
};

// class_universe fixes the score-row layout across folds; empty means
// "derive from the labels". allow_degenerate permits single-class input.
inline CnbModel cnb_fit(const std::vector<HashedVector>& docs, const std::vector<int>& labels,
                        const CnbConfig& cfg = {}, std::vector<int> class_universe = {},
                        bool allow_degenerate = false) {
    if (docs.empty() || docs.size() != labels.size())
        throw std::invalid_argument("cnb_fit: empty or mismatched inputs");
    if (!(cfg.alpha > 0.0)) throw std::invalid_argument("cnb_fit: alpha must be positive");
    const std::size_t m = docs.front().m;
    for (const auto& d : docs)
        if (d.m != m) throw std::invalid_argument("cnb_fit: mixed feature dimensionalities");

    if (class_universe.empty()) {
        std::set<int> seen(labels.begin(), labels.end());
        class_universe.assign(seen.begin(), seen.end());
    } else {
        std::sort(class_universe.begin(), class_universe.end());
        class_universe.erase(std::unique(class_universe.begin(), class_universe.end()),
                             class_universe.end());
    }
    std::unordered_map<int, std::size_t> class_index;
    for (std::size_t c = 0; c < class_universe.size(); ++c)
        class_index[class_universe[c]] = c;

    CnbModel model;
    model.m = m;
    model.alpha = cfg.alpha;
    model.weight_normalized = cfg.weight_normalize;
    model.classes = std::move(class_universe);
    const std::size_t num_c = model.classes.size();

    std::vector<std::size_t> docs_per_class(num_c, 0);
    std::vector<double> total_per_class(num_c, 0.0);
    std::unordered_map<std::uint32_t, std::vector<double>> counts; // index -> per-class
    double grand_total = 0.0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const auto it = class_index.find(labels[i]);
        if (it == class_index.end())
            throw std::invalid_argument("cnb_fit: label outside the class universe");
        const std::size_t c = it->second;
        ++docs_per_class[c];
        for (const auto& [idx, cnt] : docs[i].entries) {
            auto& row = counts[idx];
            if (row.empty()) row.assign(num_c, 0.0);
            row[c] += cnt;
            total_per_class[c] += cnt;
            grand_total += cnt;
        }
    }

    std::size_t present = 0;
    for (auto n : docs_per_class) present += n > 0 ? 1 : 0;
    if (present < 2) {
        if (!allow_degenerate)
            throw std::invalid_argument("cnb_fit: need at least two classes with documents");
        model.degenerate = true;
    }
    model.prior_smoothed =
        std::any_of(docs_per_class.begin(), docs_per_class.end(), [](std::size_t n) { return n == 0; });

    const double n_docs = static_cast<double>(docs.size());
    model.log_prior.resize(num_c);
    for (std::size_t c = 0; c < num_c; ++c) {
        const double n_c = static_cast<double>(docs_per_class[c]);
        model.log_prior[c] = model.prior_smoothed
                                 ? std::log((n_c + 1.0) / (n_docs + static_cast<double>(num_c)))
                                 : std::log(n_c / n_docs);
    }

    model.vocab_size = counts.size();
    const double v = static_cast<double>(model.vocab_size);
    std::vector<double> comp_total(num_c);
    for (std::size_t c = 0; c < num_c; ++c) comp_total[c] = grand_total - total_per_class[c];

    model.default_weight.assign(num_c, 0.0);
    if (model.vocab_size > 0) {
        for (std::size_t c = 0; c < num_c; ++c)
            model.default_weight[c] = std::log(cfg.alpha / (comp_total[c] + cfg.alpha * v));
        model.weights.reserve(counts.size());
        for (const auto& [idx, row] : counts) {
            double global_count = 0.0;
            for (double x : row) global_count += x;
            std::vector<double> w(num_c);
            for (std::size_t c = 0; c < num_c; ++c)
                w[c] = std::log((global_count - row[c] + cfg.alpha) / (comp_total[c] + cfg.alpha * v));
            model.weights.emplace(idx, std::move(w));
        }
    }

    if (cfg.weight_normalize && model.vocab_size > 0) {
        std::vector<double> norm(num_c, 0.0);
        for (const auto& [idx, w] : model.weights)
            for (std::size_t c = 0; c < num_c; ++c) norm[c] += std::abs(w[c]);
        for (auto& [idx, w] : model.weights)
            for (std::size_t c = 0; c < num_c; ++c)
                if (norm[c] > 0.0) w[c] /= norm[c];
        for (std::size_t c = 0; c < num_c; ++c)
            if (norm[c] > 0.0) model.default_weight[c] /= norm[c];
    }
    return model;
}

struct CnbPrediction {
    int label = 0;
    std::vector<double> scores; // aligned with model.classes
};

// s_y = log P(y) - sum_i x_i * w(i, y); ties go to the smallest label id.
inline CnbPrediction cnb_predict(const CnbModel& model, const HashedVector& doc) {
    if (doc.m != model.m)
        throw std::invalid_argument("cnb_predict: feature dimensionality mismatch");
    if (model.classes.empty()) throw std::invalid_argument("cnb_predict: empty model");
    CnbPrediction out;
    out.scores = model.log_prior;
    for (const auto& [idx, cnt] : doc.entries) {
        const auto it = model.weights.find(idx);
        const std::vector<double>& w = it != model.weights.end() ? it->second : model.default_weight;
        for (std::size_t c = 0; c < out.scores.size(); ++c) out.scores[c] -= cnt * w[c];
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < out.scores.size(); ++c)
        if (out.scores[c] > out.scores[best]) best = c;
    out.label = model.classes[best];
    return out;
}

// ---------------------------------------------------------------------------
// Stratified k-fold cross-validation
// ---------------------------------------------------------------------------

struct FoldPlan {
    int folds = 0;
    std::vector<int> fold_of; // per sample

    std::vector<std::size_t> test_indices(int fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < fold_of.size(); ++i)
            if (fold_of[i] == fold) out.push_back(i);
        return out;
    }
};

// Per class: shuffle that class's samples, then deal them round-robin from a
// rotating start so remainders spread across folds. Every fold ends up with
// floor(n_c / k) or ceil(n_c / k) samples of each class.
inline FoldPlan stratified_folds(const std::vector<int>& labels, int folds, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("stratified_folds: need at least 2 folds");
    if (labels.size() < static_cast<std::size_t>(folds))
        throw std::invalid_argument("stratified_folds: more folds than samples");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    FoldPlan plan;
    plan.folds = folds;
    plan.fold_of.assign(labels.size(), -1);
    int offset = 0;
    std::uint64_t class_ordinal = 0;
    for (auto& [label, indices] : by_class) {
        Rng rng(derive_seed(seed, 0xf01d5ULL, class_ordinal++));
        rng.shuffle(indices);
        for (std::size_t j = 0; j < indices.size(); ++j)
            plan.fold_of[indices[j]] = static_cast<int>((offset + j) % static_cast<std::size_t>(folds));
        offset = static_cast<int>((offset + indices.size()) % static_cast<std::size_t>(folds));
    }
    return plan;
}

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0; // population standard deviation over folds
};

inline MeanStd mean_std(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean_std: empty");
    MeanStd out;
    for (double x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(xs.size()));
    return out;
}

struct FoldOutcome {
    int fold = 0;
    std::size_t test_size = 0;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0, accuracy = 0.0;
    bool prior_smoothed = false; // some class was absent from this training split
};

struct CrossvalReport {
    int folds = 0;
    std::vector<int> classes; // ascending, fixed across folds
    std::vector<FoldOutcome> fold_outcomes;
    MeanStd macro_precision, macro_recall, macro_f1, accuracy;
    FoldPlan plan;
    // Pooled out-of-fold results, aligned with the input sample order. Each
    // sample's row comes from the one fold where it sat in the test split.
    std::vector<int> predicted;
    std::vector<std::vector<double>> scores;
};

inline CrossvalReport crossval_multiclass(const std::vector<HashedVector>& docs,
                                          const std::vector<int>& labels, int folds,
                                          const CnbConfig& cfg, std::uint64_t seed) {
    if (docs.size() != labels.size() || docs.empty())
        throw std::invalid_argument("crossval_multiclass: empty or mismatched inputs");
    std::set<int> seen(labels.begin(), labels.end());
    if (seen.size() < 2)
        throw std::invalid_argument("crossval_multiclass: need at least two classes");
    CrossvalReport rep;
    rep.folds = folds;
    rep.classes.assign(seen.begin(), seen.end());
    rep.plan = stratified_folds(labels, folds, seed);
    rep.predicted.assign(docs.size(), -1);
    rep.scores.assign(docs.size(), {});

    std::vector<double> mp, mr, mf, acc;
    for (int f = 0; f < folds; ++f) {
        std::vector<HashedVector> train_docs;
        std::vector<int> train_labels;
        std::vector<std::size_t> test;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            if (rep.plan.fold_of[i] == f) {
                test.push_back(i);
            } else {
                train_docs.push_back(docs[i]);
                train_labels.push_back(labels[i]);
            }
        }
        const CnbModel model = cnb_fit(train_docs, train_labels, cfg, rep.classes);
        std::vector<int> y_true, y_pred;
        for (std::size_t i : test) {
            auto pred = cnb_predict(model, docs[i]);
            rep.predicted[i] = pred.label;
            rep.scores[i] = std::move(pred.scores);
            y_true.push_back(labels[i]);
            y_pred.push_back(rep.predicted[i]);
        }
        const PrfReport prf = prf_scores(y_true, y_pred);
        FoldOutcome fo;
        fo.fold = f;
        fo.test_size = test.size();
        fo.macro_precision = prf.macro_precision;
        fo.macro_recall = prf.macro_recall;
        fo.macro_f1 = prf.macro_f1;
        fo.accuracy = prf.accuracy;
        fo.prior_smoothed = model.prior_smoothed;
        rep.fold_outcomes.push_back(fo);
        mp.push_back(fo.macro_precision);
        mr.push_back(fo.macro_recall);
        mf.push_back(fo.macro_f1);
        acc.push_back(fo.accuracy);
    }
    rep.macro_precision = mean_std(mp);
    rep.macro_recall = mean_std(mr);
    rep.macro_f1 = mean_std(mf);
    rep.accuracy = mean_std(acc);
    return rep;
}

// ---------------------------------------------------------------------------
// One-vs-rest binary decomposition (for PR / ROC curves)
// ---------------------------------------------------------------------------

struct OvrOutput {
    std::vector<int> classes;
    FoldPlan plan;
    // Per class, aligned with the input sample order. score = s_pos - s_neg
    // from the fold where the sample was out-of-fold; scored = 0 where the
    // class was skipped in that fold.
    std::vector<std::vector<double>> score;
    std::vector<std::vector<std::uint8_t>> scored;
    std::vector<std::vector<std::uint8_t>> relevant;
    std::vector<std::pair<int, int>> skipped; // (fold, class label): no positives in training
};

inline OvrOutput one_vs_rest(const std::vector<HashedVector>& docs, const std::vector<int>& labels,
                             int folds, const CnbConfig& cfg, std::uint64_t seed) {
    if (docs.size() != labels.size() || docs.empty())
        throw std::invalid_argument("one_vs_rest: empty or mismatched inputs");
    std::set<int> seen(labels.begin(), labels.end());
    if (seen.size() < 2) throw std::invalid_argument("one_vs_rest: need at least two classes");
    OvrOutput out;
    out.classes.assign(seen.begin(), seen.end());
    out.plan = stratified_folds(labels, folds, seed);
    const std::size_t num_c = out.classes.size();
    out.score.assign(num_c, std::vector<double>(docs.size(), 0.0));
    out.scored.assign(num_c, std::vector<std::uint8_t>(docs.size(), 0));
    out.relevant.assign(num_c, std::vector<std::uint8_t>(docs.size(), 0));
    for (std::size_t k = 0; k < num_c; ++k)
        for (std::size_t i = 0; i < labels.size(); ++i)
            out.relevant[k][i] = labels[i] == out.classes[k] ? 1 : 0;

    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < docs.size(); ++i)
            (out.plan.fold_of[i] == f ? test : train).push_back(i);
        std::vector<HashedVector> train_docs;
        train_docs.reserve(train.size());
        for (std::size_t i : train) train_docs.push_back(docs[i]);

        for (std::size_t k = 0; k < num_c; ++k) {
            std::vector<int> binary(train.size());
            std::size_t positives = 0;
            for (std::size_t j = 0; j < train.size(); ++j) {
                binary[j] = labels[train[j]] == out.classes[k] ? 1 : 0;
                positives += static_cast<std::size_t>(binary[j]);
            }
            if (positives == 0) {
                out.skipped.emplace_back(f, out.classes[k]);
                continue;
            }
            const CnbModel model = cnb_fit(train_docs, binary, cfg, {0, 1}, true);
            for (std::size_t i : test) {
                const auto pred = cnb_predict(model, docs[i]);
                out.score[k][i] = pred.scores[1] - pred.scores[0];
                out.scored[k][i] = 1;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

// One line per sample: sample_id <TAB> true_label <TAB> score_0,score_1,...
inline void write_scores(const std::string& path, const std::vector<std::string>& sample_ids,
                         const std::vector<int>& y_true,
                         const std::vector<std::vector<double>>& scores) {
    if (sample_ids.size() != y_true.size() || y_true.size() != scores.size())
        throw std::invalid_argument("write_scores: mismatched inputs");
    std::string out;
    for (std::size_t i = 0; i < sample_ids.size(); ++i) {
        out += sample_ids[i];
        out += '\t';
        out += std::to_string(y_true[i]);
        out += '\t';
        for (std::size_t c = 0; c < scores[i].size(); ++c) {
            if (c) out += ',';
            out += format_double(scores[i][c]);
        }
        out += '\n';
    }
    write_file(path, out);
}

inline nlohmann::json crossval_to_json(const CrossvalReport& rep) {
    nlohmann::json j;
    j["folds"] = rep.folds;
    j["classes"] = rep.classes;
    auto ms = [](const MeanStd& m) {
        return nlohmann::json{{"mean", m.mean}, {"std", m.stddev}};
    };
    j["aggregate"] = {{"macro_precision", ms(rep.macro_precision)},
                      {"macro_recall", ms(rep.macro_recall)},
                      {"macro_f1", ms(rep.macro_f1)},
                      {"accuracy", ms(rep.accuracy)}};
    j["fold_metrics"] = nlohmann::json::array();
    for (const auto& fo : rep.fold_outcomes) {
        j["fold_metrics"].push_back({{"fold", fo.fold},
                                     {"test_size", fo.test_size},
                                     {"macro_precision", fo.macro_precision},
                                     {"macro_recall", fo.macro_recall},
                                     {"macro_f1", fo.macro_f1},
                                     {"accuracy", fo.accuracy},
                                     {"prior_smoothed", fo.prior_smoothed}});
    }
    return j;
}

} // namespace perivec
