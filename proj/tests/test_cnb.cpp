#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "perivec/cnb.hpp"
#include "perivec/hashing.hpp"
#include "perivec/metrics.hpp"
#include "perivec/rng.hpp"

using namespace perivec;
using Catch::Approx;

namespace {

HashedVector hv(std::size_t m, std::vector<std::pair<std::uint32_t, double>> entries) {
    HashedVector v;
    v.m = m;
    v.entries = std::move(entries);
    return v;
}

// Three classes with disjoint vocabularies; trivially separable.
struct SeparableCorpus {
    std::vector<HashedVector> docs;
    std::vector<int> labels;
    std::vector<std::string> ids;
};

SeparableCorpus separable(int per_class, std::size_t m = 1 << 16) {
    SeparableCorpus c;
    const char* stems[3] = {"enzyme", "galaxy", "tariff"};
    for (int cls = 0; cls < 3; ++cls) {
        for (int d = 0; d < per_class; ++d) {
            std::string text;
            for (int w = 0; w < 6; ++w)
                text += std::string(stems[cls]) + std::to_string((d + w) % 9) + " ";
            c.docs.push_back(hash_vectorize(text, m));
            c.labels.push_back(cls);
            c.ids.push_back("doc" + std::to_string(c.ids.size()));
        }
    }
    return c;
}

} // namespace

TEST_CASE("cnb worked example: complement probabilities and prediction") {
    // class 1 holds one document "a a", class 2 one document "b";
    // feature 0 = a, feature 1 = b in a 2-dimensional space.
    const std::vector<HashedVector> docs = {hv(2, {{0, 2.0}}), hv(2, {{1, 1.0}})};
    const std::vector<int> labels = {1, 2};
    const CnbModel model = cnb_fit(docs, labels);

    REQUIRE(model.classes == std::vector<int>{1, 2});
    CHECK(model.vocab_size == 2);
    CHECK_FALSE(model.prior_smoothed);
    CHECK_FALSE(model.degenerate);
    CHECK(model.log_prior[0] == Approx(std::log(0.5)));
    CHECK(model.log_prior[1] == Approx(std::log(0.5)));

    // complement of class 1 = {"b"}: P(a|~1) = (0+1)/(1+2), P(b|~1) = (1+1)/(1+2)
    CHECK(std::exp(model.weights.at(0)[0]) == Approx(1.0 / 3.0));
    CHECK(std::exp(model.weights.at(1)[0]) == Approx(2.0 / 3.0));
    // complement of class 2 = {"a a"}: P(a|~2) = (2+1)/(2+2), P(b|~2) = (0+1)/(2+2)
    CHECK(std::exp(model.weights.at(0)[1]) == Approx(3.0 / 4.0));
    CHECK(std::exp(model.weights.at(1)[1]) == Approx(1.0 / 4.0));

    // classify "a": s_1 = log(1/2) - log(1/3) > s_2 = log(1/2) - log(3/4)
    const auto pred = cnb_predict(model, hv(2, {{0, 1.0}}));
    CHECK(pred.label == 1);
    CHECK(pred.scores[0] == Approx(std::log(0.5) - std::log(1.0 / 3.0)));
    CHECK(pred.scores[1] == Approx(std::log(0.5) - std::log(3.0 / 4.0)));
    CHECK(pred.scores[0] > pred.scores[1]);
}

TEST_CASE("cnb zero vector falls back to priors") {
    // class 5 has three documents, class 9 one; an empty document must pick
    // the prior argmax.
    const std::vector<HashedVector> docs = {hv(4, {{0, 1.0}}), hv(4, {{1, 1.0}}),
                                            hv(4, {{2, 1.0}}), hv(4, {{3, 1.0}})};
    const std::vector<int> labels = {5, 5, 5, 9};
    const CnbModel model = cnb_fit(docs, labels);
    const auto pred = cnb_predict(model, hv(4, {}));
    CHECK(pred.label == 5);
    CHECK(pred.scores[0] == Approx(std::log(0.75)));
    CHECK(pred.scores[1] == Approx(std::log(0.25)));
}

TEST_CASE("cnb ties break to the smallest label id") {
    // Fully symmetric two-class setup: both the empty document (equal priors)
    // and the document {a:1, b:1} (symmetric likelihoods) are exact ties.
    const std::vector<HashedVector> docs = {hv(2, {{0, 1.0}}), hv(2, {{1, 1.0}})};
    const std::vector<int> labels = {3, 7};
    const CnbModel model = cnb_fit(docs, labels);

    const auto empty_pred = cnb_predict(model, hv(2, {}));
    CHECK(empty_pred.scores[0] == empty_pred.scores[1]);
    CHECK(empty_pred.label == 3);

    const auto sym_pred = cnb_predict(model, hv(2, {{0, 1.0}, {1, 1.0}}));
    CHECK(sym_pred.scores[0] == Approx(sym_pred.scores[1]));
    CHECK(sym_pred.label == 3);
}

TEST_CASE("cnb prediction is invariant to a constant score shift") {
    const auto corpus = separable(5);
    const CnbModel model = cnb_fit(corpus.docs, corpus.labels);
    for (const auto& doc : corpus.docs) {
        const auto pred = cnb_predict(model, doc);
        std::vector<double> shifted = pred.scores;
        for (auto& s : shifted) s += 1234.5;
        std::size_t best = 0;
        for (std::size_t c = 1; c < shifted.size(); ++c)
            if (shifted[c] > shifted[best]) best = c;
        CHECK(model.classes[best] == pred.label);
    }
}

TEST_CASE("cnb input validation") {
    const std::vector<HashedVector> docs = {hv(8, {{0, 1.0}}), hv(8, {{1, 1.0}})};
    CHECK_THROWS_AS(cnb_fit({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(cnb_fit(docs, {0}), std::invalid_argument);
    CHECK_THROWS_AS(cnb_fit(docs, {0, 0}), std::invalid_argument); // single class
    CHECK_THROWS_AS(cnb_fit(docs, {0, 1}, CnbConfig{0.0, false}), std::invalid_argument);
    CHECK_THROWS_AS(cnb_fit({hv(8, {}), hv(4, {})}, {0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(cnb_fit(docs, {0, 2}, {}, {0, 1}), std::invalid_argument); // outside universe

    const CnbModel model = cnb_fit(docs, {0, 1});
    CHECK_THROWS_AS(cnb_predict(model, hv(16, {})), std::invalid_argument);
}

TEST_CASE("cnb degenerate one-class fit is flagged when allowed") {
    const std::vector<HashedVector> docs = {hv(4, {{0, 1.0}}), hv(4, {{0, 2.0}})};
    const CnbModel model = cnb_fit(docs, {1, 1}, {}, {0, 1}, true);
    CHECK(model.degenerate);
    CHECK(model.prior_smoothed); // class 0 absent -> smoothed priors
    // priors: (0+1)/(2+2) and (2+1)/(2+2)
    CHECK(model.log_prior[0] == Approx(std::log(0.25)));
    CHECK(model.log_prior[1] == Approx(std::log(0.75)));
    // still usable for scoring
    const auto pred = cnb_predict(model, hv(4, {{0, 1.0}}));
    CHECK(pred.scores.size() == 2);
}

TEST_CASE("cnb missing universe class gets smoothed prior") {
    const std::vector<HashedVector> docs = {hv(4, {{0, 1.0}}), hv(4, {{1, 1.0}})};
    const CnbModel model = cnb_fit(docs, {0, 1}, {}, {0, 1, 2});
    CHECK(model.prior_smoothed);
    CHECK_FALSE(model.degenerate);
    CHECK(model.log_prior[0] == Approx(std::log(2.0 / 5.0)));
    CHECK(model.log_prior[2] == Approx(std::log(1.0 / 5.0)));
    const auto pred = cnb_predict(model, hv(4, {{0, 1.0}}));
    CHECK(pred.scores.size() == 3);
}

TEST_CASE("cnb weight-normalized variant changes weights, not their signs") {
    const auto corpus = separable(4);
    const CnbModel plain = cnb_fit(corpus.docs, corpus.labels, CnbConfig{1.0, false});
    const CnbModel normed = cnb_fit(corpus.docs, corpus.labels, CnbConfig{1.0, true});
    CHECK_FALSE(plain.weight_normalized);
    CHECK(normed.weight_normalized);
    bool any_different = false;
    for (const auto& [idx, w] : plain.weights) {
        const auto& wn = normed.weights.at(idx);
        for (std::size_t c = 0; c < w.size(); ++c) {
            if (w[c] != wn[c]) any_different = true;
            CHECK((w[c] < 0) == (wn[c] < 0));
        }
    }
    CHECK(any_different);
}

TEST_CASE("separable corpus: perfect training accuracy") {
    const auto corpus = separable(10);
    const CnbModel model = cnb_fit(corpus.docs, corpus.labels);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < corpus.docs.size(); ++i)
        correct += cnb_predict(model, corpus.docs[i]).label == corpus.labels[i] ? 1 : 0;
    CHECK(correct == corpus.docs.size());
}

TEST_CASE("stratified folds: exact partition and per-class balance") {
    std::vector<int> labels;
    for (int i = 0; i < 47; ++i) labels.push_back(0);
    for (int i = 0; i < 23; ++i) labels.push_back(1);
    for (int i = 0; i < 11; ++i) labels.push_back(2);
    const FoldPlan plan = stratified_folds(labels, 10, 42);

    REQUIRE(plan.fold_of.size() == labels.size());
    std::map<std::pair<int, int>, int> per_class_fold;
    std::vector<int> fold_sizes(10, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        REQUIRE(plan.fold_of[i] >= 0);
        REQUIRE(plan.fold_of[i] < 10);
        ++per_class_fold[{labels[i], plan.fold_of[i]}];
        ++fold_sizes[static_cast<std::size_t>(plan.fold_of[i])];
    }
    // every sample lands in exactly one fold by construction; class counts
    // per fold may differ by at most one
    for (int cls : {0, 1, 2}) {
        int lo = 1 << 30, hi = 0;
        for (int f = 0; f < 10; ++f) {
            const int n = per_class_fold[{cls, f}];
            lo = std::min(lo, n);
            hi = std::max(hi, n);
        }
        CHECK(hi - lo <= 1);
    }
    int total = 0;
    for (int n : fold_sizes) total += n;
    CHECK(total == 81);

    // deterministic under the same seed
    CHECK(stratified_folds(labels, 10, 42).fold_of == plan.fold_of);
    CHECK(stratified_folds(labels, 10, 43).fold_of != plan.fold_of);

    CHECK_THROWS_AS(stratified_folds(labels, 1, 42), std::invalid_argument);
    CHECK_THROWS_AS(stratified_folds({0, 1}, 3, 42), std::invalid_argument);
}

TEST_CASE("crossval on separable corpus is perfect with zero spread") {
    const auto corpus = separable(20);
    const CrossvalReport rep = crossval_multiclass(corpus.docs, corpus.labels, 10, {}, 7);
    CHECK(rep.folds == 10);
    CHECK(rep.classes == std::vector<int>{0, 1, 2});
    CHECK(rep.macro_f1.mean == Approx(1.0));
    CHECK(rep.macro_f1.stddev == Approx(0.0));
    CHECK(rep.macro_precision.mean == Approx(1.0));
    CHECK(rep.macro_recall.mean == Approx(1.0));
    CHECK(rep.accuracy.mean == Approx(1.0));
    REQUIRE(rep.fold_outcomes.size() == 10);
    for (const auto& fo : rep.fold_outcomes) {
        CHECK(fo.test_size == 6);
        CHECK_FALSE(fo.prior_smoothed);
    }
    // pooled out-of-fold rows cover every sample
    for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
        CHECK(rep.predicted[i] == corpus.labels[i]);
        REQUIRE(rep.scores[i].size() == 3);
    }
}

TEST_CASE("crossval with shuffled labels collapses towards chance") {
    auto corpus = separable(40);
    Rng rng(99);
    rng.shuffle(corpus.labels); // break the text-label association at document level
    const CrossvalReport rep = crossval_multiclass(corpus.docs, corpus.labels, 10, {}, 7);
    CHECK(rep.accuracy.mean > 0.15);
    CHECK(rep.accuracy.mean < 0.52); // chance is 1/3
}

TEST_CASE("crossval flags folds whose training split lost a class") {
    // class 2 has a single document: the fold holding it trains without it
    std::vector<HashedVector> docs;
    std::vector<int> labels;
    for (int i = 0; i < 8; ++i) {
        docs.push_back(hv(16, {{static_cast<std::uint32_t>(i % 4), 1.0}}));
        labels.push_back(i % 2);
    }
    docs.push_back(hv(16, {{9, 3.0}}));
    labels.push_back(2);
    const CrossvalReport rep = crossval_multiclass(docs, labels, 3, {}, 5);
    int flagged = 0;
    for (const auto& fo : rep.fold_outcomes) flagged += fo.prior_smoothed ? 1 : 0;
    CHECK(flagged == 1);
}

TEST_CASE("one-vs-rest pooled scores separate a separable corpus") {
    const auto corpus = separable(20);
    const OvrOutput ovr = one_vs_rest(corpus.docs, corpus.labels, 10, {}, 7);
    REQUIRE(ovr.classes == std::vector<int>{0, 1, 2});
    CHECK(ovr.skipped.empty());
    for (std::size_t k = 0; k < ovr.classes.size(); ++k) {
        std::vector<double> scores;
        std::vector<std::uint8_t> rel;
        for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
            REQUIRE(ovr.scored[k][i] == 1);
            scores.push_back(ovr.score[k][i]);
            rel.push_back(ovr.relevant[k][i]);
        }
        const BinaryCurves curves = pr_roc_curves(scores, rel);
        CHECK(curves.auc == Approx(1.0));
        CHECK(curves.average_precision == Approx(1.0));
    }
}

TEST_CASE("one-vs-rest skips classes without training positives") {
    std::vector<HashedVector> docs;
    std::vector<int> labels;
    for (int i = 0; i < 10; ++i) {
        docs.push_back(hv(16, {{static_cast<std::uint32_t>(i % 4), 1.0}}));
        labels.push_back(i % 2);
    }
    docs.push_back(hv(16, {{9, 3.0}}));
    labels.push_back(4); // lone positive for class 4
    const OvrOutput ovr = one_vs_rest(docs, labels, 2, {}, 11);
    REQUIRE(ovr.classes == std::vector<int>{0, 1, 4});
    // the lone class-4 document sits in exactly one fold; training for that
    // fold has no positives, so class 4 is skipped there
    REQUIRE(ovr.skipped.size() == 1);
    CHECK(ovr.skipped[0].second == 4);
    std::size_t unscored = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) unscored += ovr.scored[2][i] ? 0 : 1;
    CHECK(unscored > 0);
    // the binary subproblems for classes 0 and 1 are never skipped
    for (std::size_t i = 0; i < docs.size(); ++i) {
        CHECK(ovr.scored[0][i] == 1);
        CHECK(ovr.scored[1][i] == 1);
    }
}

TEST_CASE("score dump and report serialization") {
    const auto corpus = separable(5);
    const CrossvalReport rep = crossval_multiclass(corpus.docs, corpus.labels, 5, {}, 7);

    const auto dir = std::filesystem::temp_directory_path() / "perivec_tests";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "scores.tsv").string();
    write_scores(path, corpus.ids, corpus.labels, rep.scores);

    std::size_t lines = 0;
    for_each_line(path, [&](std::string_view line, std::size_t) {
        const auto fields = split(line, '\t');
        REQUIRE(fields.size() == 3);
        CHECK(split(fields[2], ',').size() == 3);
        ++lines;
    });
    CHECK(lines == corpus.docs.size());
    std::remove(path.c_str());

    const nlohmann::json j = crossval_to_json(rep);
    CHECK(j["folds"] == 5);
    CHECK(j["classes"].size() == 3);
    CHECK(j["aggregate"]["macro_f1"]["mean"].get<double>() == Approx(1.0));
    CHECK(j["fold_metrics"].size() == 5);
}
