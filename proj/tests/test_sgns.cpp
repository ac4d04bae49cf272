#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "perivec/sgns.hpp"

using namespace perivec;

TEST_CASE("analytic pair gradient matches central finite differences") {
    const std::size_t d = 6;
    const int negatives = 3;
    Rng rng(0x1234); // arbitrary fixed seed
    std::vector<double> u(d), vo(d);
    std::vector<std::vector<double>> vn(negatives, std::vector<double>(d));
    for (auto& x : u) x = rng.real(-1.0, 1.0);
    for (auto& x : vo) x = rng.real(-1.0, 1.0);
    for (auto& v : vn)
        for (auto& x : v) x = rng.real(-1.0, 1.0);

    std::vector<const double*> vn_ptr;
    for (auto& v : vn) vn_ptr.push_back(v.data());

    std::vector<double> gu(d), gvo(d);
    std::vector<std::vector<double>> gvn(negatives, std::vector<double>(d));
    std::vector<double*> gvn_ptr;
    for (auto& g : gvn) gvn_ptr.push_back(g.data());

    detail::sgns_pair_grad(u.data(), vo.data(), vn_ptr.data(), negatives, d, gu.data(),
                           gvo.data(), gvn_ptr.data());

    const double h = 1e-6;
    auto loss = [&] {
        return detail::sgns_pair_loss(u.data(), vo.data(), vn_ptr.data(), negatives, d);
    };
    auto check = [&](double* slot, double analytic) {
        const double save = *slot;
        *slot = save + h;
        const double up = loss();
        *slot = save - h;
        const double down = loss();
        *slot = save;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        CHECK(std::abs(analytic - numeric) / denom < 1e-4);
    };
    for (std::size_t i = 0; i < d; ++i) check(&u[i], gu[i]);
    for (std::size_t i = 0; i < d; ++i) check(&vo[i], gvo[i]);
    for (int n = 0; n < negatives; ++n)
        for (std::size_t i = 0; i < d; ++i) check(&vn[n][i], gvn[n][i]);
}

namespace {

TrailCorpus paired_corpus() {
    // 1,000 trails "A B" and 1,000 trails "C D" (tokens 0,1 and 2,3)
    TrailCorpus corpus;
    for (int i = 0; i < 1000; ++i) {
        corpus.trails.push_back({0, 1});
        corpus.trails.push_back({2, 3});
    }
    return corpus;
}

} // namespace

TEST_CASE("co-occurring tokens end up closer than non-co-occurring ones") {
    SgnsConfig cfg;
    cfg.dimension = 16;
    cfg.epochs = 8;
    cfg.seed = 31;
    const auto model = train_sgns(paired_corpus(), cfg);
    const auto& m = model.embeddings;
    REQUIRE(m.vocab_size() == 4);
    const auto cab = cosine(m.row(m.row_for(0)), m.row(m.row_for(1)), m.dim);
    const auto cac = cosine(m.row(m.row_for(0)), m.row(m.row_for(2)), m.dim);
    const auto ccd = cosine(m.row(m.row_for(2)), m.row(m.row_for(3)), m.dim);
    const auto ccb = cosine(m.row(m.row_for(2)), m.row(m.row_for(1)), m.dim);
    CHECK(cab > cac);
    CHECK(ccd > ccb);
    CHECK(m.all_finite());
}

TEST_CASE("training loss decreases over epochs on the synthetic corpus") {
    SgnsConfig cfg;
    cfg.dimension = 16;
    cfg.epochs = 6;
    cfg.seed = 5;
    const auto model = train_sgns(paired_corpus(), cfg);
    REQUIRE(model.epoch_loss.size() == 6);
    // moving average over epochs trends down
    const double early = (model.epoch_loss[0] + model.epoch_loss[1]) / 2.0;
    const double late =
        (model.epoch_loss[model.epoch_loss.size() - 2] + model.epoch_loss.back()) / 2.0;
    CHECK(late < early);
}

TEST_CASE("single-worker training is bit-deterministic under a fixed seed") {
    SgnsConfig cfg;
    cfg.dimension = 8;
    cfg.epochs = 2;
    cfg.seed = 77;
    const auto m1 = train_sgns(paired_corpus(), cfg);
    const auto m2 = train_sgns(paired_corpus(), cfg);
    CHECK(m1.embeddings.data == m2.embeddings.data);
    CHECK(m1.epoch_loss == m2.epoch_loss);
    cfg.seed = 78;
    const auto m3 = train_sgns(paired_corpus(), cfg);
    CHECK(m1.embeddings.data != m3.embeddings.data);
}

TEST_CASE("degenerate corpora are rejected") {
    SgnsConfig cfg;
    TrailCorpus empty;
    CHECK_THROWS_AS(train_sgns(empty, cfg), std::invalid_argument);
    TrailCorpus mono;
    mono.trails = {{0, 0, 0}, {0}};
    CHECK_THROWS_AS(train_sgns(mono, cfg), std::invalid_argument);
}

TEST_CASE("config validation rejects out-of-range values") {
    TrailCorpus corpus = paired_corpus();
    SgnsConfig cfg;
    cfg.dimension = 0;
    CHECK_THROWS_AS(train_sgns(corpus, cfg), std::invalid_argument);
    cfg = SgnsConfig{};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(train_sgns(corpus, cfg), std::invalid_argument);
    cfg = SgnsConfig{};
    cfg.negatives = 0;
    CHECK_THROWS_AS(train_sgns(corpus, cfg), std::invalid_argument);
}

TEST_CASE("subsampling drops frequent tokens but still trains") {
    TrailCorpus corpus;
    for (int i = 0; i < 500; ++i) corpus.trails.push_back({0, 1, 0, 2, 0, 1});
    SgnsConfig cfg;
    cfg.dimension = 8;
    cfg.epochs = 2;
    cfg.subsample = 1e-3;
    const auto model = train_sgns(corpus, cfg);
    CHECK(model.embeddings.all_finite());
    CHECK(model.embeddings.vocab_size() == 3);
}

TEST_CASE("asynchronous training produces finite embeddings of the right shape") {
    SgnsConfig cfg;
    cfg.dimension = 8;
    cfg.epochs = 2;
    cfg.workers = 2;
    const auto model = train_sgns(paired_corpus(), cfg);
    CHECK(model.embeddings.vocab_size() == 4);
    CHECK(model.embeddings.dim == 8);
    CHECK(model.embeddings.all_finite());
}
