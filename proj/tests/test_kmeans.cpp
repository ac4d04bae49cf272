#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "perivec/kmeans.hpp"

using namespace perivec;

namespace {

EmbeddingMatrix dense(const std::vector<std::vector<double>>& rows) {
    std::vector<std::int32_t> tokens;
    for (std::size_t i = 0; i < rows.size(); ++i) tokens.push_back(static_cast<std::int32_t>(i));
    auto m = EmbeddingMatrix::zeros(tokens, rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), m.row(r));
    return m;
}

// canonical partition form: relabel by first occurrence
std::vector<int> canon(const std::vector<std::int32_t>& labels) {
    std::vector<int> out;
    std::map<std::int32_t, int> seen;
    for (auto l : labels) {
        const auto it = seen.emplace(l, static_cast<int>(seen.size())).first;
        out.push_back(it->second);
    }
    return out;
}

// exhaustive best 2-clustering of a small point set
struct BruteBest {
    std::vector<std::int32_t> labels;
    std::vector<std::vector<double>> centroids;
    double inertia = std::numeric_limits<double>::infinity();
};

BruteBest brute_force_k2(const std::vector<std::vector<double>>& pts) {
    const std::size_t n = pts.size(), d = pts.front().size();
    BruteBest best;
    for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) { // skip empty clusters
        std::vector<std::vector<double>> cent(2, std::vector<double>(d, 0.0));
        std::size_t cnt[2] = {0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            const int c = (mask >> i) & 1;
            ++cnt[c];
            for (std::size_t j = 0; j < d; ++j) cent[static_cast<std::size_t>(c)][j] += pts[i][j];
        }
        for (int c = 0; c < 2; ++c)
            for (auto& v : cent[static_cast<std::size_t>(c)]) v /= static_cast<double>(cnt[c]);
        double inertia = 0.0;
        std::vector<std::int32_t> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int c = (mask >> i) & 1;
            labels[i] = c;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = pts[i][j] - cent[static_cast<std::size_t>(c)][j];
                inertia += diff * diff;
            }
        }
        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.labels = labels;
            best.centroids = cent;
        }
    }
    return best;
}

} // namespace

TEST_CASE("k=2 on four points matches the exhaustive-partition oracle") {
    const std::vector<std::vector<double>> pts = {{0, 0}, {0, 1}, {10, 10}, {10, 11}};
    const auto oracle = brute_force_k2(pts);
    KmeansConfig cfg;
    cfg.k = 2;
    cfg.seed = 3;
    const auto res = kmeans(dense(pts), cfg);
    CHECK(canon(res.labels) == canon(oracle.labels));
    CHECK(res.inertia == Catch::Approx(oracle.inertia).margin(1e-12));
    CHECK(res.inertia == Catch::Approx(1.0).margin(1e-12));
    // centroids (0, 0.5) and (10, 10.5) in some order
    const auto& c0 = res.centroids[static_cast<std::size_t>(res.labels[0])];
    const auto& c2 = res.centroids[static_cast<std::size_t>(res.labels[2])];
    CHECK(c0[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(c0[1] == Catch::Approx(0.5).margin(1e-12));
    CHECK(c2[0] == Catch::Approx(10.0).margin(1e-12));
    CHECK(c2[1] == Catch::Approx(10.5).margin(1e-12));
}

TEST_CASE("k equal to the point count yields singletons with zero inertia") {
    const std::vector<std::vector<double>> pts = {{0, 0}, {1, 0}, {2, 0}, {3, 0}};
    KmeansConfig cfg;
    cfg.k = 4;
    const auto res = kmeans(dense(pts), cfg);
    CHECK(res.inertia == 0.0);
    std::set<std::int32_t> distinct(res.labels.begin(), res.labels.end());
    CHECK(distinct.size() == 4);
}

TEST_CASE("well-separated blobs are recovered exactly") {
    Rng rng(0xb10b);
    std::vector<std::vector<double>> pts;
    std::vector<int> planted;
    const double centers[3][2] = {{0, 0}, {20, 0}, {0, 20}};
    const std::size_t sizes[3] = {30, 20, 10};
    for (int b = 0; b < 3; ++b)
        for (std::size_t i = 0; i < sizes[b]; ++i) {
            // triangular-ish noise well within 0.5 of the center
            pts.push_back({centers[b][0] + rng.real(-0.5, 0.5), centers[b][1] + rng.real(-0.5, 0.5)});
            planted.push_back(b);
        }
    KmeansConfig cfg;
    cfg.k = 3;
    cfg.seed = 7;
    const auto res = kmeans(dense(pts), cfg);
    std::vector<int> got;
    for (auto l : res.labels) got.push_back(l);
    CHECK(canon(res.labels) == canon(std::vector<std::int32_t>(planted.begin(), planted.end())));
    // labels are renumbered by descending cluster size
    CHECK(res.labels[0] == 0);                    // blob of 30
    CHECK(res.labels[sizes[0]] == 1);             // blob of 20
    CHECK(res.labels[sizes[0] + sizes[1]] == 2);  // blob of 10
}

TEST_CASE("clustering is invariant under row permutation up to relabeling") {
    Rng rng(99);
    std::vector<std::vector<double>> pts;
    for (int b = 0; b < 4; ++b)
        for (int i = 0; i < 12; ++i)
            pts.push_back({b * 15.0 + rng.real(-0.4, 0.4), -b * 9.0 + rng.real(-0.4, 0.4)});
    std::vector<std::size_t> perm(pts.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<std::vector<double>> shuffled(pts.size());
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled[i] = pts[perm[i]];

    KmeansConfig cfg;
    cfg.k = 4;
    cfg.seed = 17;
    const auto a = kmeans(dense(pts), cfg);
    const auto b = kmeans(dense(shuffled), cfg);
    // compare as partitions: co-membership must agree through the permutation
    for (std::size_t i = 0; i < perm.size(); ++i)
        for (std::size_t j = i + 1; j < perm.size(); ++j)
            REQUIRE((a.labels[perm[i]] == a.labels[perm[j]]) == (b.labels[i] == b.labels[j]));
}

TEST_CASE("fixed seed gives bit-identical results") {
    Rng rng(5);
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 40; ++i) pts.push_back({rng.real(-1, 1), rng.real(-1, 1), rng.real(-1, 1)});
    KmeansConfig cfg;
    cfg.k = 5;
    cfg.seed = 21;
    const auto a = kmeans(dense(pts), cfg);
    const auto b = kmeans(dense(pts), cfg);
    CHECK(a.labels == b.labels);
    CHECK(a.centroids == b.centroids);
    CHECK(a.inertia == b.inertia);
    CHECK(a.best_restart == b.best_restart);
}

TEST_CASE("degenerate inputs are rejected or repaired") {
    SECTION("fewer points than clusters") {
        KmeansConfig cfg;
        cfg.k = 5;
        CHECK_THROWS_AS(kmeans(dense({{0, 0}, {1, 1}}), cfg), std::invalid_argument);
    }
    SECTION("non-finite input") {
        auto m = dense({{0, 0}, {1, std::numeric_limits<double>::quiet_NaN()}, {2, 2}});
        KmeansConfig cfg;
        cfg.k = 2;
        CHECK_THROWS_AS(kmeans(m, cfg), std::invalid_argument);
    }
    SECTION("identical points force empty-cluster repair") {
        const std::vector<std::vector<double>> pts(6, {3.0, 3.0});
        KmeansConfig cfg;
        cfg.k = 2;
        const auto res = kmeans(dense(pts), cfg);
        CHECK(res.inertia == 0.0);
        std::map<std::int32_t, int> counts;
        for (auto l : res.labels) ++counts[l];
        CHECK(counts.size() == 2); // repair kept both clusters alive
    }
    SECTION("bad config") {
        KmeansConfig cfg;
        cfg.k = 0;
        CHECK_THROWS_AS(kmeans(dense({{0.0}}), cfg), std::invalid_argument);
    }
}

TEST_CASE("sparse and dense views agree on the same data") {
    // build a sparse matrix and its dense mirror
    std::map<std::pair<std::int32_t, std::int32_t>, double> cells;
    Rng rng(31);
    const std::size_t dim = 12;
    for (std::int32_t i = 0; i < static_cast<std::int32_t>(dim); ++i)
        for (int nz = 0; nz < 4; ++nz)
            cells[{i, static_cast<std::int32_t>(rng.uniform(dim))}] = 1.0 + rng.real01() * 5.0;
    const auto sparse = PeriodicalMatrix::from_cells(dim, MatrixKind::citation, cells);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < dim; ++i) rows.push_back(sparse.dense_row(i));

    for (bool normalize : {false, true}) {
        KmeansConfig cfg;
        cfg.k = 3;
        cfg.seed = 8;
        cfg.normalize = normalize;
        const auto a = kmeans(sparse, cfg);
        const auto b = kmeans(dense(rows), cfg);
        CHECK(a.labels == b.labels);
        CHECK(a.inertia == Catch::Approx(b.inertia).margin(1e-9));
    }
}

TEST_CASE("normalization switch changes the geometry") {
    // same direction, different magnitude: collinear after normalization
    const std::vector<std::vector<double>> pts = {{1, 0}, {100, 0}, {0, 1}, {0, 90}};
    KmeansConfig cfg;
    cfg.k = 2;
    cfg.seed = 2;
    cfg.normalize = true;
    const auto res = kmeans(dense(pts), cfg);
    CHECK(res.labels[0] == res.labels[1]);
    CHECK(res.labels[2] == res.labels[3]);
    CHECK(res.labels[0] != res.labels[2]);
    CHECK(res.inertia == Catch::Approx(0.0).margin(1e-12));
}
