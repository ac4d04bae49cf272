#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "perivec/corpus.hpp"
#include "perivec/jsonl.hpp"
#include "perivec/kmeans.hpp"
#include "perivec/metrics.hpp"
#include "perivec/sgns.hpp"
#include "perivec/synth.hpp"
#include "perivec/walks.hpp"

using namespace perivec;
using Catch::Approx;

namespace {

SynthSpec small_spec() {
    SynthSpec spec;
    spec.communities = 3;
    spec.papers_per_community = 60;
    spec.vocab_per_community = 20;
    spec.periodicals_per_community = 4;
    spec.refs_per_paper = 6;
    spec.abstract_tokens = 12;
    spec.seed = 21;
    return spec;
}

} // namespace

TEST_CASE("synthetic corpus shape and construction guarantees") {
    const SynthSpec spec = small_spec();
    const SyntheticCorpus corpus = generate_synthetic_corpus(spec);

    CHECK(corpus.papers.size() == 180);
    CHECK(corpus.citations.size() == 180 * 6);
    CHECK(corpus.abstracts.size() == 180);
    CHECK(corpus.venue_community.size() == 12);
    CHECK(corpus.paper_community.size() == 180);

    std::set<std::string> venue_names;
    for (const auto& [venue, community] : corpus.venue_community) venue_names.insert(venue);
    const int decade = spec.base_year / 10 * 10;
    for (const auto& [id, venue, year] : corpus.papers) {
        CHECK(venue_names.count(venue) == 1);
        CHECK(year >= decade);
        CHECK(year < decade + 10);
    }
    for (const auto& [citing, cited] : corpus.citations) CHECK(citing != cited);

    // community vocabularies are disjoint by construction: every token of a
    // community-c abstract carries the community index in its stem
    std::map<std::string, int> community_of_paper(corpus.paper_community.begin(),
                                                  corpus.paper_community.end());
    for (const auto& [id, text] : corpus.abstracts) {
        const std::string stem = "w" + std::to_string(community_of_paper.at(id)) + "x";
        for (const auto& token : split(text, ' '))
            CHECK(std::string(token).rfind(stem, 0) == 0);
    }
}

TEST_CASE("synthetic corpus is byte-identical under a fixed seed") {
    const SyntheticCorpus a = generate_synthetic_corpus(small_spec());
    const SyntheticCorpus b = generate_synthetic_corpus(small_spec());
    CHECK(a.papers == b.papers);
    CHECK(a.citations == b.citations);
    CHECK(a.abstracts == b.abstracts);
    CHECK(a.scopus == b.scopus);

    SynthSpec other = small_spec();
    other.seed = 22;
    const SyntheticCorpus c = generate_synthetic_corpus(other);
    CHECK(a.citations != c.citations);
}

TEST_CASE("synthetic spec validation") {
    SynthSpec spec = small_spec();
    spec.communities = 1;
    CHECK_THROWS_AS(generate_synthetic_corpus(spec), std::invalid_argument);
    spec = small_spec();
    spec.intra_rate = 1.5;
    CHECK_THROWS_AS(generate_synthetic_corpus(spec), std::invalid_argument);
    spec = small_spec();
    spec.abstract_tokens = 0;
    CHECK_THROWS_AS(generate_synthetic_corpus(spec), std::invalid_argument);
    spec = small_spec();
    spec.papers_per_community = 0;
    CHECK_THROWS_AS(generate_synthetic_corpus(spec), std::invalid_argument);
}

TEST_CASE("synthetic corpus files round-trip through ingest") {
    const SyntheticCorpus corpus = generate_synthetic_corpus(small_spec());
    const auto dir = std::filesystem::temp_directory_path() / "perivec_tests" / "synth";
    write_synthetic_corpus(corpus, dir.string());

    const IngestResult ingest = ingest_papers((dir / "papers.tsv").string());
    CHECK(ingest.summary.accepted == corpus.papers.size());
    CHECK(ingest.summary.malformed == 0);
    CHECK(ingest.registry.size() <= corpus.venue_community.size());

    const EdgeIngest edges = ingest_citations((dir / "citations.tsv").string(), ingest.papers);
    CHECK(edges.edges.size() == corpus.citations.size());
    CHECK(edges.malformed == 0);
    CHECK(edges.unknown_endpoint == 0);
    CHECK(edges.self_citations == 0);

    const AbstractIngest abstracts =
        read_abstracts((dir / "abstracts.jsonl").string(), ingest.papers);
    CHECK(abstracts.abstracts.size() == corpus.abstracts.size());
    CHECK(abstracts.malformed == 0);
    CHECK(abstracts.unknown_paper == 0);

    PeriodicalRegistry registry = ingest.registry;
    const ScopusIngest scopus = read_scopus((dir / "scopus.tsv").string(), registry);
    CHECK(scopus.matched + scopus.unmatched == corpus.scopus.size());
    CHECK(scopus.malformed == 0);

    // every synthetic paper is in one calendar decade, so the decade filter
    // keeps the whole graph
    const CitationGraph graph =
        filter_decade(ingest.papers, ingest.registry, edges.edges, 2010);
    CHECK(graph.dropped_cross_decade == 0);
    for (auto r : graph.retained) CHECK(r == 1);

    std::filesystem::remove_all(dir);
}

TEST_CASE("planted partition is recoverable from trails at small scale") {
    SynthSpec spec = small_spec();
    const SyntheticCorpus synthetic = generate_synthetic_corpus(spec);
    const auto dir = std::filesystem::temp_directory_path() / "perivec_tests" / "synth_rec";
    write_synthetic_corpus(synthetic, dir.string());

    const IngestResult ingest = ingest_papers((dir / "papers.tsv").string());
    const EdgeIngest edges = ingest_citations((dir / "citations.tsv").string(), ingest.papers);
    const CitationGraph graph =
        filter_decade(ingest.papers, ingest.registry, edges.edges, 2010);

    WalkConfig walk_cfg;
    walk_cfg.walks_per_source = 4;
    walk_cfg.walk_length = 20;
    walk_cfg.seed = 9;
    const TrailCorpus trails = generate_citation_trails(graph, walk_cfg);

    SgnsConfig sgns_cfg;
    sgns_cfg.dimension = 16;
    sgns_cfg.epochs = 3;
    sgns_cfg.seed = 9;
    const SgnsModel model = train_sgns(trails, sgns_cfg);

    KmeansConfig km;
    km.k = 3;
    km.seed = 9;
    const KmeansResult clusters = kmeans(model.embeddings, km);

    std::vector<int> planted, found;
    for (std::size_t r = 0; r < model.embeddings.tokens.size(); ++r) {
        const auto venue = model.embeddings.tokens[r];
        const std::string name = ingest.registry.name(venue);
        // community index is embedded in the venue name: "venue c<k> n<j>"
        planted.push_back(name[7] - '0');
        found.push_back(clusters.labels[r]);
    }
    CHECK(nmi(found, planted) >= 0.9);

    SECTION("fully mixed graph carries no community signal") {
        SynthSpec mixed = small_spec();
        mixed.intra_rate = 0.0;
        const SyntheticCorpus mixed_corpus = generate_synthetic_corpus(mixed);
        const auto mdir = std::filesystem::temp_directory_path() / "perivec_tests" / "synth_mix";
        write_synthetic_corpus(mixed_corpus, mdir.string());
        const IngestResult mingest = ingest_papers((mdir / "papers.tsv").string());
        const EdgeIngest medges =
            ingest_citations((mdir / "citations.tsv").string(), mingest.papers);
        const CitationGraph mgraph =
            filter_decade(mingest.papers, mingest.registry, medges.edges, 2010);
        const TrailCorpus mtrails = generate_citation_trails(mgraph, walk_cfg);
        const SgnsModel mmodel = train_sgns(mtrails, sgns_cfg);
        const KmeansResult mclusters = kmeans(mmodel.embeddings, km);
        std::vector<int> mplanted, mfound;
        for (std::size_t r = 0; r < mmodel.embeddings.tokens.size(); ++r) {
            const std::string name = mingest.registry.name(mmodel.embeddings.tokens[r]);
            mplanted.push_back(name[7] - '0');
            mfound.push_back(mclusters.labels[r]);
        }
        CHECK(nmi(mfound, mplanted) < 0.45);
        std::filesystem::remove_all(mdir);
    }

    std::filesystem::remove_all(dir);
}
