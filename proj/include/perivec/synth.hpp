#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "perivec/io.hpp"
#include "perivec/rng.hpp"

namespace perivec {

// Planted-partition corpus: venues (and their papers) belong to one of C
// communities; references stay inside the community with probability
// intra_rate and otherwise target a uniformly random paper, and abstracts
// draw from community-disjoint vocabularies. intra_rate = 0 produces a fully
// mixed graph with no community signal.
struct SynthSpec {
    int communities = 4;
    int papers_per_community = 500;
    int vocab_per_community = 50;
    int periodicals_per_community = 8;
    int refs_per_paper = 8;
    int abstract_tokens = 20;
    double intra_rate = 0.9;
    double scopus_coverage = 0.8; // fraction of venues given ground-truth ASJC rows
    int base_year = 2015;         // papers span this year's calendar decade
    std::uint64_t seed = 0;

    void validate() const {
        if (communities < 2) throw std::invalid_argument("synth: need >= 2 communities");
        if (papers_per_community < 1) throw std::invalid_argument("synth: need >= 1 paper per community");
        if (vocab_per_community < 1) throw std::invalid_argument("synth: need >= 1 word per community");
        if (periodicals_per_community < 1)
            throw std::invalid_argument("synth: need >= 1 periodical per community");
        if (refs_per_paper < 0) throw std::invalid_argument("synth: negative reference count");
        if (abstract_tokens < 1) throw std::invalid_argument("synth: need >= 1 abstract token");
        if (!(intra_rate >= 0.0 && intra_rate <= 1.0))
            throw std::invalid_argument("synth: intra_rate must be in [0, 1]");
        if (!(scopus_coverage >= 0.0 && scopus_coverage <= 1.0))
            throw std::invalid_argument("synth: scopus_coverage must be in [0, 1]");
    }
};

struct SyntheticCorpus {
    SynthSpec spec;
    std::vector<std::tuple<std::string, std::string, int>> papers; // id, venue name, year
    std::vector<std::pair<std::string, std::string>> citations;    // citing id, cited id
    std::vector<std::pair<std::string, std::string>> abstracts;    // id, text
    std::vector<std::pair<std::string, int>> venue_community;      // venue name -> community
    std::vector<std::pair<std::string, int>> paper_community;      // paper id -> community
    std::vector<std::pair<std::string, int>> scopus;               // venue name -> ASJC-like code

    std::size_t paper_count() const { return papers.size(); }
};

inline SyntheticCorpus generate_synthetic_corpus(const SynthSpec& spec) {
    spec.validate();
    SyntheticCorpus out;
    out.spec = spec;
    Rng rng(derive_seed(spec.seed, 0x5e17ULL));

    const auto communities = static_cast<std::size_t>(spec.communities);
    const auto per_community = static_cast<std::size_t>(spec.papers_per_community);
    const std::size_t total = communities * per_community;
    const int decade = spec.base_year / 10 * 10;

    auto venue_name = [&](std::size_t c, std::size_t v) {
        return "venue c" + std::to_string(c) + " n" + std::to_string(v);
    };
    auto paper_id = [&](std::size_t p) { return "P" + std::to_string(p); };

    for (std::size_t c = 0; c < communities; ++c)
        for (std::size_t v = 0; v < static_cast<std::size_t>(spec.periodicals_per_community); ++v)
            out.venue_community.emplace_back(venue_name(c, v), static_cast<int>(c));

    for (std::size_t p = 0; p < total; ++p) {
        const std::size_t c = p / per_community;
        const auto v = rng.uniform(static_cast<std::uint64_t>(spec.periodicals_per_community));
        const int year = decade + static_cast<int>(rng.uniform(10));
        out.papers.emplace_back(paper_id(p), venue_name(c, v), year);
        out.paper_community.emplace_back(paper_id(p), static_cast<int>(c));
    }

    for (std::size_t p = 0; p < total; ++p) {
        const std::size_t c = p / per_community;
        for (int r = 0; r < spec.refs_per_paper; ++r) {
            std::size_t target;
            if (rng.real01() < spec.intra_rate) {
                target = c * per_community + rng.uniform(per_community);
            } else {
                target = rng.uniform(total);
            }
            if (target == p) target = (target + 1) % total; // no self-citations
            out.citations.emplace_back(paper_id(p), paper_id(target));
        }
    }

    for (std::size_t p = 0; p < total; ++p) {
        const std::size_t c = p / per_community;
        std::string text;
        for (int t = 0; t < spec.abstract_tokens; ++t) {
            if (t) text += ' ';
            text += "w" + std::to_string(c) + "x" +
                    std::to_string(rng.uniform(static_cast<std::uint64_t>(spec.vocab_per_community)));
        }
        out.abstracts.emplace_back(paper_id(p), std::move(text));
    }

    // Ground-truth subject rows for a venue subset, one code per community,
    // spaced like ASJC area codes.
    for (const auto& [venue, community] : out.venue_community) {
        if (rng.real01() < spec.scopus_coverage)
            out.scopus.emplace_back(venue, (community + 1) * 100);
    }
    return out;
}

// papers.tsv / citations.tsv / abstracts.jsonl / scopus.tsv in the ingest
// formats, plus ground-truth venue_labels.tsv and paper_labels.tsv.
inline void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const auto path = [&](const char* leaf) {
        return (std::filesystem::path(dir) / leaf).string();
    };

    std::string papers;
    for (const auto& [id, venue, year] : corpus.papers)
        papers += id + "\t" + venue + "\t" + std::to_string(year) + "\n";
    write_file(path("papers.tsv"), papers);

    std::string citations;
    for (const auto& [citing, cited] : corpus.citations)
        citations += citing + "\t" + cited + "\n";
    write_file(path("citations.tsv"), citations);

    std::string abstracts;
    for (const auto& [id, text] : corpus.abstracts) {
        const nlohmann::json obj{{"paper_id", id}, {"text", text}};
        abstracts += obj.dump() + "\n";
    }
    write_file(path("abstracts.jsonl"), abstracts);

    std::string scopus;
    for (const auto& [venue, code] : corpus.scopus)
        scopus += venue + "\t" + std::to_string(code) + "\n";
    write_file(path("scopus.tsv"), scopus);

    std::string venue_labels;
    for (const auto& [venue, community] : corpus.venue_community)
        venue_labels += venue + "\t" + std::to_string(community) + "\n";
    write_file(path("venue_labels.tsv"), venue_labels);

    std::string paper_labels;
    for (const auto& [id, community] : corpus.paper_community)
        paper_labels += id + "\t" + std::to_string(community) + "\n";
    write_file(path("paper_labels.tsv"), paper_labels);
}

} // namespace perivec
