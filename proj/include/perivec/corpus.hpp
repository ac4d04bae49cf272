#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "perivec/io.hpp"
#include "perivec/text.hpp"

namespace perivec {

struct PaperRecord {
    std::string paper_id;       // opaque source key
    std::int32_t dense_id = -1; // contiguous from 0, first-seen order
    std::int32_t periodical_id = -1;
    int year = 0;
};

class PeriodicalRegistry {
public:
    // Registers a periodical by name (matching is canonical) and returns its
    // dense id; the first-seen raw spelling is kept for display.
    std::int32_t add_or_get(std::string_view name) {
        std::string canon = canonicalize_name(name);
        if (canon.empty()) throw std::invalid_argument("periodical name empty after canonicalization");
        auto it = by_canonical_.find(canon);
        if (it != by_canonical_.end()) return it->second;
        const auto id = static_cast<std::int32_t>(names_.size());
        by_canonical_.emplace(std::move(canon), id);
        names_.emplace_back(name);
        asjc_.emplace_back();
        return id;
    }

    std::optional<std::int32_t> lookup(std::string_view name) const {
        auto it = by_canonical_.find(canonicalize_name(name));
        if (it == by_canonical_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t size() const { return names_.size(); }
    const std::string& name(std::int32_t id) const { return names_.at(static_cast<std::size_t>(id)); }

    // Scopus ASJC areas; empty vector = unlabeled. Codes kept sorted.
    const std::vector<int>& asjc(std::int32_t id) const { return asjc_.at(static_cast<std::size_t>(id)); }
    bool has_asjc(std::int32_t id) const { return !asjc(id).empty(); }

    void set_asjc(std::int32_t id, std::vector<int> codes) {
        if (codes.empty()) throw std::invalid_argument("ASJC set must be non-empty");
        std::sort(codes.begin(), codes.end());
        codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
        asjc_.at(static_cast<std::size_t>(id)) = std::move(codes);
    }

    std::string to_tsv() const {
        std::ostringstream out;
        for (std::size_t i = 0; i < names_.size(); ++i) {
            out << i << '\t' << names_[i] << '\t';
            for (std::size_t j = 0; j < asjc_[i].size(); ++j) {
                if (j) out << ',';
                out << asjc_[i][j];
            }
            out << '\n';
        }
        return out.str();
    }

    static PeriodicalRegistry from_tsv(const std::string& content) {
        PeriodicalRegistry reg;
        std::istringstream in(content);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto fields = split(line, '\t');
            if (fields.size() != 3) throw std::runtime_error("bad registry row: " + line);
            const auto id = reg.add_or_get(fields[1]);
            if (id != parse_int(fields[0], "registry id"))
                throw std::runtime_error("registry ids not contiguous");
            if (!fields[2].empty()) {
                std::vector<int> codes;
                for (auto c : split(fields[2], ','))
                    codes.push_back(static_cast<int>(parse_int(c, "asjc code")));
                reg.set_asjc(id, std::move(codes));
            }
        }
        return reg;
    }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::int32_t> by_canonical_;
    std::vector<std::vector<int>> asjc_;
};

struct RowIssue {
    std::size_t line = 0;
    std::string message;
};

struct PaperSet {
    std::vector<PaperRecord> papers; // index == dense_id
    std::unordered_map<std::string, std::int32_t> by_paper_id;

    std::size_t size() const { return papers.size(); }
};

struct IngestSummary {
    std::size_t rows = 0;
    std::size_t accepted = 0;
    std::size_t malformed = 0;
    std::size_t duplicates = 0;
    std::vector<RowIssue> issues;
};

struct IngestResult {
    PeriodicalRegistry registry;
    PaperSet papers;
    IngestSummary summary;
};

constexpr int kMinSupportedYear = 1800;

// papers.tsv: paper_id \t periodical_name \t year (UTF-8, no header).
// Malformed rows are skipped and reported with their line number; duplicate
// paper ids are rejected and counted.
inline IngestResult ingest_papers(const std::string& path) {
    IngestResult res;
    for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        ++res.summary.rows;
        if (line.empty()) {
            ++res.summary.malformed;
            res.summary.issues.push_back({lineno, "empty row"});
            return;
        }
        const auto fields = split(line, '\t');
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) {
            ++res.summary.malformed;
            res.summary.issues.push_back({lineno, "expected paper_id<TAB>periodical<TAB>year"});
            return;
        }
        long long year = 0;
        try {
            year = parse_int(fields[2], "year");
        } catch (const std::exception&) {
            ++res.summary.malformed;
            res.summary.issues.push_back({lineno, "unparsable year"});
            return;
        }
        if (year < kMinSupportedYear) {
            ++res.summary.malformed;
            res.summary.issues.push_back({lineno, "year below " + std::to_string(kMinSupportedYear)});
            return;
        }
        std::string paper_id(fields[0]);
        if (res.papers.by_paper_id.count(paper_id)) {
            ++res.summary.duplicates;
            return;
        }
        std::int32_t pid;
        try {
            pid = res.registry.add_or_get(fields[1]);
        } catch (const std::exception&) {
            ++res.summary.malformed;
            res.summary.issues.push_back({lineno, "periodical name empty after canonicalization"});
            return;
        }
        PaperRecord rec;
        rec.paper_id = std::move(paper_id);
        rec.dense_id = static_cast<std::int32_t>(res.papers.papers.size());
        rec.periodical_id = pid;
        rec.year = static_cast<int>(year);
        res.papers.by_paper_id.emplace(rec.paper_id, rec.dense_id);
        res.papers.papers.push_back(std::move(rec));
        ++res.summary.accepted;
    });
    return res;
}

struct CitationEdge {
    std::int32_t citing = -1;
    std::int32_t cited = -1;
};

struct EdgeIngest {
    std::vector<CitationEdge> edges;
    std::size_t rows = 0;
    std::size_t unknown_endpoint = 0;
    std::size_t self_citations = 0;
    std::size_t malformed = 0;
};

// citations.tsv: citing_paper_id \t cited_paper_id. Edges touching unknown
// papers and self-citations are dropped and counted.
inline EdgeIngest ingest_citations(const std::string& path, const PaperSet& papers) {
    EdgeIngest res;
    for_each_line(path, [&](std::string_view line, std::size_t) {
        ++res.rows;
        const auto fields = split(line, '\t');
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            ++res.malformed;
            return;
        }
        const auto citing = papers.by_paper_id.find(std::string(fields[0]));
        const auto cited = papers.by_paper_id.find(std::string(fields[1]));
        if (citing == papers.by_paper_id.end() || cited == papers.by_paper_id.end()) {
            ++res.unknown_endpoint;
            return;
        }
        if (citing->second == cited->second) {
            ++res.self_citations;
            return;
        }
        res.edges.push_back({citing->second, cited->second});
    });
    return res;
}

struct ScopusIngest {
    std::size_t rows = 0;
    std::size_t matched = 0;
    std::size_t unmatched = 0;
    std::size_t malformed = 0;
};

// scopus.tsv: periodical_name \t asjc[,asjc...]. Names are matched against
// the registry canonically; rows naming unknown periodicals are counted.
inline ScopusIngest read_scopus(const std::string& path, PeriodicalRegistry& registry) {
    ScopusIngest res;
    for_each_line(path, [&](std::string_view line, std::size_t) {
        ++res.rows;
        const auto fields = split(line, '\t');
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            ++res.malformed;
            return;
        }
        const auto id = registry.lookup(fields[0]);
        if (!id) {
            ++res.unmatched;
            return;
        }
        std::vector<int> codes;
        try {
            for (auto c : split(fields[1], ','))
                codes.push_back(static_cast<int>(parse_int(c, "asjc code")));
        } catch (const std::exception&) {
            ++res.malformed;
            return;
        }
        registry.set_asjc(*id, std::move(codes));
        ++res.matched;
    });
    return res;
}

struct Abstract {
    std::int32_t paper = -1; // dense id
    std::string text;
};

struct AbstractIngest {
    std::vector<Abstract> abstracts;
    std::size_t rows = 0;
    std::size_t unknown_paper = 0;
    std::size_t malformed = 0;
};

// abstracts.jsonl: one {"paper_id": ..., "text": ...} object per line.
// Declared in io-free form here; the JSON parsing lives in jsonl.hpp to keep
// this header light. See read_abstracts().

inline int decade_of_year(int year) { return year / 10 * 10; }

struct CitationGraph {
    // CSR over paper dense ids; rows of non-retained papers are empty.
    std::vector<std::uint64_t> offsets;
    std::vector<std::int32_t> targets;
    std::vector<std::int32_t> periodical_of; // per paper
    std::vector<int> decade_of;              // per paper
    std::vector<std::uint8_t> retained;      // decade filter survivors
    std::size_t num_periodicals = 0;
    std::size_t edge_count = 0;
    std::size_t dropped_cross_decade = 0;
    std::size_t dropped_filtered_endpoint = 0;
    int min_year = 0;

    std::size_t num_papers() const { return periodical_of.size(); }

    std::pair<const std::int32_t*, const std::int32_t*> out(std::int32_t paper) const {
        return {targets.data() + offsets[static_cast<std::size_t>(paper)],
                targets.data() + offsets[static_cast<std::size_t>(paper) + 1]};
    }

    std::size_t out_degree(std::int32_t paper) const {
        return offsets[static_cast<std::size_t>(paper) + 1] - offsets[static_cast<std::size_t>(paper)];
    }

    std::vector<CitationEdge> edges() const {
        std::vector<CitationEdge> out_edges;
        out_edges.reserve(edge_count);
        for (std::size_t p = 0; p + 1 < offsets.size(); ++p)
            for (std::uint64_t i = offsets[p]; i < offsets[p + 1]; ++i)
                out_edges.push_back({static_cast<std::int32_t>(p), targets[i]});
        return out_edges;
    }
};

// Retains papers published at or after min_year and edges whose endpoints
// share a calendar decade (floor(year/10)). Adjacency is sorted and
// de-duplicated, so the result is independent of edge input order.
inline CitationGraph filter_decade(const PaperSet& papers, const PeriodicalRegistry& registry,
                                   const std::vector<CitationEdge>& edges, int min_year = 2010) {
    const std::size_t n = papers.size();
    CitationGraph g;
    g.min_year = min_year;
    g.num_periodicals = registry.size();
    g.periodical_of.resize(n);
    g.decade_of.resize(n);
    g.retained.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rec = papers.papers[i];
        g.periodical_of[i] = rec.periodical_id;
        g.decade_of[i] = decade_of_year(rec.year);
        g.retained[i] = rec.year >= min_year ? 1 : 0;
    }

    std::vector<std::vector<std::int32_t>> adj(n);
    for (const auto& e : edges) {
        if (e.citing < 0 || e.cited < 0 || static_cast<std::size_t>(e.citing) >= n ||
            static_cast<std::size_t>(e.cited) >= n)
            throw std::invalid_argument("filter_decade: edge endpoint outside paper universe");
        if (!g.retained[static_cast<std::size_t>(e.citing)] ||
            !g.retained[static_cast<std::size_t>(e.cited)]) {
            ++g.dropped_filtered_endpoint;
            continue;
        }
        if (g.decade_of[static_cast<std::size_t>(e.citing)] !=
            g.decade_of[static_cast<std::size_t>(e.cited)]) {
            ++g.dropped_cross_decade;
            continue;
        }
        adj[static_cast<std::size_t>(e.citing)].push_back(e.cited);
    }

    g.offsets.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto& row = adj[i];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        g.offsets[i + 1] = g.offsets[i] + row.size();
    }
    g.targets.reserve(g.offsets[n]);
    for (auto& row : adj) g.targets.insert(g.targets.end(), row.begin(), row.end());
    g.edge_count = g.targets.size();
    return g;
}

} // namespace perivec
