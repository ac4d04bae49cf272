#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "perivec/corpus.hpp"
#include "perivec/embedding.hpp"
#include "perivec/io.hpp"
#include "perivec/kmeans.hpp"

namespace perivec {

// A periodical classification scheme: a total labeling of its declared
// periodical universe with label ids contiguous from 0.
struct SchemeLabeling {
    std::string name;
    std::vector<std::int32_t> universe; // sorted periodical dense ids
    std::unordered_map<std::int32_t, std::int32_t> label_of;
    std::vector<std::string> label_vocab; // label id -> display name

    std::int32_t num_labels() const { return static_cast<std::int32_t>(label_vocab.size()); }

    std::optional<std::int32_t> lookup(std::int32_t periodical) const {
        const auto it = label_of.find(periodical);
        if (it == label_of.end()) return std::nullopt;
        return it->second;
    }

    void validate() const {
        if (universe.size() != label_of.size())
            throw std::logic_error("scheme universe and labeling disagree");
        if (!std::is_sorted(universe.begin(), universe.end()))
            throw std::logic_error("scheme universe not sorted");
        std::vector<bool> used(label_vocab.size(), false);
        for (auto p : universe) {
            const auto it = label_of.find(p);
            if (it == label_of.end()) throw std::logic_error("scheme not total over its universe");
            if (it->second < 0 || it->second >= num_labels())
                throw std::logic_error("label id out of range");
            used[static_cast<std::size_t>(it->second)] = true;
        }
        for (bool u : used)
            if (!u) throw std::logic_error("label vocabulary has unused ids");
    }
};

struct SchemeSizes {
    std::map<std::int32_t, std::size_t> counts;
    std::map<std::int32_t, double> fractions;
};

inline SchemeSizes scheme_sizes(const SchemeLabeling& scheme) {
    if (scheme.universe.empty()) throw std::invalid_argument("empty scheme");
    SchemeSizes s;
    for (auto p : scheme.universe) ++s.counts[scheme.label_of.at(p)];
    const double n = static_cast<double>(scheme.universe.size());
    for (const auto& [label, count] : s.counts)
        s.fractions[label] = static_cast<double>(count) / n;
    return s;
}

// Packages a k-means run over rows indexed by `row_periodicals` (row i of the
// clustering corresponds to periodical row_periodicals[i]).
inline SchemeLabeling scheme_from_kmeans(std::string name,
                                         const std::vector<std::int32_t>& row_periodicals,
                                         const KmeansResult& result) {
    if (row_periodicals.size() != result.labels.size())
        throw std::invalid_argument("row/label count mismatch");
    SchemeLabeling s;
    s.name = std::move(name);
    std::int32_t max_label = -1;
    for (std::size_t i = 0; i < row_periodicals.size(); ++i) {
        if (!s.label_of.emplace(row_periodicals[i], result.labels[i]).second)
            throw std::invalid_argument("duplicate periodical row");
        max_label = std::max(max_label, result.labels[i]);
    }
    s.universe = row_periodicals;
    std::sort(s.universe.begin(), s.universe.end());
    for (std::int32_t l = 0; l <= max_label; ++l) s.label_vocab.push_back(std::to_string(l));
    s.validate();
    return s;
}

// The single subject area shared by most of the periodical's top-k cosine
// neighbors (labeled ones vote with their whole area set); ties break toward
// the smallest area code. nullopt = no labeled peer in the neighborhood.
inline std::optional<int> assign_scopus_monolabel(std::int32_t periodical,
                                                  const EmbeddingMatrix& embeddings,
                                                  const PeriodicalRegistry& registry,
                                                  int neighbors = 50) {
    const auto top = cosine_top_k(embeddings, periodical, neighbors);
    std::map<int, std::size_t> votes; // ordered: ties resolve to smallest code
    for (const auto& nb : top) {
        if (nb.token < 0 || static_cast<std::size_t>(nb.token) >= registry.size()) continue;
        for (int code : registry.asjc(nb.token)) ++votes[code];
    }
    if (votes.empty()) return std::nullopt;
    int best_code = 0;
    std::size_t best_votes = 0;
    for (const auto& [code, n] : votes) {
        if (n > best_votes) {
            best_votes = n;
            best_code = code;
        }
    }
    return best_code;
}

struct ScopusScheme {
    SchemeLabeling labeling;
    std::vector<int> area_codes; // label id -> ASJC area code
    std::size_t unlabelable = 0;
};

// Mono-labels every periodical in the embedding vocabulary via its neighbors;
// periodicals with no labeled peer are excluded from the scheme's universe.
inline ScopusScheme build_scopus_scheme(const EmbeddingMatrix& embeddings,
                                        const PeriodicalRegistry& registry, int neighbors = 50) {
    ScopusScheme out;
    out.labeling.name = "scopus";
    std::vector<std::pair<std::int32_t, int>> assigned;
    for (auto token : embeddings.tokens) {
        const auto area = assign_scopus_monolabel(token, embeddings, registry, neighbors);
        if (!area) {
            ++out.unlabelable;
            continue;
        }
        assigned.emplace_back(token, *area);
    }
    std::map<int, std::int32_t> label_ids; // area code -> label id, ascending code
    for (const auto& [p, area] : assigned) label_ids[area] = 0;
    for (auto& [area, id] : label_ids) {
        id = static_cast<std::int32_t>(out.area_codes.size());
        out.area_codes.push_back(area);
        out.labeling.label_vocab.push_back(std::to_string(area));
    }
    for (const auto& [p, area] : assigned) {
        out.labeling.label_of.emplace(p, label_ids.at(area));
        out.labeling.universe.push_back(p);
    }
    std::sort(out.labeling.universe.begin(), out.labeling.universe.end());
    if (!out.labeling.universe.empty()) out.labeling.validate();
    return out;
}

// Labeling interchange: `periodical_dense_id \t label_id` rows plus a JSON
// sidecar carrying the scheme name, label vocabulary and provenance details.
inline void write_labeling(const std::string& path, const SchemeLabeling& scheme,
                           const nlohmann::json& provenance = nlohmann::json::object()) {
    std::string body;
    for (auto p : scheme.universe) {
        body += std::to_string(p);
        body += '\t';
        body += std::to_string(scheme.label_of.at(p));
        body += '\n';
    }
    write_file(path, body);
    nlohmann::json sidecar{{"scheme", scheme.name},
                           {"num_labels", scheme.num_labels()},
                           {"label_vocab", scheme.label_vocab},
                           {"provenance", provenance}};
    write_file(path + ".json", sidecar.dump(2) + "\n");
}

inline SchemeLabeling read_labeling(const std::string& path) {
    const auto sidecar = nlohmann::json::parse(read_file(path + ".json"));
    SchemeLabeling s;
    s.name = sidecar.at("scheme").get<std::string>();
    s.label_vocab = sidecar.at("label_vocab").get<std::vector<std::string>>();
    for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        const auto fields = split(line, '\t');
        if (fields.size() != 2)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad labeling row");
        const auto p = static_cast<std::int32_t>(parse_int(fields[0], "periodical"));
        const auto l = static_cast<std::int32_t>(parse_int(fields[1], "label"));
        s.universe.push_back(p);
        s.label_of.emplace(p, l);
    });
    std::sort(s.universe.begin(), s.universe.end());
    s.validate();
    return s;
}

} // namespace perivec
