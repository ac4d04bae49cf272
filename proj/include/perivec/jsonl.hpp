#pragma once

#include <string>

#include <json.hpp>

#include "perivec/corpus.hpp"
#include "perivec/io.hpp"

namespace perivec {

// abstracts.jsonl: one {"paper_id": ..., "text": ...} object per line.
// Unknown papers and unparsable lines are skipped and counted.
inline AbstractIngest read_abstracts(const std::string& path, const PaperSet& papers) {
    AbstractIngest res;
    for_each_line(path, [&](std::string_view line, std::size_t) {
        ++res.rows;
        nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || !obj.contains("paper_id") ||
            !obj.contains("text") || !obj["paper_id"].is_string() || !obj["text"].is_string()) {
            ++res.malformed;
            return;
        }
        const auto it = papers.by_paper_id.find(obj["paper_id"].get<std::string>());
        if (it == papers.by_paper_id.end()) {
            ++res.unknown_paper;
            return;
        }
        res.abstracts.push_back({it->second, obj["text"].get<std::string>()});
    });
    return res;
}

} // namespace perivec
