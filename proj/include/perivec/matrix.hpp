#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "perivec/corpus.hpp"
#include "perivec/io.hpp"

namespace perivec {

enum class MatrixKind { citation, cocitation, row_normalized };

inline const char* matrix_kind_name(MatrixKind k) {
    switch (k) {
        case MatrixKind::citation: return "citation";
        case MatrixKind::cocitation: return "co-citation";
        case MatrixKind::row_normalized: return "row-normalized";
    }
    throw std::logic_error("unknown matrix kind");
}

inline MatrixKind matrix_kind_from_name(const std::string& s) {
    if (s == "citation") return MatrixKind::citation;
    if (s == "co-citation") return MatrixKind::cocitation;
    if (s == "row-normalized") return MatrixKind::row_normalized;
    throw std::runtime_error("unknown matrix kind: " + s);
}

// Square sparse matrix over periodical dense ids, CSR with sorted columns.
struct PeriodicalMatrix {
    std::size_t dimension = 0;
    MatrixKind kind = MatrixKind::citation;
    std::vector<std::uint64_t> offsets; // dimension + 1
    std::vector<std::int32_t> cols;
    std::vector<double> values;
    std::vector<std::int32_t> zero_rows; // only meaningful for row-normalized

    std::size_t nnz() const { return values.size(); }

    std::size_t row_begin(std::size_t i) const { return offsets[i]; }
    std::size_t row_end(std::size_t i) const { return offsets[i + 1]; }

    double at(std::size_t i, std::size_t j) const {
        const auto lo = cols.begin() + static_cast<std::ptrdiff_t>(offsets[i]);
        const auto hi = cols.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]);
        const auto it = std::lower_bound(lo, hi, static_cast<std::int32_t>(j));
        if (it == hi || *it != static_cast<std::int32_t>(j)) return 0.0;
        return values[static_cast<std::size_t>(it - cols.begin())];
    }

    double row_sum(std::size_t i) const {
        double s = 0.0;
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) s += values[k];
        return s;
    }

    double total() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }

    std::vector<double> dense_row(std::size_t i) const {
        std::vector<double> row(dimension, 0.0);
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k)
            row[static_cast<std::size_t>(cols[k])] = values[k];
        return row;
    }

    // Builds CSR from per-cell accumulators keyed (row, col).
    static PeriodicalMatrix from_cells(std::size_t dimension, MatrixKind kind,
                                       const std::map<std::pair<std::int32_t, std::int32_t>, double>& cells) {
        PeriodicalMatrix m;
        m.dimension = dimension;
        m.kind = kind;
        m.offsets.assign(dimension + 1, 0);
        for (const auto& [key, value] : cells) {
            if (value == 0.0) continue;
            ++m.offsets[static_cast<std::size_t>(key.first) + 1];
        }
        for (std::size_t i = 0; i < dimension; ++i) m.offsets[i + 1] += m.offsets[i];
        m.cols.resize(m.offsets[dimension]);
        m.values.resize(m.offsets[dimension]);
        std::vector<std::uint64_t> cursor(m.offsets.begin(), m.offsets.end() - 1);
        for (const auto& [key, value] : cells) {
            if (value == 0.0) continue;
            const auto slot = cursor[static_cast<std::size_t>(key.first)]++;
            m.cols[slot] = key.second;
            m.values[slot] = value;
        }
        return m;
    }
};

// E_ij = number of retained citation edges from papers in periodical i to
// papers in periodical j; intra-periodical citations land on the diagonal.
inline PeriodicalMatrix build_citation_matrix(const CitationGraph& graph) {
    std::map<std::pair<std::int32_t, std::int32_t>, double> cells;
    for (std::size_t p = 0; p < graph.num_papers(); ++p) {
        const auto src = graph.periodical_of[p];
        auto [first, last] = graph.out(static_cast<std::int32_t>(p));
        for (auto it = first; it != last; ++it)
            cells[{src, graph.periodical_of[static_cast<std::size_t>(*it)]}] += 1.0;
    }
    return PeriodicalMatrix::from_cells(graph.num_periodicals, MatrixKind::citation, cells);
}

// E_ij counts citing papers whose reference lists span both periodicals i and
// j (i != j); the increment per citing paper is 1 regardless of how many of
// its references fall in each periodical. Symmetric, zero diagonal.
inline PeriodicalMatrix build_cocitation_matrix(const CitationGraph& graph) {
    std::map<std::pair<std::int32_t, std::int32_t>, double> cells;
    std::vector<std::int32_t> venues;
    for (std::size_t p = 0; p < graph.num_papers(); ++p) {
        auto [first, last] = graph.out(static_cast<std::int32_t>(p));
        if (first == last) continue;
        venues.clear();
        for (auto it = first; it != last; ++it)
            venues.push_back(graph.periodical_of[static_cast<std::size_t>(*it)]);
        std::sort(venues.begin(), venues.end());
        venues.erase(std::unique(venues.begin(), venues.end()), venues.end());
        for (std::size_t a = 0; a < venues.size(); ++a)
            for (std::size_t b = a + 1; b < venues.size(); ++b) {
                cells[{venues[a], venues[b]}] += 1.0;
                cells[{venues[b], venues[a]}] += 1.0;
            }
    }
    return PeriodicalMatrix::from_cells(graph.num_periodicals, MatrixKind::cocitation, cells);
}

// Divides each nonzero row by its sum; all-zero rows stay zero and are listed
// in zero_rows.
inline PeriodicalMatrix row_normalize(const PeriodicalMatrix& m) {
    PeriodicalMatrix out = m;
    out.kind = MatrixKind::row_normalized;
    out.zero_rows.clear();
    for (std::size_t i = 0; i < m.dimension; ++i) {
        const double s = m.row_sum(i);
        if (s == 0.0) {
            out.zero_rows.push_back(static_cast<std::int32_t>(i));
            continue;
        }
        for (std::size_t k = m.offsets[i]; k < m.offsets[i + 1]; ++k) out.values[k] = m.values[k] / s;
    }
    return out;
}

// Coordinate-format interchange: `i \t j \t value` rows plus a JSON sidecar
// (<path>.json) recording dimension, kind and zero rows.
inline void write_matrix(const std::string& path, const PeriodicalMatrix& m) {
    std::string body;
    body.reserve(m.nnz() * 16);
    for (std::size_t i = 0; i < m.dimension; ++i)
        for (std::size_t k = m.offsets[i]; k < m.offsets[i + 1]; ++k) {
            body += std::to_string(i);
            body += '\t';
            body += std::to_string(m.cols[k]);
            body += '\t';
            body += format_double(m.values[k]);
            body += '\n';
        }
    write_file(path, body);

    nlohmann::json sidecar{{"dimension", m.dimension},
                           {"kind", matrix_kind_name(m.kind)},
                           {"nnz", m.nnz()},
                           {"zero_rows", m.zero_rows}};
    write_file(path + ".json", sidecar.dump(2) + "\n");
}

inline PeriodicalMatrix read_matrix(const std::string& path) {
    const auto sidecar = nlohmann::json::parse(read_file(path + ".json"));
    const std::size_t dimension = sidecar.at("dimension").get<std::size_t>();
    std::map<std::pair<std::int32_t, std::int32_t>, double> cells;
    for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        const auto fields = split(line, '\t');
        if (fields.size() != 3)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad matrix row");
        const auto i = static_cast<std::int32_t>(parse_int(fields[0], "row"));
        const auto j = static_cast<std::int32_t>(parse_int(fields[1], "col"));
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= dimension ||
            static_cast<std::size_t>(j) >= dimension)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": index out of range");
        cells[{i, j}] = parse_double(fields[2], "value");
    });
    auto m = PeriodicalMatrix::from_cells(dimension, matrix_kind_from_name(sidecar.at("kind").get<std::string>()), cells);
    m.zero_rows = sidecar.value("zero_rows", std::vector<std::int32_t>{});
    return m;
}

} // namespace perivec
