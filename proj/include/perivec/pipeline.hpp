#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cnb.hpp"
#include "corpus.hpp"
#include "embedding.hpp"
#include "hashing.hpp"
#include "io.hpp"
#include "jsonl.hpp"
#include "kmeans.hpp"
#include "lda.hpp"
#include "matrix.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "scheme.hpp"
#include "sgns.hpp"
#include "walks.hpp"

namespace perivec {

// Raised when a pipeline stage fails after config validation succeeded; the
// stage name travels with the message so callers can report where to resume.
class PipelineError : public std::runtime_error {
public:
    PipelineError(std::string stage, const std::string& what)
        : std::runtime_error("stage " + stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

inline const std::vector<std::string>& known_scheme_names() {
    static const std::vector<std::string> names{"p2v",        "citation",       "citation-n2v",
                                                "cocitation", "cocitation-n2v", "scopus"};
    return names;
}

struct ClassifierConfig {
    int folds = 10;
    double alpha = 1.0;
    std::size_t hash_dim = kDefaultHashDim;
    bool weight_normalize = false;

    void validate() const {
        if (folds < 2) throw std::invalid_argument("classifier: folds must be >= 2");
        if (!(alpha > 0.0)) throw std::invalid_argument("classifier: alpha must be positive");
        if (hash_dim < 2) throw std::invalid_argument("classifier: hash_dim must be >= 2");
    }
};

struct MapConfig {
    double idw_power = 2.0;
    int grid_nx = 40;
    int grid_ny = 40;
    std::string coordinates_path; // optional `name \t x \t y`; empty → PCA of the trail embedding

    void validate() const {
        if (!(idw_power > 0.0)) throw std::invalid_argument("map: idw_power must be positive");
        if (grid_nx < 2 || grid_ny < 2) throw std::invalid_argument("map: grid must be at least 2x2");
    }
};

struct PipelineConfig {
    std::string papers_path;
    std::string citations_path;
    std::string abstracts_path;
    std::string scopus_path; // required only when the scopus scheme is requested

    std::vector<std::string> schemes;
    std::string out_dir;
    std::uint64_t seed = 1;
    int min_year = 2010;

    WalkConfig walks;          // drives both citation trails and node2vec walks
    SgnsConfig sgns;
    KmeansConfig clustering;
    ClassifierConfig classifier;

    LdaConfig lda;
    bool lda_scan = false;          // pick T by coherence over lda_grid before the final fit
    std::vector<int> lda_grid;      // empty → default_topic_grid()
    double lda_sample_fraction = 1.0;
    int lda_workers = 1;

    int monolabel_neighbors = 50;
    MapConfig map;

    bool has_scheme(const std::string& name) const {
        return std::find(schemes.begin(), schemes.end(), name) != schemes.end();
    }

    void validate() const {
        if (out_dir.empty()) throw std::invalid_argument("config: out_dir is required");
        if (schemes.empty()) throw std::invalid_argument("config: scheme list must be non-empty");
        const auto& known = known_scheme_names();
        for (const auto& s : schemes) {
            if (std::find(known.begin(), known.end(), s) == known.end())
                throw std::invalid_argument("config: unknown scheme `" + s + "`");
            if (std::count(schemes.begin(), schemes.end(), s) != 1)
                throw std::invalid_argument("config: scheme `" + s + "` listed twice");
        }
        const auto require_file = [](const std::string& path, const char* what) {
            if (path.empty())
                throw std::invalid_argument(std::string("config: ") + what + " path is required");
            if (!std::filesystem::exists(path))
                throw std::invalid_argument(std::string("config: ") + what + " path does not exist: " + path);
        };
        require_file(papers_path, "papers");
        require_file(citations_path, "citations");
        require_file(abstracts_path, "abstracts");
        if (has_scheme("scopus")) require_file(scopus_path, "scopus");
        else if (!scopus_path.empty() && !std::filesystem::exists(scopus_path))
            throw std::invalid_argument("config: scopus path does not exist: " + scopus_path);
        if (!map.coordinates_path.empty() && !std::filesystem::exists(map.coordinates_path))
            throw std::invalid_argument("config: coordinates path does not exist: " + map.coordinates_path);

        walks.validate();
        sgns.validate();
        clustering.validate();
        classifier.validate();
        if (lda.topics < 2) throw std::invalid_argument("config: lda topics must be >= 2");
        if (!(lda.beta > 0.0)) throw std::invalid_argument("config: lda beta must be positive");
        if (lda.alpha < 0.0) throw std::invalid_argument("config: lda alpha must be >= 0");
        if (lda.iterations <= lda.burn_in || lda.burn_in < 0)
            throw std::invalid_argument("config: lda needs 0 <= burn_in < iterations");
        if (lda_scan) {
            for (int t : lda_grid)
                if (t < 2) throw std::invalid_argument("config: lda grid entries must be >= 2");
            if (!(lda_sample_fraction > 0.0) || lda_sample_fraction > 1.0)
                throw std::invalid_argument("config: lda sample fraction must be in (0,1]");
            if (lda_workers < 1) throw std::invalid_argument("config: lda workers must be >= 1");
        }
        if (monolabel_neighbors < 1)
            throw std::invalid_argument("config: monolabel_neighbors must be >= 1");
        map.validate();
    }

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"inputs",
             {{"papers", papers_path},
              {"citations", citations_path},
              {"abstracts", abstracts_path},
              {"scopus", scopus_path}}},
            {"schemes", schemes},
            {"out_dir", out_dir},
            {"seed", seed},
            {"min_year", min_year},
            {"walks",
             {{"walks_per_source", walks.walks_per_source},
              {"walk_length", walks.walk_length},
              {"return_param", walks.return_param},
              {"inout_param", walks.inout_param}}},
            {"sgns",
             {{"dimension", sgns.dimension},
              {"window", sgns.window},
              {"negatives", sgns.negatives},
              {"epochs", sgns.epochs},
              {"learning_rate", sgns.learning_rate},
              {"subsample", sgns.subsample},
              {"workers", sgns.workers},
              {"representation",
               sgns.representation == SgnsRepresentation::input_only ? "input_only"
                                                                     : "mean_input_context"}}},
            {"kmeans",
             {{"k", clustering.k},
              {"max_iters", clustering.max_iters},
              {"tolerance", clustering.tolerance},
              {"restarts", clustering.restarts},
              {"normalize", clustering.normalize}}},
            {"classifier",
             {{"folds", classifier.folds},
              {"alpha", classifier.alpha},
              {"hash_dim", classifier.hash_dim},
              {"weight_normalize", classifier.weight_normalize}}},
            {"lda",
             {{"topics", lda.topics},
              {"alpha", lda.alpha},
              {"beta", lda.beta},
              {"iterations", lda.iterations},
              {"burn_in", lda.burn_in},
              {"scan", lda_scan},
              {"grid", lda_grid},
              {"sample_fraction", lda_sample_fraction},
              {"workers", lda_workers}}},
            {"monolabel_neighbors", monolabel_neighbors},
            {"map",
             {{"idw_power", map.idw_power},
              {"grid_nx", map.grid_nx},
              {"grid_ny", map.grid_ny},
              {"coordinates", map.coordinates_path}}}};
    }

    static PipelineConfig from_json(const nlohmann::json& j);
    static PipelineConfig load(const std::string& path) {
        return from_json(nlohmann::json::parse(read_file(path)));
    }
};

namespace detail {

template <class T>
T json_get(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return j.at(key).get<T>();
}

inline nlohmann::json json_section(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) return nlohmann::json::object();
    const auto& section = j.at(key);
    if (!section.is_object())
        throw std::invalid_argument(std::string("config: `") + key + "` must be an object");
    return section;
}

} // namespace detail

inline PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
    PipelineConfig c;
    const auto inputs = detail::json_section(j, "inputs");
    c.papers_path = detail::json_get<std::string>(inputs, "papers", "");
    c.citations_path = detail::json_get<std::string>(inputs, "citations", "");
    c.abstracts_path = detail::json_get<std::string>(inputs, "abstracts", "");
    c.scopus_path = detail::json_get<std::string>(inputs, "scopus", "");

    c.schemes = detail::json_get<std::vector<std::string>>(j, "schemes", {});
    c.out_dir = detail::json_get<std::string>(j, "out_dir", "");
    c.seed = detail::json_get<std::uint64_t>(j, "seed", 1);
    c.min_year = detail::json_get<int>(j, "min_year", 2010);

    const auto w = detail::json_section(j, "walks");
    c.walks.walks_per_source = detail::json_get<int>(w, "walks_per_source", c.walks.walks_per_source);
    c.walks.walk_length = detail::json_get<int>(w, "walk_length", c.walks.walk_length);
    c.walks.return_param = detail::json_get<double>(w, "return_param", c.walks.return_param);
    c.walks.inout_param = detail::json_get<double>(w, "inout_param", c.walks.inout_param);

    const auto s = detail::json_section(j, "sgns");
    c.sgns.dimension = detail::json_get<std::size_t>(s, "dimension", c.sgns.dimension);
    c.sgns.window = detail::json_get<int>(s, "window", c.sgns.window);
    c.sgns.negatives = detail::json_get<int>(s, "negatives", c.sgns.negatives);
    c.sgns.epochs = detail::json_get<int>(s, "epochs", c.sgns.epochs);
    c.sgns.learning_rate = detail::json_get<double>(s, "learning_rate", c.sgns.learning_rate);
    c.sgns.subsample = detail::json_get<double>(s, "subsample", c.sgns.subsample);
    c.sgns.workers = detail::json_get<int>(s, "workers", c.sgns.workers);
    const auto repr = detail::json_get<std::string>(s, "representation", "mean_input_context");
    if (repr == "input_only") c.sgns.representation = SgnsRepresentation::input_only;
    else if (repr == "mean_input_context") c.sgns.representation = SgnsRepresentation::mean_input_context;
    else throw std::invalid_argument("config: unknown sgns representation `" + repr + "`");

    const auto k = detail::json_section(j, "kmeans");
    c.clustering.k = detail::json_get<int>(k, "k", c.clustering.k);
    c.clustering.max_iters = detail::json_get<int>(k, "max_iters", c.clustering.max_iters);
    c.clustering.tolerance = detail::json_get<double>(k, "tolerance", c.clustering.tolerance);
    c.clustering.restarts = detail::json_get<int>(k, "restarts", c.clustering.restarts);
    c.clustering.normalize = detail::json_get<bool>(k, "normalize", c.clustering.normalize);

    const auto cl = detail::json_section(j, "classifier");
    c.classifier.folds = detail::json_get<int>(cl, "folds", c.classifier.folds);
    c.classifier.alpha = detail::json_get<double>(cl, "alpha", c.classifier.alpha);
    c.classifier.hash_dim = detail::json_get<std::size_t>(cl, "hash_dim", c.classifier.hash_dim);
    c.classifier.weight_normalize =
        detail::json_get<bool>(cl, "weight_normalize", c.classifier.weight_normalize);

    const auto l = detail::json_section(j, "lda");
    c.lda.topics = detail::json_get<int>(l, "topics", c.lda.topics);
    c.lda.alpha = detail::json_get<double>(l, "alpha", c.lda.alpha);
    c.lda.beta = detail::json_get<double>(l, "beta", c.lda.beta);
    c.lda.iterations = detail::json_get<int>(l, "iterations", c.lda.iterations);
    c.lda.burn_in = detail::json_get<int>(l, "burn_in", c.lda.burn_in);
    c.lda_scan = detail::json_get<bool>(l, "scan", c.lda_scan);
    c.lda_grid = detail::json_get<std::vector<int>>(l, "grid", {});
    c.lda_sample_fraction = detail::json_get<double>(l, "sample_fraction", c.lda_sample_fraction);
    c.lda_workers = detail::json_get<int>(l, "workers", c.lda_workers);

    c.monolabel_neighbors = detail::json_get<int>(j, "monolabel_neighbors", c.monolabel_neighbors);

    const auto m = detail::json_section(j, "map");
    c.map.idw_power = detail::json_get<double>(m, "idw_power", c.map.idw_power);
    c.map.grid_nx = detail::json_get<int>(m, "grid_nx", c.map.grid_nx);
    c.map.grid_ny = detail::json_get<int>(m, "grid_ny", c.map.grid_ny);
    c.map.coordinates_path = detail::json_get<std::string>(m, "coordinates", "");
    return c;
}

// ---------------------------------------------------------------------------
// Sankey flow tables

struct SankeyFlow {
    int source = 0;
    int target = 0;
    std::size_t count = 0;

    friend bool operator==(const SankeyFlow& a, const SankeyFlow& b) {
        return a.source == b.source && a.target == b.target && a.count == b.count;
    }
};

struct SankeyFlowTable {
    std::vector<SankeyFlow> rows;             // sorted by (source, target)
    std::map<int, std::size_t> source_totals; // N_source over the common universe
    std::size_t universe_size = 0;
};

inline double sankey_threshold(std::size_t n_source) {
    return std::min(0.10 * static_cast<double>(n_source), 50.0);
}

inline SankeyFlowTable sankey_table(const SchemeLabeling& source, const SchemeLabeling& target) {
    std::map<std::pair<int, int>, std::size_t> cells;
    SankeyFlowTable out;
    for (auto p : source.universe) {
        const auto t = target.lookup(p);
        if (!t) continue;
        ++out.universe_size;
        const int s = source.label_of.at(p);
        ++cells[{s, *t}];
        ++out.source_totals[s];
    }
    if (out.universe_size == 0)
        throw std::invalid_argument("sankey_table: labelings share no periodicals");
    out.rows.reserve(cells.size());
    for (const auto& cell : cells)
        out.rows.push_back({cell.first.first, cell.first.second, cell.second});
    return out;
}

// Keeps flows with count >= min(10% of the source's size, 50).
inline SankeyFlowTable sankey_filtered(const SankeyFlowTable& full) {
    SankeyFlowTable out;
    out.source_totals = full.source_totals;
    out.universe_size = full.universe_size;
    for (const auto& row : full.rows)
        if (static_cast<double>(row.count) >= sankey_threshold(full.source_totals.at(row.source)))
            out.rows.push_back(row);
    return out;
}

struct SankeyExport {
    SankeyFlowTable unfiltered;
    SankeyFlowTable filtered;
};

inline SankeyExport export_sankey(const SchemeLabeling& source, const SchemeLabeling& target) {
    SankeyExport out;
    out.unfiltered = sankey_table(source, target);
    out.filtered = sankey_filtered(out.unfiltered);
    return out;
}

inline void write_sankey(const std::string& path, const SankeyFlowTable& table) {
    std::string body;
    for (const auto& row : table.rows) {
        body += std::to_string(row.source);
        body += '\t';
        body += std::to_string(row.target);
        body += '\t';
        body += std::to_string(row.count);
        body += '\n';
    }
    write_file(path, body);
}

// ---------------------------------------------------------------------------
// Similarity maps (per-journal field + IDW grid)

struct SimilarityMap {
    std::vector<std::int32_t> periodicals; // journals that had coordinates, aligned with samples
    std::vector<IdwSample> samples;
    GridSpec grid;
    double power = 2.0;
    std::vector<double> grid_values; // row-major ny x nx, same layout as idw_interpolate
    std::size_t missing_coordinates = 0;
};

inline SimilarityMap export_similarity_map(
    const std::vector<std::int32_t>& elements, const std::vector<double>& values,
    const std::unordered_map<std::int32_t, std::array<double, 2>>& coordinates, GridSpec grid,
    double power = 2.0) {
    if (elements.size() != values.size())
        throw std::invalid_argument("export_similarity_map: element/value size mismatch");
    if (elements.empty()) throw std::invalid_argument("export_similarity_map: empty field");
    if (!(power > 0.0)) throw std::invalid_argument("export_similarity_map: power must be positive");
    SimilarityMap out;
    out.power = power;
    for (std::size_t i = 0; i < elements.size(); ++i) {
        const auto it = coordinates.find(elements[i]);
        if (it == coordinates.end()) {
            ++out.missing_coordinates;
            continue;
        }
        out.periodicals.push_back(elements[i]);
        out.samples.push_back({it->second[0], it->second[1], values[i]});
    }
    if (out.samples.empty())
        throw std::invalid_argument("export_similarity_map: no journal has coordinates");
    // Auto-fit degenerate bounds to the sample cloud; a flat axis gets padding
    // so the grid still spans an area.
    if (grid.x_min == grid.x_max || grid.y_min == grid.y_max) {
        double x_lo = out.samples.front().x, x_hi = x_lo;
        double y_lo = out.samples.front().y, y_hi = y_lo;
        for (const auto& s : out.samples) {
            x_lo = std::min(x_lo, s.x);
            x_hi = std::max(x_hi, s.x);
            y_lo = std::min(y_lo, s.y);
            y_hi = std::max(y_hi, s.y);
        }
        if (x_lo == x_hi) {
            x_lo -= 0.5;
            x_hi += 0.5;
        }
        if (y_lo == y_hi) {
            y_lo -= 0.5;
            y_hi += 0.5;
        }
        grid.x_min = x_lo;
        grid.x_max = x_hi;
        grid.y_min = y_lo;
        grid.y_max = y_hi;
    }
    out.grid = grid;
    out.grid_values = idw_interpolate(out.samples, grid, power);
    return out;
}

// `name \t x \t y` rows matched against the registry; unknown names counted.
struct CoordinateIngest {
    std::unordered_map<std::int32_t, std::array<double, 2>> coords;
    std::size_t rows = 0;
    std::size_t unknown = 0;
    std::size_t malformed = 0;
};

inline CoordinateIngest read_coordinates(const std::string& path, const PeriodicalRegistry& registry) {
    CoordinateIngest out;
    for_each_line(path, [&](std::string_view line, std::size_t) {
        ++out.rows;
        const auto fields = split(line, '\t');
        if (fields.size() != 3) {
            ++out.malformed;
            return;
        }
        const auto id = registry.lookup(std::string(fields[0]));
        if (!id) {
            ++out.unknown;
            return;
        }
        out.coords[*id] = {parse_double(fields[1], "x"), parse_double(fields[2], "y")};
    });
    return out;
}

inline void write_similarity_map(const std::string& journals_path, const std::string& grid_path,
                                 const SimilarityMap& map,
                                 const PeriodicalRegistry* registry = nullptr) {
    std::string body;
    for (std::size_t i = 0; i < map.periodicals.size(); ++i) {
        body += std::to_string(map.periodicals[i]);
        body += '\t';
        body += format_double(map.samples[i].x);
        body += '\t';
        body += format_double(map.samples[i].y);
        body += '\t';
        body += format_double(map.samples[i].value);
        if (registry) {
            body += '\t';
            body += registry->name(map.periodicals[i]);
        }
        body += '\n';
    }
    write_file(journals_path, body);

    std::string grid_body;
    const auto& g = map.grid;
    std::size_t at = 0;
    for (int iy = 0; iy < g.ny; ++iy) {
        const double y = g.ny == 1 ? g.y_min : g.y_min + (g.y_max - g.y_min) * iy / (g.ny - 1);
        for (int ix = 0; ix < g.nx; ++ix) {
            const double x = g.nx == 1 ? g.x_min : g.x_min + (g.x_max - g.x_min) * ix / (g.nx - 1);
            grid_body += format_double(x);
            grid_body += '\t';
            grid_body += format_double(y);
            grid_body += '\t';
            grid_body += format_double(map.grid_values[at++]);
            grid_body += '\n';
        }
    }
    write_file(grid_path, grid_body);
}

// ---------------------------------------------------------------------------
// Stage ledger: content-addressed caching over the manifest

struct StageRun {
    std::string name;
    bool cached = false;
};

struct PipelineResult {
    std::string out_dir;
    std::vector<StageRun> stages;
    nlohmann::json manifest;

    const StageRun* find(const std::string& name) const {
        for (const auto& s : stages)
            if (s.name == name) return &s;
        return nullptr;
    }
    bool executed(const std::string& name) const {
        const auto* s = find(name);
        return s && !s->cached;
    }
    bool cached(const std::string& name) const {
        const auto* s = find(name);
        return s && s->cached;
    }
    std::size_t executed_count() const {
        std::size_t n = 0;
        for (const auto& s : stages) n += s.cached ? 0 : 1;
        return n;
    }
};

namespace detail {

inline std::string stage_key(const std::vector<std::string>& parts) {
    std::string blob;
    for (const auto& p : parts) {
        blob += p;
        blob += '\x1f';
    }
    return content_hash(blob);
}

class StageLedger {
public:
    StageLedger(std::string out_dir, nlohmann::json previous)
        : out_dir_(std::move(out_dir)), previous_(std::move(previous)) {
        if (!previous_.is_object()) previous_ = nlohmann::json::object();
        // Start from the prior records so a partial invocation (a --stage
        // prefix, or a single export kind) doesn't erase the manifest entries
        // of stages it never visits. Visited stages overwrite their entry.
        stages_ = previous_;
    }

    // Runs `compute` unless the manifest already records this key with every
    // declared output intact on disk. Returns true on a cache hit.
    bool stage(const std::string& name, const std::string& key,
               const std::vector<std::string>& outputs,
               const std::function<nlohmann::json()>& compute) {
        if (cache_hit(name, key, outputs)) {
            stages_[name] = previous_.at(name);
            runs_.push_back({name, true});
            return true;
        }
        nlohmann::json info;
        try {
            info = compute();
        } catch (const PipelineError&) {
            throw;
        } catch (const std::exception& e) {
            throw PipelineError(name, e.what());
        }
        nlohmann::json record{{"key", key}, {"info", std::move(info)}};
        auto& out_hashes = record["outputs"] = nlohmann::json::object();
        for (const auto& rel : outputs) {
            const std::string full = out_dir_ + "/" + rel;
            if (!std::filesystem::exists(full))
                throw PipelineError(name, "declared output missing: " + rel);
            out_hashes[rel] = file_hash(full);
        }
        stages_[name] = std::move(record);
        runs_.push_back({name, false});
        return false;
    }

    const nlohmann::json& stages() const { return stages_; }
    std::vector<StageRun> take_runs() { return std::move(runs_); }

private:
    bool cache_hit(const std::string& name, const std::string& key,
                   const std::vector<std::string>& outputs) const {
        if (!previous_.contains(name)) return false;
        const auto& rec = previous_.at(name);
        if (!rec.is_object() || rec.value("key", std::string()) != key) return false;
        if (!rec.contains("outputs") || !rec.at("outputs").is_object()) return false;
        const auto& hashes = rec.at("outputs");
        if (hashes.size() != outputs.size()) return false;
        for (const auto& rel : outputs) {
            if (!hashes.contains(rel)) return false;
            const std::string full = out_dir_ + "/" + rel;
            if (!std::filesystem::exists(full)) return false;
            if (hashes.at(rel).get<std::string>() != file_hash(full)) return false;
        }
        return true;
    }

    std::string out_dir_;
    nlohmann::json previous_;
    nlohmann::json stages_;
    std::vector<StageRun> runs_;
};

inline int group_rank(const std::string& group) {
    static const std::vector<std::string> order{"ingest",   "matrices", "walks",
                                                "embed",    "cluster",  "classify",
                                                "topics",   "agreement", "export"};
    if (group.empty()) return static_cast<int>(order.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        if (order[i] == group) return static_cast<int>(i);
    throw std::invalid_argument("unknown pipeline stage `" + group + "`");
}

// Reads a theta dump back into (paper_id, dominant topic) pairs.
inline std::vector<std::pair<std::string, int>> read_dominant_topics(const std::string& path) {
    std::vector<std::pair<std::string, int>> out;
    for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        const auto fields = split(line, '\t');
        if (fields.size() != 2)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad theta row");
        const auto probs = split(fields[1], ',');
        if (probs.empty())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty theta row");
        int best = 0;
        double best_p = parse_double(probs[0], "theta");
        for (std::size_t k = 1; k < probs.size(); ++k) {
            const double p = parse_double(probs[k], "theta");
            if (p > best_p) {
                best_p = p;
                best = static_cast<int>(k);
            }
        }
        out.emplace_back(std::string(fields[0]), best);
    });
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// run_pipeline

inline PipelineResult run_pipeline(const PipelineConfig& cfg, const std::string& stop_after = "",
                                   const std::string& export_kind = "") {
    cfg.validate();
    if (!export_kind.empty() && export_kind != "sankey" && export_kind != "map")
        throw std::invalid_argument("unknown export kind `" + export_kind + "`");
    const int stop_rank = detail::group_rank(stop_after.empty() ? "export" : stop_after);
    const auto want = [&](const char* group) { return detail::group_rank(group) <= stop_rank; };

    std::filesystem::create_directories(cfg.out_dir);
    nlohmann::json previous = nlohmann::json::object();
    const std::string manifest_path = cfg.out_dir + "/manifest.json";
    if (std::filesystem::exists(manifest_path)) {
        try {
            const auto parsed = nlohmann::json::parse(read_file(manifest_path));
            if (parsed.is_object() && parsed.contains("stages")) previous = parsed.at("stages");
        } catch (const std::exception&) {
            // Unreadable manifest: recompute everything.
        }
    }
    detail::StageLedger ledger(cfg.out_dir, previous);
    const auto out = [&](const std::string& rel) { return cfg.out_dir + "/" + rel; };

    // Derived per-stage seeds, all recorded in the manifest.
    const std::uint64_t seed_trails = derive_seed(cfg.seed, 0x90a11, 1);
    const std::uint64_t seed_walks_cit = derive_seed(cfg.seed, 0x90a11, 2);
    const std::uint64_t seed_walks_cocit = derive_seed(cfg.seed, 0x90a11, 3);
    const std::uint64_t seed_embed_p2v = derive_seed(cfg.seed, 0x53b3d, 1);
    const std::uint64_t seed_embed_cit = derive_seed(cfg.seed, 0x53b3d, 2);
    const std::uint64_t seed_embed_cocit = derive_seed(cfg.seed, 0x53b3d, 3);
    const std::uint64_t seed_folds = derive_seed(cfg.seed, 0xf01d0);
    const std::uint64_t seed_lda = derive_seed(cfg.seed, 0x70b1c);
    const auto seed_cluster = [&](std::size_t scheme_ordinal) {
        return derive_seed(cfg.seed, 0xc1a55, scheme_ordinal);
    };

    const bool need_p2v = cfg.has_scheme("p2v") || cfg.has_scheme("scopus");
    const bool need_cit = cfg.has_scheme("citation") || cfg.has_scheme("citation-n2v");
    const bool need_cocit = cfg.has_scheme("cocitation") || cfg.has_scheme("cocitation-n2v");
    const bool want_exports = cfg.has_scheme("scopus") && cfg.schemes.size() >= 2;

    // Canonical scheme order keeps stage sequence independent of config order.
    std::vector<std::string> ordered_schemes;
    for (const auto& name : known_scheme_names())
        if (cfg.has_scheme(name)) ordered_schemes.push_back(name);

    // --- ingest -----------------------------------------------------------
    // The parse itself is cheap and always runs (downstream stages need the
    // in-memory state); only the artifact writes are cache-skipped.
    IngestResult ing;
    EdgeIngest edges;
    AbstractIngest abstracts;
    ScopusIngest scopus_rows;
    CitationGraph graph;
    const std::string papers_hash = file_hash(cfg.papers_path);
    const std::string citations_hash = file_hash(cfg.citations_path);
    const std::string abstracts_hash = file_hash(cfg.abstracts_path);
    const std::string scopus_hash = cfg.scopus_path.empty() ? "" : file_hash(cfg.scopus_path);
    const std::string graph_key =
        detail::stage_key({papers_hash, citations_hash, std::to_string(cfg.min_year)});
    const std::string ingest_key = detail::stage_key({graph_key, abstracts_hash, scopus_hash});

    try {
        ing = ingest_papers(cfg.papers_path);
        edges = ingest_citations(cfg.citations_path, ing.papers);
        abstracts = read_abstracts(cfg.abstracts_path, ing.papers);
        if (!cfg.scopus_path.empty()) scopus_rows = read_scopus(cfg.scopus_path, ing.registry);
        graph = filter_decade(ing.papers, ing.registry, edges.edges, cfg.min_year);
    } catch (const std::exception& e) {
        throw PipelineError("ingest", e.what());
    }

    ledger.stage("ingest", ingest_key, {"registry.tsv", "ingest.json"}, [&] {
        write_file(out("registry.tsv"), ing.registry.to_tsv());
        nlohmann::json report{
            {"papers",
             {{"rows", ing.summary.rows},
              {"accepted", ing.summary.accepted},
              {"malformed", ing.summary.malformed},
              {"duplicates", ing.summary.duplicates}}},
            {"citations",
             {{"rows", edges.rows},
              {"edges", edges.edges.size()},
              {"unknown_endpoint", edges.unknown_endpoint},
              {"self_citations", edges.self_citations},
              {"malformed", edges.malformed}}},
            {"abstracts",
             {{"rows", abstracts.rows},
              {"matched", abstracts.abstracts.size()},
              {"unknown_paper", abstracts.unknown_paper},
              {"malformed", abstracts.malformed}}},
            {"scopus",
             {{"rows", scopus_rows.rows},
              {"matched", scopus_rows.matched},
              {"unmatched", scopus_rows.unmatched},
              {"malformed", scopus_rows.malformed}}},
            {"graph",
             {{"periodicals", graph.num_periodicals},
              {"papers", graph.num_papers()},
              {"edges", graph.edge_count},
              {"dropped_cross_decade", graph.dropped_cross_decade},
              {"dropped_filtered_endpoint", graph.dropped_filtered_endpoint},
              {"min_year", graph.min_year}}}};
        nlohmann::json info{{"periodicals", ing.registry.size()},
                            {"papers", ing.papers.size()},
                            {"edges", graph.edge_count}};
        write_file(out("ingest.json"), report.dump(2) + "\n");
        return info;
    });

    const nlohmann::json walks_json = cfg.to_json().at("walks");
    const nlohmann::json sgns_json = cfg.to_json().at("sgns");
    const nlohmann::json kmeans_json = cfg.to_json().at("kmeans");

    // --- matrices -----------------------------------------------------------
    std::optional<PeriodicalMatrix> cit_matrix, cocit_matrix;
    std::string matrix_cit_key, matrix_cocit_key;
    if (want("matrices")) {
        if (need_cit) {
            matrix_cit_key = detail::stage_key({graph_key, "citation-matrix"});
            const bool hit = ledger.stage(
                "matrix-citation", matrix_cit_key,
                {"matrix_citation.tsv", "matrix_citation.tsv.json"}, [&] {
                    cit_matrix = build_citation_matrix(graph);
                    write_matrix(out("matrix_citation.tsv"), *cit_matrix);
                    return nlohmann::json{{"nnz", cit_matrix->nnz()},
                                          {"zero_rows", cit_matrix->zero_rows.size()}};
                });
            if (hit) cit_matrix = read_matrix(out("matrix_citation.tsv"));
        }
        if (need_cocit) {
            matrix_cocit_key = detail::stage_key({graph_key, "cocitation-matrix"});
            const bool hit = ledger.stage(
                "matrix-cocitation", matrix_cocit_key,
                {"matrix_cocitation.tsv", "matrix_cocitation.tsv.json"}, [&] {
                    cocit_matrix = build_cocitation_matrix(graph);
                    write_matrix(out("matrix_cocitation.tsv"), *cocit_matrix);
                    return nlohmann::json{{"nnz", cocit_matrix->nnz()},
                                          {"zero_rows", cocit_matrix->zero_rows.size()}};
                });
            if (hit) cocit_matrix = read_matrix(out("matrix_cocitation.tsv"));
        }
    }

    // --- walks --------------------------------------------------------------
    std::optional<TrailCorpus> trails, walks_cit, walks_cocit;
    std::string trails_key, walks_cit_key, walks_cocit_key;
    if (want("walks")) {
        if (need_p2v) {
            trails_key = detail::stage_key(
                {graph_key, walks_json.dump(), std::to_string(seed_trails), "trails"});
            const bool hit = ledger.stage("trails", trails_key, {"trails.tsv.gz"}, [&] {
                WalkConfig wc = cfg.walks;
                wc.seed = seed_trails;
                trails = generate_citation_trails(graph, wc);
                write_trails(out("trails.tsv.gz"), *trails);
                return nlohmann::json{{"trails", trails->size()},
                                      {"tokens", trails->token_count()},
                                      {"seed", seed_trails}};
            });
            if (hit) trails = read_trails(out("trails.tsv.gz"));
        }
        if (cfg.has_scheme("citation-n2v")) {
            walks_cit_key = detail::stage_key(
                {matrix_cit_key, walks_json.dump(), std::to_string(seed_walks_cit), "n2v"});
            const bool hit = ledger.stage("walks-citation-n2v", walks_cit_key,
                                          {"walks_citation.tsv.gz"}, [&] {
                                              WalkConfig wc = cfg.walks;
                                              wc.seed = seed_walks_cit;
                                              walks_cit = node2vec_walks(*cit_matrix, wc);
                                              write_trails(out("walks_citation.tsv.gz"), *walks_cit);
                                              return nlohmann::json{{"walks", walks_cit->size()},
                                                                    {"seed", seed_walks_cit}};
                                          });
            if (hit) walks_cit = read_trails(out("walks_citation.tsv.gz"));
        }
        if (cfg.has_scheme("cocitation-n2v")) {
            walks_cocit_key = detail::stage_key(
                {matrix_cocit_key, walks_json.dump(), std::to_string(seed_walks_cocit), "n2v"});
            const bool hit = ledger.stage(
                "walks-cocitation-n2v", walks_cocit_key, {"walks_cocitation.tsv.gz"}, [&] {
                    WalkConfig wc = cfg.walks;
                    wc.seed = seed_walks_cocit;
                    walks_cocit = node2vec_walks(*cocit_matrix, wc);
                    write_trails(out("walks_cocitation.tsv.gz"), *walks_cocit);
                    return nlohmann::json{{"walks", walks_cocit->size()}, {"seed", seed_walks_cocit}};
                });
            if (hit) walks_cocit = read_trails(out("walks_cocitation.tsv.gz"));
        }
    }

    // --- embeddings ---------------------------------------------------------
    std::optional<EmbeddingMatrix> p2v_emb, cit_emb, cocit_emb;
    std::string embed_p2v_key, embed_cit_key, embed_cocit_key;
    const auto embed_stage = [&](const std::string& name, const std::string& upstream_key,
                                 std::uint64_t seed, const TrailCorpus& corpus,
                                 const std::string& artifact,
                                 std::optional<EmbeddingMatrix>& slot) {
        const std::string key =
            detail::stage_key({upstream_key, sgns_json.dump(), std::to_string(seed)});
        const bool hit = ledger.stage(name, key, {artifact}, [&] {
            SgnsConfig sc = cfg.sgns;
            sc.seed = seed;
            const SgnsModel model = train_sgns(corpus, sc);
            slot = model.embeddings;
            write_embeddings(out(artifact), *slot);
            nlohmann::json info{{"vocab", slot->vocab_size()},
                                {"dimension", slot->dim},
                                {"seed", seed}};
            if (!model.epoch_loss.empty()) info["final_epoch_loss"] = model.epoch_loss.back();
            return info;
        });
        if (hit) slot = read_embeddings(out(artifact));
        return key;
    };
    if (want("embed")) {
        if (need_p2v)
            embed_p2v_key = embed_stage("embed-p2v", trails_key, seed_embed_p2v, *trails,
                                        "embeddings_p2v.tsv.gz", p2v_emb);
        if (cfg.has_scheme("citation-n2v"))
            embed_cit_key = embed_stage("embed-citation-n2v", walks_cit_key, seed_embed_cit,
                                        *walks_cit, "embeddings_citation_n2v.tsv.gz", cit_emb);
        if (cfg.has_scheme("cocitation-n2v"))
            embed_cocit_key =
                embed_stage("embed-cocitation-n2v", walks_cocit_key, seed_embed_cocit, *walks_cocit,
                            "embeddings_cocitation_n2v.tsv.gz", cocit_emb);
    }

    // --- schemes ------------------------------------------------------------
    std::map<std::string, SchemeLabeling> labelings;
    std::map<std::string, std::string> scheme_keys;
    const auto scheme_artifact = [](const std::string& name) { return "scheme_" + name + ".tsv"; };

    const auto kmeans_scheme_stage = [&](const std::string& name, const std::string& upstream_key,
                                         std::size_t ordinal,
                                         const std::function<KmeansResult(const KmeansConfig&)>& fit,
                                         const std::vector<std::int32_t>& row_periodicals,
                                         const nlohmann::json& source_note) {
        const std::uint64_t seed = seed_cluster(ordinal);
        const std::string key =
            detail::stage_key({upstream_key, kmeans_json.dump(), std::to_string(seed), name});
        const std::string artifact = scheme_artifact(name);
        const bool hit = ledger.stage("scheme-" + name, key, {artifact, artifact + ".json"}, [&] {
            KmeansConfig kc = cfg.clustering;
            kc.seed = seed;
            const KmeansResult res = fit(kc);
            SchemeLabeling scheme = scheme_from_kmeans(name, row_periodicals, res);
            nlohmann::json provenance{{"method", "kmeans"},
                                      {"k", kc.k},
                                      {"seed", seed},
                                      {"normalize", kc.normalize},
                                      {"inertia", res.inertia},
                                      {"restart", res.best_restart},
                                      {"source", source_note}};
            write_labeling(out(artifact), scheme, provenance);
            labelings.emplace(name, std::move(scheme));
            return nlohmann::json{{"labels", labelings.at(name).num_labels()},
                                  {"periodicals", labelings.at(name).universe.size()},
                                  {"inertia", res.inertia},
                                  {"seed", seed}};
        });
        if (hit) labelings.emplace(name, read_labeling(out(artifact)));
        scheme_keys[name] = key;
    };

    // k-means over the row-normalized rows of a periodical matrix, restricted
    // to rows that actually have citations.
    const auto matrix_rows_fit = [&](const PeriodicalMatrix& matrix,
                                     std::vector<std::int32_t>& active_out) {
        const PeriodicalMatrix norm = row_normalize(matrix);
        active_out.clear();
        for (std::size_t i = 0; i < norm.dimension; ++i)
            if (norm.offsets[i + 1] > norm.offsets[i])
                active_out.push_back(static_cast<std::int32_t>(i));
        std::vector<std::vector<double>> rows;
        rows.reserve(active_out.size());
        for (auto i : active_out) rows.push_back(norm.dense_row(static_cast<std::size_t>(i)));
        return rows;
    };

    if (want("cluster")) {
        for (std::size_t ordinal = 0; ordinal < ordered_schemes.size(); ++ordinal) {
            const std::string& name = ordered_schemes[ordinal];
            if (name == "p2v") {
                kmeans_scheme_stage(
                    name, embed_p2v_key, ordinal,
                    [&](const KmeansConfig& kc) { return kmeans(*p2v_emb, kc); }, p2v_emb->tokens,
                    "trail-embedding");
            } else if (name == "citation" || name == "cocitation") {
                const auto& matrix = name == "citation" ? cit_matrix : cocit_matrix;
                const auto& upstream = name == "citation" ? matrix_cit_key : matrix_cocit_key;
                auto rows = std::make_shared<std::vector<std::vector<double>>>();
                auto active = std::make_shared<std::vector<std::int32_t>>();
                *rows = matrix_rows_fit(*matrix, *active);
                kmeans_scheme_stage(
                    name, upstream, ordinal,
                    [rows](const KmeansConfig& kc) { return kmeans_rows(*rows, kc); }, *active,
                    "row-normalized matrix rows");
            } else if (name == "citation-n2v" || name == "cocitation-n2v") {
                const auto& emb = name == "citation-n2v" ? cit_emb : cocit_emb;
                const auto& upstream = name == "citation-n2v" ? embed_cit_key : embed_cocit_key;
                kmeans_scheme_stage(
                    name, upstream, ordinal,
                    [&emb](const KmeansConfig& kc) { return kmeans(*emb, kc); }, emb->tokens,
                    "node2vec embedding");
            } else if (name == "scopus") {
                const std::string key = detail::stage_key(
                    {embed_p2v_key, scopus_hash, std::to_string(cfg.monolabel_neighbors), "scopus"});
                const std::string artifact = scheme_artifact(name);
                const bool hit =
                    ledger.stage("scheme-scopus", key, {artifact, artifact + ".json"}, [&] {
                        const ScopusScheme built =
                            build_scopus_scheme(*p2v_emb, ing.registry, cfg.monolabel_neighbors);
                        nlohmann::json provenance{{"method", "scopus-monolabel"},
                                                  {"neighbors", cfg.monolabel_neighbors},
                                                  {"unlabelable", built.unlabelable}};
                        write_labeling(out(artifact), built.labeling, provenance);
                        labelings.emplace(name, built.labeling);
                        return nlohmann::json{{"labels", built.labeling.num_labels()},
                                              {"periodicals", built.labeling.universe.size()},
                                              {"unlabelable", built.unlabelable}};
                    });
                if (hit) labelings.emplace(name, read_labeling(out(artifact)));
                scheme_keys[name] = key;
            }
        }
    }

    // --- classification evaluation -------------------------------------------
    const nlohmann::json classifier_json = cfg.to_json().at("classifier");
    if (want("classify")) {
        for (const auto& name : ordered_schemes) {
            const SchemeLabeling& scheme = labelings.at(name);
            const std::string key = detail::stage_key({scheme_keys.at(name), abstracts_hash,
                                                       classifier_json.dump(),
                                                       std::to_string(seed_folds)});
            ledger.stage(
                "classify-" + name, key,
                {"classification_" + name + ".json", "scores_" + name + ".tsv"}, [&] {
                    std::vector<HashedVector> docs;
                    std::vector<int> labels;
                    std::vector<std::string> ids;
                    std::size_t skipped_unlabeled = 0;
                    for (const auto& a : abstracts.abstracts) {
                        const auto& rec = ing.papers.papers[static_cast<std::size_t>(a.paper)];
                        const auto label = scheme.lookup(rec.periodical_id);
                        if (!label) {
                            ++skipped_unlabeled;
                            continue;
                        }
                        docs.push_back(hash_vectorize(a.text, cfg.classifier.hash_dim));
                        labels.push_back(*label);
                        ids.push_back(rec.paper_id);
                    }
                    CnbConfig cc;
                    cc.alpha = cfg.classifier.alpha;
                    cc.weight_normalize = cfg.classifier.weight_normalize;
                    const CrossvalReport rep =
                        crossval_multiclass(docs, labels, cfg.classifier.folds, cc, seed_folds);

                    // Label-ranking view of the pooled out-of-fold scores.
                    std::vector<RankedPrediction> ranked(docs.size());
                    for (std::size_t i = 0; i < docs.size(); ++i) {
                        ranked[i].scores = rep.scores[i];
                        ranked[i].relevant.assign(rep.classes.size(), 0);
                        const auto at = std::lower_bound(rep.classes.begin(), rep.classes.end(),
                                                         labels[i]) -
                                        rep.classes.begin();
                        ranked[i].relevant[static_cast<std::size_t>(at)] = 1;
                    }
                    const double rap = ranking_average_precision(ranked);
                    const double rloss = ranking_loss(ranked);

                    // Macro AP/AUC via pooled one-vs-rest scores.
                    const OvrOutput ovr =
                        one_vs_rest(docs, labels, cfg.classifier.folds, cc, seed_folds);
                    double ap_sum = 0.0, auc_sum = 0.0;
                    std::size_t curve_classes = 0;
                    for (std::size_t c = 0; c < ovr.classes.size(); ++c) {
                        std::vector<double> scores;
                        std::vector<std::uint8_t> truth;
                        bool pos = false, neg = false;
                        for (std::size_t i = 0; i < docs.size(); ++i) {
                            if (!ovr.scored[c][i]) continue;
                            scores.push_back(ovr.score[c][i]);
                            truth.push_back(ovr.relevant[c][i]);
                            (ovr.relevant[c][i] ? pos : neg) = true;
                        }
                        if (!pos || !neg) continue;
                        const BinaryCurves curves = pr_roc_curves(scores, truth);
                        ap_sum += curves.average_precision;
                        auc_sum += curves.auc;
                        ++curve_classes;
                    }

                    nlohmann::json report = crossval_to_json(rep);
                    report["scheme"] = name;
                    report["documents"] = docs.size();
                    report["skipped_unlabeled"] = skipped_unlabeled;
                    report["ranking"] = {{"rap", rap}, {"ranking_loss", rloss}};
                    nlohmann::json curves{{"classes_scored", curve_classes},
                                          {"skipped_fits", ovr.skipped.size()}};
                    if (curve_classes > 0) {
                        curves["macro_ap"] = ap_sum / static_cast<double>(curve_classes);
                        curves["macro_auc"] = auc_sum / static_cast<double>(curve_classes);
                    }
                    report["curves"] = curves;
                    write_file(out("classification_" + name + ".json"), report.dump(2) + "\n");
                    write_scores(out("scores_" + name + ".tsv"), ids, labels, rep.scores);
                    return nlohmann::json{{"documents", docs.size()},
                                          {"macro_f1", rep.macro_f1.mean},
                                          {"accuracy", rep.accuracy.mean}};
                });
        }
    }

    // --- topic model ----------------------------------------------------------
    const nlohmann::json lda_json = cfg.to_json().at("lda");
    std::vector<std::pair<std::string, int>> doc_topics; // (paper_id, dominant topic)
    std::string topics_key;
    if (want("topics")) {
        topics_key =
            detail::stage_key({abstracts_hash, lda_json.dump(), std::to_string(seed_lda)});
        const bool hit = ledger.stage(
            "topics", topics_key, {"theta.tsv.gz", "topics.tsv", "topics.json"}, [&] {
                std::vector<std::string> texts;
                texts.reserve(abstracts.abstracts.size());
                for (const auto& a : abstracts.abstracts) texts.push_back(a.text);
                const LdaCorpus corpus = lda_corpus(texts);

                LdaConfig lc = cfg.lda;
                lc.seed = seed_lda;
                nlohmann::json scan_info;
                if (cfg.lda_scan) {
                    const std::vector<int> grid =
                        cfg.lda_grid.empty() ? default_topic_grid() : cfg.lda_grid;
                    const CoherenceScan scan = coherence_scan(corpus, grid, lc,
                                                              cfg.lda_sample_fraction,
                                                              cfg.lda_workers);
                    lc.topics = scan.selected;
                    scan_info = nlohmann::json::array();
                    for (const auto& p : scan.points) {
                        nlohmann::json row{{"topics", p.topics}, {"failed", p.failed}};
                        if (!p.failed) row["coherence"] = p.coherence;
                        else row["error"] = p.error;
                        scan_info.push_back(std::move(row));
                    }
                }
                const LdaModel model = fit_lda(corpus, lc);

                std::vector<std::string> doc_ids;
                doc_ids.reserve(corpus.docs.size());
                for (auto src : corpus.doc_index) {
                    const auto paper = abstracts.abstracts[src].paper;
                    doc_ids.push_back(ing.papers.papers[static_cast<std::size_t>(paper)].paper_id);
                }
                write_theta(out("theta.tsv.gz"), doc_ids, model.theta);
                write_topic_report(out("topics.tsv"), model, corpus);

                const std::vector<int> dominant = dominant_topic(model.theta);
                doc_topics.clear();
                for (std::size_t d = 0; d < doc_ids.size(); ++d)
                    doc_topics.emplace_back(doc_ids[d], dominant[d]);

                nlohmann::json summary{{"topics", lc.topics},
                                       {"alpha", lc.effective_alpha()},
                                       {"beta", lc.beta},
                                       {"iterations", lc.iterations},
                                       {"burn_in", lc.burn_in},
                                       {"seed", seed_lda},
                                       {"documents", corpus.docs.size()},
                                       {"dropped_empty", corpus.dropped_empty},
                                       {"vocabulary", corpus.vocab.size()},
                                       {"initial_log_likelihood", model.initial_log_likelihood},
                                       {"final_log_likelihood", model.final_log_likelihood},
                                       {"coherence", model_coherence(model, corpus)}};
                if (cfg.lda_scan) summary["scan"] = scan_info;
                write_file(out("topics.json"), summary.dump(2) + "\n");
                return nlohmann::json{{"topics", lc.topics}, {"documents", corpus.docs.size()}};
            });
        if (hit) doc_topics = detail::read_dominant_topics(out("theta.tsv.gz"));
    }

    // --- topic-label agreement --------------------------------------------------
    if (want("agreement")) {
        for (const auto& name : ordered_schemes) {
            const SchemeLabeling& scheme = labelings.at(name);
            const std::string key = detail::stage_key({topics_key, scheme_keys.at(name)});
            ledger.stage("agreement-" + name, key, {"agreement_" + name + ".json"}, [&] {
                std::vector<int> topics_side, labels_side;
                for (const auto& [paper_id, topic] : doc_topics) {
                    const auto dense = ing.papers.by_paper_id.find(paper_id);
                    if (dense == ing.papers.by_paper_id.end()) continue;
                    const auto& rec = ing.papers.papers[static_cast<std::size_t>(dense->second)];
                    const auto label = scheme.lookup(rec.periodical_id);
                    if (!label) continue;
                    topics_side.push_back(topic);
                    labels_side.push_back(*label);
                }
                if (topics_side.empty())
                    throw std::runtime_error("no documents share the topic model and scheme `" +
                                             name + "`");
                nlohmann::json report{{"scheme", name},
                                      {"documents", topics_side.size()},
                                      {"nmi", nmi(topics_side, labels_side)},
                                      {"ari", ari(topics_side, labels_side)},
                                      {"fmi", fmi(topics_side, labels_side)}};
                write_file(out("agreement_" + name + ".json"), report.dump(2) + "\n");
                return nlohmann::json{{"documents", topics_side.size()},
                                      {"nmi", report.at("nmi")}};
            });
        }
    }

    // --- exports ------------------------------------------------------------------
    if (want("export") && want_exports) {
        const SchemeLabeling& reference = labelings.at("scopus");
        const std::string reference_key = scheme_keys.at("scopus");

        // Coordinates: an external projection if configured, else PCA of the
        // trail embedding.
        std::unordered_map<std::int32_t, std::array<double, 2>> coords;
        std::string coord_source;
        std::string coord_fingerprint;
        if (export_kind.empty() || export_kind == "map") {
            if (!cfg.map.coordinates_path.empty()) {
                const CoordinateIngest ci = read_coordinates(cfg.map.coordinates_path, ing.registry);
                coords = ci.coords;
                coord_source = "file:" + cfg.map.coordinates_path;
                coord_fingerprint = file_hash(cfg.map.coordinates_path);
            } else {
                const auto projected = pca_2d(*p2v_emb);
                for (std::size_t r = 0; r < p2v_emb->tokens.size(); ++r)
                    coords[p2v_emb->tokens[r]] = projected[r];
                coord_source = "pca:trail-embedding";
                coord_fingerprint = embed_p2v_key;
            }
        }
        const nlohmann::json map_json = cfg.to_json().at("map");

        for (const auto& name : ordered_schemes) {
            if (name == "scopus") continue;
            const SchemeLabeling& scheme = labelings.at(name);

            const bool want_sankey = export_kind.empty() || export_kind == "sankey";
            const bool want_map = export_kind.empty() || export_kind == "map";

            const std::string sankey_key =
                detail::stage_key({reference_key, scheme_keys.at(name), "sankey"});
            if (want_sankey)
                ledger.stage("export-sankey-" + name, sankey_key,
                             {"sankey_" + name + ".tsv", "sankey_" + name + "_filtered.tsv"}, [&] {
                                 const SankeyExport tables = export_sankey(reference, scheme);
                                 write_sankey(out("sankey_" + name + ".tsv"), tables.unfiltered);
                                 write_sankey(out("sankey_" + name + "_filtered.tsv"),
                                              tables.filtered);
                                 return nlohmann::json{
                                     {"source", "scopus"},
                                     {"journals", tables.unfiltered.universe_size},
                                     {"flows", tables.unfiltered.rows.size()},
                                     {"kept", tables.filtered.rows.size()}};
                             });

            if (!want_map) continue;
            const std::string map_key = detail::stage_key(
                {reference_key, scheme_keys.at(name), coord_fingerprint, map_json.dump(), "map"});
            ledger.stage(
                "export-map-" + name, map_key,
                {"map_" + name + "_journals.tsv", "map_" + name + "_grid.tsv"}, [&] {
                    std::vector<std::int32_t> shared;
                    for (auto p : reference.universe)
                        if (scheme.lookup(p)) shared.push_back(p);
                    if (shared.empty())
                        throw std::runtime_error("scheme `" + name +
                                                 "` shares no periodicals with scopus");
                    std::vector<int> a, b;
                    a.reserve(shared.size());
                    b.reserve(shared.size());
                    for (auto p : shared) {
                        a.push_back(reference.label_of.at(p));
                        b.push_back(*scheme.lookup(p));
                    }
                    const std::vector<double> field = element_centric_similarity(a, b);
                    GridSpec grid;
                    grid.x_min = grid.x_max = 0.0; // degenerate bounds: fit to the samples
                    grid.y_min = grid.y_max = 0.0;
                    grid.nx = cfg.map.grid_nx;
                    grid.ny = cfg.map.grid_ny;
                    const SimilarityMap map_out =
                        export_similarity_map(shared, field, coords, grid, cfg.map.idw_power);
                    write_similarity_map(out("map_" + name + "_journals.tsv"),
                                         out("map_" + name + "_grid.tsv"), map_out, &ing.registry);
                    return nlohmann::json{{"journals", map_out.periodicals.size()},
                                          {"missing_coordinates", map_out.missing_coordinates},
                                          {"coordinates", coord_source},
                                          {"power", map_out.power}};
                });
        }
    }

    // --- manifest ---------------------------------------------------------------
    nlohmann::json manifest{{"config", cfg.to_json()},
                            {"seeds",
                             {{"trails", seed_trails},
                              {"walks-citation-n2v", seed_walks_cit},
                              {"walks-cocitation-n2v", seed_walks_cocit},
                              {"embed-p2v", seed_embed_p2v},
                              {"embed-citation-n2v", seed_embed_cit},
                              {"embed-cocitation-n2v", seed_embed_cocit},
                              {"folds", seed_folds},
                              {"lda", seed_lda}}},
                            {"stages", ledger.stages()}};
    write_file(manifest_path, manifest.dump(2) + "\n");

    PipelineResult result;
    result.out_dir = cfg.out_dir;
    result.stages = ledger.take_runs();
    result.manifest = std::move(manifest);
    return result;
}

} // namespace perivec
