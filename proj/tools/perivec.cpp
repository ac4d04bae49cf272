#include <CLI11.hpp>

#include <perivec/pipeline.hpp>
#include <perivec/synth.hpp>

#include <cstdint>
#include <cstdio>
#include <exception>
#include <memory>
#include <string>

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "pipeline config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out_override, "override the configured output directory");
    cmd->add_option("--seed", opts.seed_override, "override the configured global seed")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
}

// Runs the pipeline through `stop_after` (empty = everything), mapping errors
// onto the exit-code contract: 2 for bad input, 1 for a failed stage.
int run_prefix(const CommonOpts& opts, const std::string& stop_after,
               const std::string& export_kind = "") {
    perivec::PipelineConfig cfg;
    try {
        cfg = perivec::PipelineConfig::load(opts.config_path);
        if (!opts.out_override.empty()) cfg.out_dir = opts.out_override;
        if (opts.seed_set) cfg.seed = opts.seed_override;
        cfg.validate();
        perivec::detail::group_rank(stop_after.empty() ? "export" : stop_after);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    try {
        const auto result = perivec::run_pipeline(cfg, stop_after, export_kind);
        for (const auto& stage : result.stages)
            std::printf("%s\t%s\n", stage.name.c_str(), stage.cached ? "cached" : "computed");
        std::printf("artifacts: %s\n", result.out_dir.c_str());
        return 0;
    } catch (const perivec::PipelineError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"derive and evaluate periodical classification schemes"};
    app.require_subcommand(1);
    int exit_code = 0;

    // Pipeline prefixes: each subcommand runs the pipeline up to its stage
    // group, reusing cached artifacts from any earlier run into the same
    // output directory.
    const auto add_prefix = [&](const char* name, const char* help, std::string stop,
                                std::string kind = "") {
        auto opts = std::make_shared<CommonOpts>();
        CLI::App* cmd = app.add_subcommand(name, help);
        add_common(cmd, *opts);
        cmd->callback([opts, stop, kind, &exit_code] {
            exit_code = run_prefix(*opts, stop, kind);
        });
        return cmd;
    };

    add_prefix("ingest", "parse inputs and build the decade-filtered citation graph", "ingest");
    add_prefix("matrices", "build citation and co-citation matrices", "matrices");
    add_prefix("walks", "generate citation trails and node2vec walks", "walks");
    add_prefix("embed", "train skip-gram embeddings from the walks", "embed");
    add_prefix("cluster", "derive the configured classification schemes", "cluster");
    add_prefix("classify", "evaluate schemes by cross-validated document classification",
               "classify");
    add_prefix("topics", "fit the topic model over the abstracts", "topics");
    add_prefix("agreement", "score topic-label agreement for each scheme", "agreement");

    {
        CLI::App* exp = app.add_subcommand("export", "emit Sankey tables or similarity maps");
        exp->require_subcommand(1);
        const auto add_kind = [&](const char* kind, const char* help) {
            auto opts = std::make_shared<CommonOpts>();
            CLI::App* cmd = exp->add_subcommand(kind, help);
            add_common(cmd, *opts);
            const std::string kind_str = kind;
            cmd->callback([opts, kind_str, &exit_code] {
                exit_code = run_prefix(*opts, "export", kind_str);
            });
        };
        add_kind("sankey", "cross-tabulate each scheme against the reference labeling");
        add_kind("map", "per-journal similarity fields with IDW-interpolated grids");
    }

    {
        CLI::App* run = app.add_subcommand("run", "run the full pipeline");
        auto opts = std::make_shared<CommonOpts>();
        add_common(run, *opts);
        auto stage = std::make_shared<std::string>();
        run->add_option("--stage", *stage,
                        "stop after this stage group (ingest, matrices, walks, embed, cluster, "
                        "classify, topics, agreement, export)");
        run->callback([opts, stage, &exit_code] { exit_code = run_prefix(*opts, *stage); });
    }

    {
        CLI::App* synth = app.add_subcommand("synth", "generate a planted-partition test corpus");
        auto spec = std::make_shared<perivec::SynthSpec>();
        auto out_dir = std::make_shared<std::string>();
        synth->add_option("--out", *out_dir, "directory for the corpus files")->required();
        synth->add_option("--seed", spec->seed, "corpus seed");
        synth->add_option("--communities", spec->communities, "number of planted communities");
        synth->add_option("--papers", spec->papers_per_community, "papers per community");
        synth->add_option("--vocab", spec->vocab_per_community, "vocabulary words per community");
        synth->add_option("--venues", spec->periodicals_per_community,
                          "periodicals per community");
        synth->add_option("--refs", spec->refs_per_paper, "references per paper");
        synth->add_option("--tokens", spec->abstract_tokens, "tokens per abstract");
        synth->add_option("--intra-rate", spec->intra_rate,
                          "probability a reference stays inside its community");
        synth->add_option("--coverage", spec->scopus_coverage,
                          "fraction of venues with reference labels");
        synth->add_option("--base-year", spec->base_year, "publication decade anchor");
        synth->callback([spec, out_dir, &exit_code] {
            try {
                spec->validate();
            } catch (const std::exception& e) {
                std::fprintf(stderr, "config error: %s\n", e.what());
                exit_code = 2;
                return;
            }
            try {
                const auto corpus = perivec::generate_synthetic_corpus(*spec);
                perivec::write_synthetic_corpus(corpus, *out_dir);
                std::printf("papers: %zu\ncitations: %zu\nout: %s\n", corpus.paper_count(),
                            corpus.citations.size(), out_dir->c_str());
            } catch (const std::exception& e) {
                std::fprintf(stderr, "error: %s\n", e.what());
                exit_code = 1;
            }
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2; // malformed invocation is a validation error
    }
    return exit_code;
}
