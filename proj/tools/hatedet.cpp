#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "hatedet/config.hpp"
#include "hatedet/errors.hpp"
#include "hatedet/pipeline.hpp"

namespace {

using namespace hatedet;

int exit_code(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::Usage: return 1;
        case ErrorCategory::Data: return 2;
        case ErrorCategory::Provider: return 3;
    }
    return 2;
}

struct Globals {
    std::string config = "hatedet.toml";
    std::optional<std::uint64_t> seed;
    std::vector<std::string> force;
    bool dry_run = false;
    bool quiet = false;
};

Pipeline make_pipeline(const Globals& g) {
    PipelineConfig config = load_config(g.config);
    if (g.seed) config.override_seed(*g.seed);
    RunOptions options;
    for (const auto& f : g.force) options.force.insert(parse_stage(f));
    options.dry_run = g.dry_run;
    options.log = g.quiet ? nullptr : &std::cerr;
    return Pipeline(std::move(config), std::move(options));
}

void print_distribution(const Pipeline& p) {
    const Dataset ds = load_dataset(p.paths().dataset, p.config().scheme());
    std::cout << format_distribution(label_distribution(ds), ds.scheme());
}

void print_report(const Pipeline& p) {
    const auto entries = p.load_report();
    std::cout << render_table(entries);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hate speech and target detection pipeline for text-embedded images"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("-c,--config", g.config, "Pipeline config file (TOML)")->capture_default_str();
    app.add_option("--seed", g.seed, "Override the global and per-model seeds");
    app.add_option("--force", g.force, "Recompute this stage and everything after it (repeatable)")
        ->check(CLI::IsMember({"ingest", "ocr", "augment", "train", "predict", "llm", "ensemble", "evaluate"}));
    app.add_flag("--dry-run", g.dry_run, "Report what would run without running it");
    app.add_flag("-q,--quiet", g.quiet, "Suppress per-stage progress on stderr");

    const std::pair<const char*, Stage> stage_verbs[] = {
        {"ingest", Stage::Ingest},   {"ocr", Stage::Ocr},       {"augment", Stage::Augment},
        {"train", Stage::Train},     {"predict", Stage::Predict}, {"llm", Stage::Llm},
        {"ensemble", Stage::Ensemble}, {"evaluate", Stage::Evaluate}};
    std::optional<Stage> target;
    for (const auto& [verb, stage] : stage_verbs) {
        auto* sub = app.add_subcommand(verb, "Run stages up to and including " + std::string(verb));
        sub->callback([&target, stage = stage] { target = stage; });
    }
    auto* run_all = app.add_subcommand("run-all", "Run every stage");
    run_all->callback([&target] { target = Stage::Evaluate; });

    std::string format = "text";
    bool detailed = false;
    std::string out_dir;
    auto* report = app.add_subcommand("report", "Render the last evaluation report");
    report->add_option("--format", format, "text | json | plot")->capture_default_str();
    report->add_flag("--detailed", detailed, "Append per-class metrics and confusion matrices");
    report->add_option("--out", out_dir, "Directory for plot output (default: the report directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        Pipeline pipeline = make_pipeline(g);
        if (report->parsed()) {
            const auto entries = pipeline.load_report();
            TableOptions options;
            options.detailed = detailed;
            const std::filesystem::path dir = out_dir.empty() ? pipeline.paths().report_dir : std::filesystem::path(out_dir);
            const RenderedReport r = render_report(entries, parse_report_format(format), dir, options);
            std::cout << r.text;
            return 0;
        }
        const auto statuses = pipeline.run_until(*target);
        if (g.dry_run) return 0;
        const Stage last = statuses.back().stage;
        if (last == Stage::Ingest) print_distribution(pipeline);
        if (last == Stage::Evaluate) print_report(pipeline);
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
