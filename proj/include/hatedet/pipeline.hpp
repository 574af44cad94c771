#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "hatedet/augment.hpp"
#include "hatedet/config.hpp"
#include "hatedet/evaluate.hpp"
#include "hatedet/ocr.hpp"
#include "hatedet/prompt.hpp"

namespace hatedet {

enum class Stage { Ingest, Ocr, Augment, Train, Predict, Llm, Ensemble, Evaluate };

inline constexpr Stage kStageOrder[] = {Stage::Ingest,  Stage::Ocr, Stage::Augment,  Stage::Train,
                                        Stage::Predict, Stage::Llm, Stage::Ensemble, Stage::Evaluate};

std::string_view to_string(Stage stage);
/// Throws ConfigError for unknown names.
Stage parse_stage(std::string_view name);

enum class StageState { Ran, Cached, Skipped, WouldRun };
std::string_view to_string(StageState state);

struct StageStatus {
    Stage stage;
    StageState state;
    std::string detail;
};

struct RunOptions {
    std::set<Stage> force;  // each forced stage also forces everything after it
    bool dry_run = false;
    std::ostream* log = nullptr;
    /// Provider overrides; when unset the config decides.
    std::shared_ptr<OcrProvider> ocr_provider;
    std::shared_ptr<TranslationProvider> translator;
    std::shared_ptr<LlmProvider> llm_provider;
};

/// File layout of one pipeline configuration.
struct ArtifactPaths {
    std::filesystem::path dataset;        // ingested manifest
    std::filesystem::path ocr_dataset;    // with extracted text
    std::filesystem::path ocr_review;
    std::filesystem::path augmented;      // augmented instances only
    std::filesystem::path augment_dataset;  // original plus augmented
    std::filesystem::path predictions_dir;
    std::filesystem::path llm_dir;
    std::filesystem::path stamps_dir;
    std::filesystem::path report_dir;

    explicit ArtifactPaths(const PipelineConfig& config);
    [[nodiscard]] std::filesystem::path predictions(const std::string& model, Split split) const;
};

/// Resumable stage runner. Each stage records a stamp holding a key derived
/// from its config section and the digests of its input files; a stage whose
/// key matches and whose outputs are intact reports "cached".
class Pipeline {
public:
    Pipeline(PipelineConfig config, RunOptions options = {});

    /// Runs `target` after bringing every stage before it up to date.
    std::vector<StageStatus> run_until(Stage target);
    std::vector<StageStatus> run_all() { return run_until(Stage::Evaluate); }

    [[nodiscard]] const PipelineConfig& config() const noexcept { return config_; }
    [[nodiscard]] const ArtifactPaths& paths() const noexcept { return paths_; }

    /// The dataset that training and prediction consume.
    [[nodiscard]] std::filesystem::path current_dataset() const;
    /// Report entries written by the evaluate stage.
    [[nodiscard]] std::vector<ReportEntry> load_report() const;

private:
    StageStatus run_stage(Stage stage, bool forced);

    StageStatus ingest(bool forced);
    StageStatus ocr(bool forced);
    StageStatus augment(bool forced);
    StageStatus train(bool forced);
    StageStatus predict(bool forced);
    StageStatus llm(bool forced);
    StageStatus ensemble(bool forced);
    StageStatus evaluate(bool forced);

    [[nodiscard]] std::vector<std::string> prediction_models() const;
    void log(const std::string& line) const;

    PipelineConfig config_;
    RunOptions options_;
    ArtifactPaths paths_;
};

}  // namespace hatedet
