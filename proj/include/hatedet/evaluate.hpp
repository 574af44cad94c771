#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hatedet/corpus.hpp"
#include "hatedet/prediction.hpp"

namespace hatedet {

using ConfusionMatrix = std::vector<std::vector<std::size_t>>;  // [gold][pred]

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    /// Set when a 0/0 was resolved to 0 for any of precision, recall or f1.
    bool zero_division = false;

    friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

struct EvalReport {
    Task task = Task::A;
    std::size_t n = 0;
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;
    double accuracy = 0.0;
    std::vector<ClassMetrics> per_class;  // indexed by label code
    ConfusionMatrix confusion;

    [[nodiscard]] LabelScheme scheme() const { return LabelScheme::for_task(task); }
    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);

/// cell[g][p] counts pairs with gold g and prediction p.
ConfusionMatrix confusion_from_pairs(std::span<const int> gold, std::span<const int> predicted, std::size_t num_labels);

/// Metrics from parallel gold/predicted code sequences.
EvalReport score_labels(std::span<const int> gold, std::span<const int> predicted, const LabelScheme& scheme);

/// Scores predictions against a labeled split. Prediction ids must match the
/// split's ids exactly (CoverageError otherwise); every gold instance must be
/// labeled (UnlabeledGold otherwise).
EvalReport score(std::span<const Prediction> predictions, const Dataset& gold);

ConfusionMatrix confusion_matrix(std::span<const Prediction> predictions, const Dataset& gold);

/// One row of a results table: a model's report on one split.
struct ReportEntry {
    std::string model;
    Split split = Split::Eval;
    std::string group;  // rows are separated by a rule wherever the group changes
    EvalReport report;

    friend bool operator==(const ReportEntry&, const ReportEntry&) = default;
};

enum class ReportFormat { TextTable, Json, Plot };
ReportFormat parse_report_format(std::string_view name);

struct RenderedReport {
    std::string text;                         // table text or JSON document
    std::vector<std::filesystem::path> files;  // written images (plot format)
};

struct TableOptions {
    int precision = 2;
    /// Append per-class metrics and confusion matrices after the table.
    bool detailed = false;
};

/// Model / Eval F1 / Test F1 table, one row per model in first-appearance
/// order. The best test score (best eval score when no test scores exist) is
/// wrapped in ** **.
std::string render_table(std::span<const ReportEntry> entries, const TableOptions& options = {});

nlohmann::json reports_to_json(std::span<const ReportEntry> entries);
std::vector<ReportEntry> reports_from_json(const nlohmann::json& j);

/// Confusion-matrix heatmap as PNG, cells shaded by row-normalized count.
void write_confusion_png(const EvalReport& report, const std::filesystem::path& path);

/// Text table, JSON or one heatmap per entry. Plot output needs `out_dir`.
RenderedReport render_report(std::span<const ReportEntry> entries, ReportFormat format,
                             const std::filesystem::path& out_dir = {}, const TableOptions& options = {});

}  // namespace hatedet
