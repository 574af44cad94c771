#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hatedet/corpus.hpp"

namespace hatedet {

struct Prediction {
    std::string instance_id;
    int label = 0;
    std::optional<std::vector<double>> scores;  // one per scheme label
    std::string model_name;

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// Index of the largest score; ties go to the lowest index.
int argmax_lowest(std::span<const double> scores);

/// Checks the label is in the scheme and, when scores are present, that they
/// are non-negative, sum to 1 within 1e-6 and have the label as their argmax.
/// Throws BackendError describing the first violation.
void validate_prediction(const Prediction& p, const LabelScheme& scheme);

/// `{"id":..,"label":..,"label_name":..,"model":..,"scores":[..]}`; scores omitted when absent.
nlohmann::json prediction_to_json(const Prediction& p, const LabelScheme& scheme);
Prediction prediction_from_json(const nlohmann::json& j, const LabelScheme& scheme);

/// One JSON object per line, written atomically.
void write_predictions(const std::filesystem::path& path, std::span<const Prediction> predictions,
                       const LabelScheme& scheme);
std::vector<Prediction> read_predictions(const std::filesystem::path& path, const LabelScheme& scheme);

}  // namespace hatedet
