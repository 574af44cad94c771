#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hatedet/corpus.hpp"
#include "hatedet/prediction.hpp"

namespace hatedet {

/// Fine-tuning hyperparameters. Defaults follow the fixed regime used for all
/// three encoders: lr 1e-5, batch 8/8, 5 epochs.
struct ModelConfig {
    std::string name = "model";
    std::string backbone = "xlm-roberta-base";
    double learning_rate = 1e-5;
    int train_batch_size = 8;
    int test_batch_size = 8;
    int epochs = 5;
    std::uint64_t seed = 42;
    int max_sequence_length = 128;

    /// Throws PreconditionError on any non-positive size, rate or epoch count.
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// Opaque trained model: the backend that produced it plus backend-owned state.
struct ModelHandle {
    std::string model_name;
    std::string backend;
    Task task = Task::A;
    ModelConfig config;
    nlohmann::json state;

    friend bool operator==(const ModelHandle&, const ModelHandle&) = default;
};

void to_json(nlohmann::json& j, const ModelHandle& h);
void from_json(const nlohmann::json& j, ModelHandle& h);

struct EpochSnapshot {
    int epoch = 0;  // 1-based
    std::optional<double> loss;
    ModelHandle handle;
};

using EpochSink = std::function<void(const EpochSnapshot&)>;

/// A trainable text classifier. `fit` reports one snapshot per epoch through
/// the sink; `predict` returns exactly one prediction per instance, in order.
class ClassifierBackend {
public:
    virtual ~ClassifierBackend() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    virtual ModelHandle fit(const ModelConfig& config, const Dataset& train_set, const EpochSink& on_epoch) = 0;
    virtual std::vector<Prediction> predict(const ModelHandle& model, std::span<const Instance> instances) = 0;
};

struct EpochRecord {
    int epoch = 0;
    std::optional<double> loss;
    std::optional<double> eval_macro_f1;
    std::optional<double> eval_weighted_f1;
};

struct TrainingSummary {
    std::string model_name;
    std::string backend;
    std::string backbone;
    std::size_t train_size = 0;
    std::size_t eval_size = 0;
    std::size_t excluded_empty_text = 0;
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
};

void to_json(nlohmann::json& j, const TrainingSummary& s);
void from_json(const nlohmann::json& j, TrainingSummary& s);

struct TrainResult {
    ModelHandle handle;
    TrainingSummary summary;
};

/// Trains on the labeled, non-empty-text instances of `train_set` and keeps
/// the epoch snapshot with the best eval macro-F1 (earliest on ties; the last
/// epoch when the eval set is empty).
TrainResult train(const ModelConfig& config, const Dataset& train_set, const Dataset& eval_set,
                  ClassifierBackend& backend);

/// Runs the backend and checks its output: one valid prediction per instance,
/// same ids, same order. Instances with empty text raise EmptyText.
std::vector<Prediction> predict(const ModelHandle& model, std::span<const Instance> instances,
                                ClassifierBackend& backend);

/// Writes `handle.json` and `summary.json` into `dir`.
void save_model(const TrainResult& result, const std::filesystem::path& dir);
ModelHandle load_handle(const std::filesystem::path& dir);
TrainingSummary load_summary(const std::filesystem::path& dir);

}  // namespace hatedet
