#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hatedet/classify.hpp"

namespace hatedet {

/// Deterministic, dependency-free classifier for tests and dry runs.
///
///  - hash: label = FNV-1a(text, seed) mod |labels|; no scores.
///  - memorize: exact-text lookup learned from the train set (majority label
///    per text, lowest code on ties); unseen text falls back to hash.
///  - constant: always the configured label.
///
/// memorize and constant emit one-hot scores.
class StubBackend final : public ClassifierBackend {
public:
    enum class Mode { Hash, Memorize, Constant };

    explicit StubBackend(Mode mode = Mode::Memorize, int constant_label = 0)
        : mode_(mode), constant_(constant_label) {}

    static Mode parse_mode(std::string_view name);

    [[nodiscard]] std::string name() const override { return "stub"; }
    ModelHandle fit(const ModelConfig& config, const Dataset& train_set, const EpochSink& on_epoch) override;
    std::vector<Prediction> predict(const ModelHandle& model, std::span<const Instance> instances) override;

private:
    Mode mode_;
    int constant_;
};

/// Softmax regression over hashed unigram and bigram features, trained by
/// mini-batch SGD under the model config (learning rate, batch size, epochs,
/// seed, token cap). A CPU-only stand-in for encoder fine-tuning.
class LinearBackend final : public ClassifierBackend {
public:
    explicit LinearBackend(int hash_bits = 18) : hash_bits_(hash_bits) {}

    [[nodiscard]] std::string name() const override { return "linear"; }
    ModelHandle fit(const ModelConfig& config, const Dataset& train_set, const EpochSink& on_epoch) override;
    std::vector<Prediction> predict(const ModelHandle& model, std::span<const Instance> instances) override;

    /// Lower-cased alphanumeric tokens (UTF-8 bytes count as word characters).
    static std::vector<std::string> tokenize(std::string_view text, std::size_t max_tokens);

private:
    int hash_bits_;
};

/// Delegates training and inference to an external command, typically a
/// transformer fine-tuning script. Protocol (all files JSON):
///
///   <command...> train <request.json>
///     request: {config, labels, train:[{id,text,label}], output_dir}
///     the command writes <output_dir>/epochs.jsonl with one
///     {"epoch":n,"loss":x|null,"checkpoint":"<path>"} line per epoch.
///
///   <command...> predict <request.json>
///     request: {config, labels, checkpoint, instances:[{id,text}], output}
///     the command writes <output> as JSONL {"id":..,"scores":[..]} or
///     {"id":..,"label":n}, one line per instance in request order.
class ExternalBackend final : public ClassifierBackend {
public:
    ExternalBackend(std::vector<std::string> command, std::filesystem::path work_dir)
        : command_(std::move(command)), work_dir_(std::move(work_dir)) {}

    [[nodiscard]] std::string name() const override { return "external"; }
    ModelHandle fit(const ModelConfig& config, const Dataset& train_set, const EpochSink& on_epoch) override;
    std::vector<Prediction> predict(const ModelHandle& model, std::span<const Instance> instances) override;

private:
    std::vector<std::string> command_;
    std::filesystem::path work_dir_;
};

}  // namespace hatedet
