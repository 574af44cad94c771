#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hatedet/concurrency.hpp"
#include "hatedet/corpus.hpp"
#include "hatedet/prediction.hpp"

namespace hatedet {

enum class PromptMode { ZeroShot, FewShot, Finetuned };

std::string_view to_string(PromptMode mode);
PromptMode parse_prompt_mode(std::string_view name);

struct Exemplar {
    std::string text;
    std::string label;

    friend bool operator==(const Exemplar&, const Exemplar&) = default;
};

struct PromptSpec {
    std::string task_name;
    std::string task_definition;
    std::vector<std::string> labels;
    PromptMode mode = PromptMode::ZeroShot;
    std::vector<Exemplar> exemplars;  // few-shot only

    /// Labels must equal the scheme's names (same order); exemplars must be
    /// present exactly when mode is few-shot. Throws SpecError.
    void validate(const LabelScheme& scheme) const;
};

/// Default task name and a neutral definition for each sub-task.
PromptSpec default_prompt_spec(Task task, PromptMode mode = PromptMode::ZeroShot);

/// Up to `per_class` exemplars per label from the labeled, non-empty train
/// instances, shuffled with `seed`; emitted grouped by label code.
std::vector<Exemplar> sample_exemplars(const Dataset& train, std::size_t per_class, std::uint64_t seed);

/// Role block, definition block, optional exemplar lines, task block. The
/// input text is the last line, so distinct texts give distinct prompts.
std::string build_prompt(const PromptSpec& spec, const std::string& text);

/// `<label> NAME <\label>`, the tagged answer format requested by the prompt.
std::string wrap_label(const std::string& name);

/// First `<label>` ... closer pair (closer is `<\label>` or `</label>`),
/// trimmed and matched case-insensitively. Throws ParseError when no pair is
/// found and UnknownLabel when the content is not a scheme name.
int parse_label(const std::string& response, const LabelScheme& scheme);

class LlmProvider {
public:
    virtual ~LlmProvider() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    virtual std::string complete(const std::string& prompt) = 0;
    virtual std::string complete_with(const std::string& model_id, const std::string& prompt) = 0;
    /// Records are chat-format JSON objects; returns the fine-tuned model id.
    virtual std::string finetune(const std::vector<nlohmann::json>& training, const std::vector<nlohmann::json>& validation,
                                 int epochs) = 0;
};

/// One chat-format fine-tuning record: the built prompt as the user turn and
/// the tagged gold label as the assistant turn.
nlohmann::json finetune_record(const PromptSpec& spec, const Instance& instance, const LabelScheme& scheme);

/// Serializes train (and eval, as validation) records and submits them.
/// Every instance must be labeled and have text.
std::string submit_finetune(const Dataset& train_set, const Dataset& eval_set, LlmProvider& provider,
                            const PromptSpec& spec, int epochs = 4);

struct LlmRunOptions {
    RetryPolicy retry{};
    std::size_t max_in_flight = 4;
    double requests_per_minute = 0.0;  // 0 = unlimited
    std::size_t max_requests = 0;      // 0 = unlimited; exceeding aborts with BudgetExceeded
    /// Label used when a response cannot be parsed.
    int fallback_label = 0;
    /// Transcript JSONL path; empty disables it.
    std::filesystem::path transcript{};
};

struct LlmTranscriptEntry {
    std::string instance_id;
    std::string prompt;
    std::string response;
    int label = 0;
    std::optional<std::string> error;  // "ParseError: ..." or "UnknownLabel: ..."
};

struct LlmRun {
    std::vector<Prediction> predictions;
    std::vector<LlmTranscriptEntry> transcript;
    std::size_t parse_failures = 0;
};

/// Model name recorded on predictions, e.g. "llm-zero_shot".
std::string llm_model_name(PromptMode mode);

/// Most frequent label among labeled train instances, lowest code on ties.
int majority_label(const Dataset& train);

/// One prediction per instance even when responses fail to parse: those get
/// `fallback_label` and a logged error. Fine-tuned mode requires `model_id`.
LlmRun run_llm(const Dataset& split, const PromptSpec& spec, LlmProvider& provider,
               const std::optional<std::string>& model_id, const LlmRunOptions& options);

/// Scripted provider for tests and dry runs. The responder sees the prompt and
/// returns the response; fine-tuning records are kept for inspection.
class MockLlmProvider final : public LlmProvider {
public:
    using Responder = std::function<std::string(const std::string& prompt)>;

    explicit MockLlmProvider(Responder responder) : responder_(std::move(responder)) {}

    /// Always answers `<label> NAME <\label>`.
    static MockLlmProvider constant(const std::string& label_name);

    [[nodiscard]] std::string name() const override { return "mock"; }
    std::string complete(const std::string& prompt) override;
    std::string complete_with(const std::string& model_id, const std::string& prompt) override;
    std::string finetune(const std::vector<nlohmann::json>& training, const std::vector<nlohmann::json>& validation,
                         int epochs) override;

    void fail_next(int n) { failures_ = n; }
    [[nodiscard]] std::size_t calls() const noexcept { return calls_.load(); }
    [[nodiscard]] const std::vector<nlohmann::json>& training_records() const noexcept { return training_; }
    [[nodiscard]] const std::vector<nlohmann::json>& validation_records() const noexcept { return validation_; }
    [[nodiscard]] int finetune_epochs() const noexcept { return epochs_; }

private:
    Responder responder_;
    std::atomic<int> failures_{0};
    std::atomic<std::size_t> calls_{0};
    std::mutex mutex_;
    std::vector<nlohmann::json> training_;
    std::vector<nlohmann::json> validation_;
    int epochs_ = 0;
};

}  // namespace hatedet
