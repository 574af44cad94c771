#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hatedet/augment.hpp"
#include "hatedet/classify.hpp"
#include "hatedet/corpus.hpp"

namespace hatedet {

/// Relative paths are resolved against the directory holding the config file.
struct PathsConfig {
    std::filesystem::path manifest;
    std::filesystem::path image_root;  // defaults to the manifest's directory
    std::filesystem::path work_dir = "work";
    std::filesystem::path cache_dir = "cache";
    std::filesystem::path models_dir = "models";
    std::filesystem::path reports_dir = "reports";
};

struct OcrConfig {
    std::string provider = "mock";  // mock | local | cloud
    std::filesystem::path mock_table;
    bool echo = true;
    std::vector<std::string> command{"tesseract", "{image}", "stdout"};
    std::string endpoint = "https://vision.googleapis.com";
    std::string api_key_env = "GOOGLE_API_KEY";
    std::size_t max_in_flight = 4;
    int retries = 3;
    int backoff_ms = 200;
    std::string on_unreadable = "fail";  // fail | skip
};

struct AugmentConfig {
    std::optional<bool> enabled;      // unset: on for task B only
    std::string provider = "identity";  // identity | mock | cloud
    std::filesystem::path mock_table;
    std::string endpoint = "https://translation.googleapis.com";
    std::string api_key_env = "GOOGLE_API_KEY";
    std::string source_language = "en";
    std::vector<std::string> target_labels;  // empty: every train instance
    bool drop_duplicates = false;
    std::size_t max_in_flight = 4;
    int retries = 3;
    int backoff_ms = 200;
};

struct ModelEntry {
    ModelConfig config;
    std::string backend = "stub";  // stub | linear | external
    std::string stub_mode = "memorize";
    std::string constant_label;
    int hash_bits = 18;
    bool explicit_seed = false;
    std::vector<std::string> command;  // external backend program and leading arguments
};

struct EnsembleConfig {
    bool enabled = true;
    std::string rule = "majority";
    std::string tie_break = "member_priority";
    std::vector<std::string> members;  // empty: every model (plus the llm when enabled), best eval F1 first
};

struct LlmConfig {
    bool enabled = false;
    std::string provider = "mock";  // mock | openai
    std::string mode = "zero_shot";
    std::size_t exemplars_per_class = 3;
    std::string fallback;  // empty: most frequent training label
    double requests_per_minute = 0.0;
    std::size_t max_requests = 0;
    std::size_t max_in_flight = 4;
    int retries = 3;
    int backoff_ms = 200;
    int epochs = 4;
    std::string base_model = "gpt-3.5-turbo";
    std::string endpoint = "https://api.openai.com";
    std::string api_key_env = "OPENAI_API_KEY";
    std::string mock_label;  // empty: label picked by hashing the prompt
    std::string task_name;
    std::string task_definition;
};

struct PipelineConfig {
    Task task = Task::A;
    std::uint64_t seed = 42;
    std::string run_name = "run";
    PathsConfig paths;
    OcrConfig ocr;
    AugmentConfig augment;
    std::vector<ChainSpec> chains;  // empty in the file: the two default chains
    std::vector<ModelEntry> models;
    EnsembleConfig ensemble;
    LlmConfig llm;

    [[nodiscard]] LabelScheme scheme() const { return LabelScheme::for_task(task); }
    [[nodiscard]] bool augment_enabled() const { return augment.enabled.value_or(task == Task::B); }

    /// Replaces the global seed and every model seed not set explicitly.
    void override_seed(std::uint64_t new_seed);

    /// Throws ConfigError on missing models, duplicate model names, bad enum
    /// names or invalid chains, PreconditionError on invalid hyperparameters.
    void validate() const;
};

/// Parses a TOML config. Throws MissingFile or ConfigError.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& toml_text, const std::filesystem::path& base_dir);

/// Canonical JSON view of one section ("ocr", "augment", "chains", "models",
/// "ensemble", "llm"), used for stage keys. File paths are left out; stages
/// key on file contents instead.
nlohmann::json section_json(const PipelineConfig& config, const std::string& section);

}  // namespace hatedet
