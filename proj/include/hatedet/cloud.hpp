#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "hatedet/augment.hpp"
#include "hatedet/ocr.hpp"
#include "hatedet/prompt.hpp"

namespace hatedet {

struct HttpResponse {
    int status = 0;
    std::string body;
};

using HttpHeaders = std::map<std::string, std::string>;

/// Minimal HTTP client surface the cloud adapters need; swapped for a fake in tests.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const std::string& path, const std::string& body, const std::string& content_type,
                              const HttpHeaders& headers) = 0;
    virtual HttpResponse get(const std::string& path, const HttpHeaders& headers) = 0;
};

/// cpp-httplib client bound to one scheme://host[:port] base URL.
std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   std::chrono::seconds timeout = std::chrono::seconds(60));

/// Reads an API key from the environment; throws ConfigError when unset.
std::string api_key_from_env(const std::string& variable);

/// Google Cloud Vision TEXT_DETECTION. Each line of the full-text annotation
/// becomes one block; confidence is the mean page confidence when reported.
class CloudVisionOcr final : public OcrProvider {
public:
    CloudVisionOcr(std::shared_ptr<HttpTransport> transport, std::string api_key)
        : http_(std::move(transport)), key_(std::move(api_key)) {}

    [[nodiscard]] std::string name() const override { return "cloud"; }
    Recognition recognize(std::span<const std::uint8_t> image) override;

private:
    std::shared_ptr<HttpTransport> http_;
    std::string key_;
};

/// Google Cloud Translation v2.
class CloudTranslator final : public TranslationProvider {
public:
    CloudTranslator(std::shared_ptr<HttpTransport> transport, std::string api_key)
        : http_(std::move(transport)), key_(std::move(api_key)) {}

    [[nodiscard]] std::string name() const override { return "cloud"; }
    std::string translate(const std::string& text, const std::string& from, const std::string& to) override;

private:
    std::shared_ptr<HttpTransport> http_;
    std::string key_;
};

/// OpenAI chat completions and fine-tuning jobs. Fine-tuning uploads the
/// records as JSONL files, creates a job with only `n_epochs` set and polls
/// until the job reports a fine-tuned model id.
class OpenAiProvider final : public LlmProvider {
public:
    struct Options {
        std::string base_model = "gpt-3.5-turbo";
        std::chrono::milliseconds poll_interval{std::chrono::seconds(30)};
        int max_polls = 2880;
        double temperature = 0.0;
    };

    OpenAiProvider(std::shared_ptr<HttpTransport> transport, std::string api_key, Options options)
        : http_(std::move(transport)), key_(std::move(api_key)), options_(std::move(options)) {}

    [[nodiscard]] std::string name() const override { return "openai"; }
    std::string complete(const std::string& prompt) override;
    std::string complete_with(const std::string& model_id, const std::string& prompt) override;
    std::string finetune(const std::vector<nlohmann::json>& training, const std::vector<nlohmann::json>& validation,
                         int epochs) override;

private:
    nlohmann::json call(const std::string& path, const nlohmann::json& body);
    std::string upload(const std::vector<nlohmann::json>& records, const std::string& filename);

    std::shared_ptr<HttpTransport> http_;
    std::string key_;
    Options options_;
};

}  // namespace hatedet
