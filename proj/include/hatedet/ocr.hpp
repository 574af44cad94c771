#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hatedet/concurrency.hpp"
#include "hatedet/corpus.hpp"
#include "hatedet/kv_store.hpp"

namespace hatedet {

/// Raw provider output: text blocks in reading order.
struct Recognition {
    std::vector<std::string> blocks;
    std::optional<double> confidence;
};

class OcrProvider {
public:
    virtual ~OcrProvider() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    /// Throws ProviderError on failure. Must be safe to call concurrently.
    virtual Recognition recognize(std::span<const std::uint8_t> image) = 0;
};

struct OcrResult {
    std::string instance_id;
    std::string text;
    std::optional<double> confidence;  // in [0,1] when present
    std::string provider;
    std::string content_hash;
};

void to_json(nlohmann::json& j, const OcrResult& r);
void from_json(const nlohmann::json& j, OcrResult& r);

enum class UnreadablePolicy { Skip, Fail };

struct OcrOptions {
    RetryPolicy retry{};
    std::size_t max_in_flight = 4;
    UnreadablePolicy on_unreadable = UnreadablePolicy::Fail;
    /// Relative image paths are resolved against this directory.
    std::filesystem::path image_root{};
};

struct OcrOutcome {
    Dataset dataset;
    std::vector<OcrResult> results;        // one per instance that needed text, dataset order
    std::vector<std::string> needs_review;  // ids whose OCR text came back empty
    std::vector<std::string> unreadable;    // ids skipped under UnreadablePolicy::Skip
    std::size_t provider_calls = 0;
};

/// Cache key for one image under one provider.
std::string ocr_cache_key(const std::string& provider_name, const std::string& content_hash);

/// Fills `text` for every instance that lacks it. Instances that already have
/// text are left alone. Identical images are sent to the provider once; the
/// cache (keyed by content hash and provider name) short-circuits repeats
/// within and across runs.
OcrOutcome extract_text(const Dataset& dataset, OcrProvider& provider, KeyValueStore& cache,
                        const OcrOptions& options = {});

/// Test and fixture provider. Looks the image up by content hash in a table;
/// unknown images are decoded as UTF-8 text when echo is enabled and rejected
/// otherwise.
class MockOcrProvider final : public OcrProvider {
public:
    explicit MockOcrProvider(std::map<std::string, std::string> table_by_hash = {}, bool echo_unknown = true)
        : table_(std::move(table_by_hash)), echo_(echo_unknown) {}

    /// Reads a JSON object mapping content hash to text.
    static MockOcrProvider from_table_file(const std::filesystem::path& path, bool echo_unknown);

    [[nodiscard]] std::string name() const override { return "mock"; }
    Recognition recognize(std::span<const std::uint8_t> image) override;

    /// The next `n` calls throw ProviderError.
    void fail_next(int n) { failures_ = n; }
    [[nodiscard]] std::size_t calls() const noexcept { return calls_.load(); }

private:
    std::map<std::string, std::string> table_;
    bool echo_;
    std::atomic<int> failures_{0};
    std::atomic<std::size_t> calls_{0};
};

/// Runs a local OCR command such as `tesseract {image} stdout`; `{image}` is
/// replaced by a temp file holding the image bytes. Each output line is one block.
class CommandOcrProvider final : public OcrProvider {
public:
    explicit CommandOcrProvider(std::vector<std::string> argv_template = {"tesseract", "{image}", "stdout"})
        : argv_(std::move(argv_template)) {}

    [[nodiscard]] std::string name() const override { return "local"; }
    Recognition recognize(std::span<const std::uint8_t> image) override;

private:
    std::vector<std::string> argv_;
};

}  // namespace hatedet
