#pragma once

#include <atomic>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hatedet/concurrency.hpp"
#include "hatedet/corpus.hpp"
#include "hatedet/kv_store.hpp"

namespace hatedet {

/// Pivot sequence for one back-translation route. Translation starts in the
/// source language, visits each pivot in turn and ends back in the source
/// language, which must be the last element.
struct ChainSpec {
    std::string tag;
    std::vector<std::string> pivots;

    /// Throws SpecError unless pivots.size() >= 2 and pivots.back() == source_language.
    void validate(const std::string& source_language = "en") const;
};

/// Throws SpecError on an invalid chain or duplicate tags.
void validate_chains(const std::vector<ChainSpec>& chains, const std::string& source_language = "en");

/// xh -> tw -> en and lo -> ps -> yo -> en.
std::vector<ChainSpec> default_chains();

class TranslationProvider {
public:
    virtual ~TranslationProvider() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    /// Throws ProviderError on failure. Must be safe to call concurrently.
    virtual std::string translate(const std::string& text, const std::string& from, const std::string& to) = 0;
};

struct BackTranslateOptions {
    std::string source_language = "en";
    RetryPolicy retry{};
    /// Per-hop cache; may be null.
    KeyValueStore* cache = nullptr;
};

/// Translates hop by hop along the chain and returns the final text. Each hop
/// result is cached by (hash of the hop input, from, to).
std::string back_translate(const std::string& text, const ChainSpec& chain, TranslationProvider& provider,
                           const BackTranslateOptions& options = {});

struct AugmentOptions {
    BackTranslateOptions translation{};
    /// Only train instances with these labels are augmented. Empty set means all.
    std::set<int> target_labels;
    /// Drop copies whose text equals the parent text.
    bool drop_exact_duplicates = false;
    std::size_t max_in_flight = 4;
};

struct AugmentSkip {
    std::string parent_id;
    std::string chain_tag;
    std::string reason;
};

struct AugmentOutcome {
    Dataset augmented;  // origin=augmented train instances only
    std::vector<AugmentSkip> skipped;
    std::size_t duplicates_dropped = 0;
};

/// One copy per (eligible train instance, chain), ordered by parent id then
/// chain tag. Provider failures after retries skip that copy.
AugmentOutcome augment_dataset(const Dataset& dataset, const std::vector<ChainSpec>& chains,
                               TranslationProvider& provider, const AugmentOptions& options = {});

class IdentityTranslator final : public TranslationProvider {
public:
    [[nodiscard]] std::string name() const override { return "identity"; }
    std::string translate(const std::string& text, const std::string&, const std::string&) override { return text; }
};

/// Mock driven by a table keyed on the "from>to" language pair. A pair maps
/// either to a constant output or to a per-input lookup; pairs absent from the
/// table pass text through unchanged unless `strict` is set.
class TableTranslator final : public TranslationProvider {
public:
    struct Entry {
        std::optional<std::string> constant;
        std::map<std::string, std::string> by_text;
    };

    explicit TableTranslator(std::map<std::string, Entry> table = {}, bool strict = false)
        : table_(std::move(table)), strict_(strict) {}

    /// Reads `{"en>xh": "A"}` or `{"en>xh": {"hello": "..."}}` style JSON.
    static TableTranslator from_json_file(const std::string& path, bool strict);

    void set(const std::string& from, const std::string& to, std::string constant);
    /// Texts equal to `text` raise ProviderError on every call.
    void fail_on(std::string text) { failing_.insert(std::move(text)); }

    [[nodiscard]] std::string name() const override { return "table"; }
    std::string translate(const std::string& text, const std::string& from, const std::string& to) override;
    [[nodiscard]] std::size_t calls() const noexcept { return calls_.load(); }

private:
    std::map<std::string, Entry> table_;
    std::set<std::string> failing_;
    bool strict_;
    std::atomic<std::size_t> calls_{0};
};

}  // namespace hatedet
