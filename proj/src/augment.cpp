#include "hatedet/augment.hpp"

#include <algorithm>
#include <mutex>
#include <set>

#include <json.hpp>

#include "hatedet/errors.hpp"
#include "hatedet/text_util.hpp"

namespace hatedet {

void ChainSpec::validate(const std::string& source_language) const {
    if (tag.empty()) throw SpecError("chain with empty tag");
    if (tag.find('#') != std::string::npos) throw SpecError("chain tag '" + tag + "' must not contain '#'");
    if (pivots.size() < 2) throw SpecError("chain '" + tag + "' needs at least one pivot before the source language");
    if (pivots.back() != source_language) {
        throw SpecError("chain '" + tag + "' must end in the source language '" + source_language + "'");
    }
    for (const auto& p : pivots) {
        if (p.empty()) throw SpecError("chain '" + tag + "' has an empty language code");
    }
}

void validate_chains(const std::vector<ChainSpec>& chains, const std::string& source_language) {
    std::set<std::string> tags;
    for (const auto& c : chains) {
        c.validate(source_language);
        if (!tags.insert(c.tag).second) throw SpecError("duplicate chain tag '" + c.tag + "'");
    }
}

std::vector<ChainSpec> default_chains() {
    return {{"xh-tw", {"xh", "tw", "en"}}, {"lo-ps-yo", {"lo", "ps", "yo", "en"}}};
}

std::string back_translate(const std::string& text, const ChainSpec& chain, TranslationProvider& provider,
                           const BackTranslateOptions& options) {
    if (trim(text).empty()) throw PreconditionError("back_translate needs non-empty text");
    chain.validate(options.source_language);

    std::string current = text;
    std::string from = options.source_language;
    for (const std::string& to : chain.pivots) {
        const std::string key = provider.name() + ":" + sha256_hex(current) + ":" + from + ">" + to;
        std::optional<nlohmann::json> cached;
        if (options.cache) cached = options.cache->lookup(key);
        std::string next;
        if (cached) {
            next = cached->get<std::string>();
        } else {
            next = with_retry(options.retry, [&] { return provider.translate(current, from, to); });
            if (trim(next).empty()) {
                throw ProviderError("provider " + provider.name() + " returned empty text for " + from + ">" + to);
            }
            if (options.cache) options.cache->put(key, next);
        }
        current = std::move(next);
        from = to;
    }
    return current;
}

AugmentOutcome augment_dataset(const Dataset& dataset, const std::vector<ChainSpec>& chains,
                               TranslationProvider& provider, const AugmentOptions& options) {
    if (chains.empty()) throw PreconditionError("augment_dataset needs at least one chain");
    validate_chains(chains, options.translation.source_language);
    for (int code : options.target_labels) {
        if (!dataset.scheme().valid(code)) throw LabelError("target label code " + std::to_string(code) + " not in scheme");
    }

    std::vector<const Instance*> parents;
    for (const Instance& inst : dataset.instances()) {
        if (inst.split != Split::Train || inst.origin != Origin::Original) continue;
        if (!inst.label) throw UnlabeledInstance("train instance '" + inst.id + "' has no label");
        if (!options.target_labels.empty() && !options.target_labels.contains(*inst.label)) continue;
        parents.push_back(&inst);
    }
    std::sort(parents.begin(), parents.end(), [](const Instance* a, const Instance* b) { return a->id < b->id; });

    std::vector<const ChainSpec*> ordered_chains;
    for (const auto& c : chains) ordered_chains.push_back(&c);
    std::sort(ordered_chains.begin(), ordered_chains.end(),
              [](const ChainSpec* a, const ChainSpec* b) { return a->tag < b->tag; });

    const std::size_t jobs = parents.size() * ordered_chains.size();
    std::vector<std::optional<Instance>> copies(jobs);
    std::vector<std::optional<AugmentSkip>> skips(jobs);

    bounded_parallel_for(jobs, options.max_in_flight, [&](std::size_t j) {
        const Instance& parent = *parents[j / ordered_chains.size()];
        const ChainSpec& chain = *ordered_chains[j % ordered_chains.size()];
        if (trim(parent.text).empty()) {
            skips[j] = AugmentSkip{parent.id, chain.tag, "parent has no text"};
            return;
        }
        try {
            Instance copy = parent;
            copy.text = back_translate(parent.text, chain, provider, options.translation);
            copy.id = augmented_id(parent.id, chain.tag);
            copy.origin = Origin::Augmented;
            copy.split = Split::Train;
            copy.chain_tag = chain.tag;
            copies[j] = std::move(copy);
        } catch (const ProviderError& e) {
            skips[j] = AugmentSkip{parent.id, chain.tag, e.what()};
        }
    });

    AugmentOutcome outcome{Dataset(dataset.scheme(), {}), {}, 0};
    std::vector<Instance> out;
    out.reserve(jobs);
    for (std::size_t j = 0; j < jobs; ++j) {
        if (skips[j]) {
            outcome.skipped.push_back(std::move(*skips[j]));
            continue;
        }
        const Instance& parent = *parents[j / ordered_chains.size()];
        if (options.drop_exact_duplicates && copies[j]->text == parent.text) {
            ++outcome.duplicates_dropped;
            continue;
        }
        out.push_back(std::move(*copies[j]));
    }
    outcome.augmented = Dataset(dataset.scheme(), std::move(out));
    return outcome;
}

TableTranslator TableTranslator::from_json_file(const std::string& path, bool strict) {
    const auto j = nlohmann::json::parse(read_file(path));
    if (!j.is_object()) throw ConfigError("translation table " + path + " must be a JSON object");
    std::map<std::string, Entry> table;
    for (const auto& [pair, value] : j.items()) {
        Entry e;
        if (value.is_string()) e.constant = value.get<std::string>();
        else if (value.is_object()) e.by_text = value.get<std::map<std::string, std::string>>();
        else throw ConfigError("translation table entry '" + pair + "' must be a string or object");
        table.emplace(pair, std::move(e));
    }
    return TableTranslator(std::move(table), strict);
}

void TableTranslator::set(const std::string& from, const std::string& to, std::string constant) {
    table_[from + ">" + to].constant = std::move(constant);
}

std::string TableTranslator::translate(const std::string& text, const std::string& from, const std::string& to) {
    ++calls_;
    if (failing_.contains(text)) throw ProviderError("table translator refuses '" + text + "'");
    auto it = table_.find(from + ">" + to);
    if (it != table_.end()) {
        if (auto hit = it->second.by_text.find(text); hit != it->second.by_text.end()) return hit->second;
        if (it->second.constant) return *it->second.constant;
    }
    if (strict_) throw ProviderError("no translation for " + from + ">" + to);
    return text;
}

}  // namespace hatedet
