#include "hatedet/ocr.hpp"

#include <fstream>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "hatedet/errors.hpp"
#include "hatedet/process.hpp"
#include "hatedet/text_util.hpp"

namespace hatedet {

void to_json(nlohmann::json& j, const OcrResult& r) {
    j = nlohmann::json{{"instance_id", r.instance_id},
                       {"text", r.text},
                       {"provider", r.provider},
                       {"content_hash", r.content_hash}};
    j["confidence"] = r.confidence ? nlohmann::json(*r.confidence) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, OcrResult& r) {
    r.instance_id = j.value("instance_id", std::string());
    r.text = j.at("text").get<std::string>();
    r.provider = j.at("provider").get<std::string>();
    r.content_hash = j.at("content_hash").get<std::string>();
    if (j.contains("confidence") && !j["confidence"].is_null()) r.confidence = j["confidence"].get<double>();
    else r.confidence.reset();
}

std::string ocr_cache_key(const std::string& provider_name, const std::string& content_hash) {
    return provider_name + ":" + content_hash;
}

namespace {

struct Pending {
    std::size_t index;  // into dataset instances
    std::string hash;
    std::string key;
    bool first;  // first occurrence of this key in the pass
};

OcrResult recognize_one(OcrProvider& provider, const std::vector<std::uint8_t>& bytes, const std::string& hash,
                        const RetryPolicy& retry) {
    Recognition rec = with_retry(retry, [&] { return provider.recognize(bytes); });
    if (rec.confidence && !(*rec.confidence >= 0.0 && *rec.confidence <= 1.0)) {
        throw ProviderError("provider " + provider.name() + " reported confidence outside [0,1]");
    }
    OcrResult r;
    r.text = join_blocks(rec.blocks);
    r.confidence = rec.confidence;
    r.provider = provider.name();
    r.content_hash = hash;
    return r;
}

}  // namespace

OcrOutcome extract_text(const Dataset& dataset, OcrProvider& provider, KeyValueStore& cache,
                        const OcrOptions& options) {
    std::vector<Instance> instances = dataset.instances();
    OcrOutcome outcome{Dataset(dataset.scheme(), {}), {}, {}, {}, 0};

    // Read images and group by cache key, keeping dataset order.
    std::vector<Pending> pending;
    std::unordered_map<std::string, std::vector<std::uint8_t>> bytes_by_key;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const Instance& inst = instances[i];
        if (!inst.text.empty()) continue;
        std::filesystem::path path = inst.image_path;
        if (path.is_relative() && !options.image_root.empty()) path = options.image_root / path;
        std::vector<std::uint8_t> bytes;
        try {
            if (inst.image_path.empty()) throw MissingFile("no image_path");
            bytes = read_bytes(path);
        } catch (const MissingFile&) {
            if (options.on_unreadable == UnreadablePolicy::Fail) {
                throw ImageUnreadable("instance '" + inst.id + "': cannot read image '" + path.string() + "'");
            }
            outcome.unreadable.push_back(inst.id);
            continue;
        }
        std::string hash = sha256_hex(bytes);
        std::string key = ocr_cache_key(provider.name(), hash);
        const bool first = !bytes_by_key.contains(key);
        if (first) bytes_by_key.emplace(key, std::move(bytes));
        pending.push_back({i, std::move(hash), std::move(key), first});
    }

    // First occurrences consult the cache; misses go to the provider.
    std::unordered_map<std::string, OcrResult> resolved;
    std::vector<const Pending*> to_call;
    for (const Pending& p : pending) {
        if (!p.first) continue;
        if (auto hit = cache.lookup(p.key)) {
            resolved.emplace(p.key, hit->get<OcrResult>());
        } else {
            to_call.push_back(&p);
        }
    }

    std::vector<OcrResult> fresh(to_call.size());
    bounded_parallel_for(to_call.size(), options.max_in_flight, [&](std::size_t n) {
        const Pending& p = *to_call[n];
        fresh[n] = recognize_one(provider, bytes_by_key.at(p.key), p.hash, options.retry);
        cache.put(p.key, fresh[n]);
    });
    outcome.provider_calls = to_call.size();
    for (std::size_t n = 0; n < to_call.size(); ++n) resolved.emplace(to_call[n]->key, std::move(fresh[n]));

    // Later occurrences of an image now resolve from the cache.
    for (const Pending& p : pending) {
        if (!p.first) {
            if (auto hit = cache.lookup(p.key)) resolved.insert_or_assign(p.key, hit->get<OcrResult>());
        }
        OcrResult r = resolved.at(p.key);
        Instance& inst = instances[p.index];
        r.instance_id = inst.id;
        inst.text = r.text;
        if (r.text.empty()) outcome.needs_review.push_back(inst.id);
        outcome.results.push_back(std::move(r));
    }

    outcome.dataset = Dataset(dataset.scheme(), std::move(instances));
    return outcome;
}

MockOcrProvider MockOcrProvider::from_table_file(const std::filesystem::path& path, bool echo_unknown) {
    const auto j = nlohmann::json::parse(read_file(path));
    if (!j.is_object()) throw ConfigError("mock OCR table " + path.string() + " must be a JSON object");
    return MockOcrProvider(j.get<std::map<std::string, std::string>>(), echo_unknown);
}

Recognition MockOcrProvider::recognize(std::span<const std::uint8_t> image) {
    ++calls_;
    if (failures_.load() > 0 && failures_-- > 0) throw ProviderError("mock OCR failure");
    const std::string hash = sha256_hex(image);
    if (auto it = table_.find(hash); it != table_.end()) return {{it->second}, 1.0};
    if (!echo_) throw ProviderError("mock OCR has no entry for image " + hash);
    return {{std::string(image.begin(), image.end())}, std::nullopt};
}

Recognition CommandOcrProvider::recognize(std::span<const std::uint8_t> image) {
    TempDir tmp("hatedet-ocr");
    const auto file = tmp.path() / "image";
    {
        std::ofstream out(file, std::ios::binary);
        out.write(reinterpret_cast<const char*>(image.data()), static_cast<std::streamsize>(image.size()));
    }
    std::vector<std::string> argv = argv_;
    for (auto& a : argv) {
        if (auto pos = a.find("{image}"); pos != std::string::npos) a.replace(pos, 7, file.string());
    }
    const CommandResult res = run_command(argv);
    if (res.exit_code != 0) {
        throw ProviderError("OCR command '" + argv.front() + "' exited with " + std::to_string(res.exit_code));
    }
    Recognition rec;
    std::istringstream lines(res.output);
    for (std::string line; std::getline(lines, line);) rec.blocks.push_back(line);
    return rec;
}

}  // namespace hatedet
