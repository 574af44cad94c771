#include "hatedet/config.hpp"

#include <set>
#include <sstream>

#include <toml.hpp>

#include "hatedet/backends.hpp"
#include "hatedet/ensemble.hpp"
#include "hatedet/errors.hpp"
#include "hatedet/prompt.hpp"
#include "hatedet/text_util.hpp"

namespace hatedet {

namespace {

namespace fs = std::filesystem;

class Table {
public:
    Table(const toml::table* t, std::string where) : t_(t), where_(std::move(where)) {}

    void allow(std::initializer_list<std::string_view> keys) const {
        if (!t_) return;
        const std::set<std::string_view> ok(keys);
        for (const auto& [k, v] : *t_) {
            if (!ok.contains(k.str())) throw ConfigError("unknown key '" + std::string(k.str()) + "' in " + where_);
        }
    }

    [[nodiscard]] bool has(std::string_view key) const { return t_ && t_->contains(key); }

    template <typename T>
    void get(std::string_view key, T& out) const {
        if (!has(key)) return;
        const toml::node& n = *t_->get(key);
        if constexpr (std::is_same_v<T, bool>) {
            out = require(n.value<bool>(), key, "a boolean");
        } else if constexpr (std::is_same_v<T, std::string>) {
            out = require(n.value<std::string>(), key, "a string");
        } else if constexpr (std::is_same_v<T, double>) {
            out = require(n.value<double>(), key, "a number");
        } else if constexpr (std::is_integral_v<T>) {
            const auto v = require(n.value<std::int64_t>(), key, "an integer");
            if (v < 0 && std::is_unsigned_v<T>) throw ConfigError(path(key) + " must not be negative");
            out = static_cast<T>(v);
        } else if constexpr (std::is_same_v<T, fs::path>) {
            out = require(n.value<std::string>(), key, "a string");
        } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
            const auto* arr = n.as_array();
            if (!arr) throw ConfigError(path(key) + " must be an array of strings");
            out.clear();
            for (const auto& e : *arr) out.push_back(require(e.value<std::string>(), key, "an array of strings"));
        } else {
            static_assert(sizeof(T) == 0, "unsupported config type");
        }
    }

    [[nodiscard]] Table sub(std::string_view key) const {
        if (!has(key)) return {nullptr, path(key)};
        const auto* t = t_->get(key)->as_table();
        if (!t) throw ConfigError(path(key) + " must be a table");
        return {t, path(key)};
    }

    [[nodiscard]] std::vector<Table> array_of_tables(std::string_view key) const {
        std::vector<Table> out;
        if (!has(key)) return out;
        const auto* arr = t_->get(key)->as_array();
        if (!arr) throw ConfigError(path(key) + " must be an array of tables ([[" + std::string(key) + "]])");
        for (std::size_t i = 0; i < arr->size(); ++i) {
            const auto* t = (*arr)[i].as_table();
            if (!t) throw ConfigError(path(key) + " must be an array of tables");
            out.emplace_back(t, path(key) + "[" + std::to_string(i) + "]");
        }
        return out;
    }

private:
    [[nodiscard]] std::string path(std::string_view key) const {
        return where_.empty() ? std::string(key) : where_ + "." + std::string(key);
    }

    template <typename V>
    V require(std::optional<V> v, std::string_view key, const char* what) const {
        if (!v) throw ConfigError(path(key) + " must be " + what);
        return *v;
    }

    const toml::table* t_;
    std::string where_;
};

fs::path resolve(const fs::path& base, const fs::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return (base / p).lexically_normal();
}

}  // namespace

void PipelineConfig::override_seed(std::uint64_t new_seed) {
    seed = new_seed;
    for (auto& m : models) {
        if (!m.explicit_seed) m.config.seed = new_seed;
    }
}

void PipelineConfig::validate() const {
    const LabelScheme s = scheme();
    if (paths.manifest.empty()) throw ConfigError("paths.manifest is required");
    if (models.empty()) throw ConfigError("at least one [[model]] is required");
    std::set<std::string> names;
    for (const auto& m : models) {
        if (m.config.name.empty() || m.config.name.find_first_of("/\\. ") != std::string::npos) {
            throw ConfigError("model name '" + m.config.name + "' must be non-empty without '/', '\\', '.' or spaces");
        }
        if (m.config.name == "ensemble" || m.config.name.rfind("llm-", 0) == 0) {
            throw ConfigError("model name '" + m.config.name + "' is reserved");
        }
        if (!names.insert(m.config.name).second) throw ConfigError("duplicate model name '" + m.config.name + "'");
        if (m.backend == "stub") {
            (void)StubBackend::parse_mode(m.stub_mode);
            if (!m.constant_label.empty()) {
                try {
                    (void)s.parse(m.constant_label);
                } catch (const Error& e) {
                    throw ConfigError(e.what());
                }
            }
        } else if (m.backend == "external") {
            if (m.command.empty()) throw ConfigError("model '" + m.config.name + "' uses the external backend without a command");
        } else if (m.backend != "linear") {
            throw ConfigError("unknown backend '" + m.backend + "' for model '" + m.config.name + "'");
        }
        m.config.validate();
    }
    if (ocr.provider != "mock" && ocr.provider != "local" && ocr.provider != "cloud") {
        throw ConfigError("unknown ocr provider '" + ocr.provider + "'");
    }
    if (ocr.on_unreadable != "fail" && ocr.on_unreadable != "skip") {
        throw ConfigError("ocr.on_unreadable must be 'fail' or 'skip'");
    }
    if (augment.provider != "identity" && augment.provider != "mock" && augment.provider != "cloud") {
        throw ConfigError("unknown augment provider '" + augment.provider + "'");
    }
    if (augment.provider == "mock" && augment.mock_table.empty()) {
        throw ConfigError("augment.provider = \"mock\" needs augment.mock_table");
    }
    try {
        validate_chains(chains, augment.source_language);
        for (const auto& l : augment.target_labels) (void)s.parse(l);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    (void)parse_vote_rule(ensemble.rule);
    (void)parse_tie_break(ensemble.tie_break);
    if (llm.provider != "mock" && llm.provider != "openai") throw ConfigError("unknown llm provider '" + llm.provider + "'");
    try {
        (void)parse_prompt_mode(llm.mode);
        if (!llm.fallback.empty()) (void)s.parse(llm.fallback);
        if (!llm.mock_label.empty()) (void)s.parse(llm.mock_label);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (llm.epochs < 1) throw ConfigError("llm.epochs must be at least 1");
}

PipelineConfig parse_config(const std::string& toml_text, const fs::path& base_dir) {
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "line " << e.source().begin.line << ": " << e.description();
        throw ConfigError(msg.str());
    }
    const Table top(&root, "");
    top.allow({"task", "seed", "run_name", "paths", "ocr", "augment", "chain", "model", "ensemble", "llm"});

    PipelineConfig c;
    std::string task = "A";
    top.get("task", task);
    c.task = parse_task(task);
    std::int64_t seed = 42;
    top.get("seed", seed);
    c.seed = static_cast<std::uint64_t>(seed);
    top.get("run_name", c.run_name);
    if (c.run_name.empty() || c.run_name.find_first_of("/\\") != std::string::npos) {
        throw ConfigError("run_name must be non-empty without path separators");
    }

    const Table paths = top.sub("paths");
    paths.allow({"manifest", "image_root", "work_dir", "cache_dir", "models_dir", "reports_dir"});
    paths.get("manifest", c.paths.manifest);
    paths.get("image_root", c.paths.image_root);
    paths.get("work_dir", c.paths.work_dir);
    paths.get("cache_dir", c.paths.cache_dir);
    paths.get("models_dir", c.paths.models_dir);
    paths.get("reports_dir", c.paths.reports_dir);
    c.paths.manifest = resolve(base_dir, c.paths.manifest);
    c.paths.image_root =
        c.paths.image_root.empty() ? c.paths.manifest.parent_path() : resolve(base_dir, c.paths.image_root);
    c.paths.work_dir = resolve(base_dir, c.paths.work_dir);
    c.paths.cache_dir = resolve(base_dir, c.paths.cache_dir);
    c.paths.models_dir = resolve(base_dir, c.paths.models_dir);
    c.paths.reports_dir = resolve(base_dir, c.paths.reports_dir);

    const Table ocr = top.sub("ocr");
    ocr.allow({"provider", "mock_table", "echo", "command", "endpoint", "api_key_env", "max_in_flight", "retries",
               "backoff_ms", "on_unreadable"});
    ocr.get("provider", c.ocr.provider);
    ocr.get("mock_table", c.ocr.mock_table);
    c.ocr.mock_table = resolve(base_dir, c.ocr.mock_table);
    ocr.get("echo", c.ocr.echo);
    ocr.get("command", c.ocr.command);
    ocr.get("endpoint", c.ocr.endpoint);
    ocr.get("api_key_env", c.ocr.api_key_env);
    ocr.get("max_in_flight", c.ocr.max_in_flight);
    ocr.get("retries", c.ocr.retries);
    ocr.get("backoff_ms", c.ocr.backoff_ms);
    ocr.get("on_unreadable", c.ocr.on_unreadable);

    const Table aug = top.sub("augment");
    aug.allow({"enabled", "provider", "mock_table", "endpoint", "api_key_env", "source_language", "target_labels",
               "drop_duplicates", "max_in_flight", "retries", "backoff_ms"});
    if (aug.has("enabled")) {
        bool enabled = false;
        aug.get("enabled", enabled);
        c.augment.enabled = enabled;
    }
    aug.get("provider", c.augment.provider);
    aug.get("mock_table", c.augment.mock_table);
    c.augment.mock_table = resolve(base_dir, c.augment.mock_table);
    aug.get("endpoint", c.augment.endpoint);
    aug.get("api_key_env", c.augment.api_key_env);
    aug.get("source_language", c.augment.source_language);
    aug.get("target_labels", c.augment.target_labels);
    aug.get("drop_duplicates", c.augment.drop_duplicates);
    aug.get("max_in_flight", c.augment.max_in_flight);
    aug.get("retries", c.augment.retries);
    aug.get("backoff_ms", c.augment.backoff_ms);

    for (const auto& t : top.array_of_tables("chain")) {
        t.allow({"tag", "pivots"});
        ChainSpec chain;
        t.get("tag", chain.tag);
        t.get("pivots", chain.pivots);
        c.chains.push_back(std::move(chain));
    }
    if (c.chains.empty()) c.chains = default_chains();

    for (const auto& t : top.array_of_tables("model")) {
        t.allow({"name", "backend", "backbone", "learning_rate", "train_batch_size", "test_batch_size", "epochs",
                 "seed", "max_sequence_length", "stub_mode", "constant_label", "hash_bits", "command"});
        ModelEntry m;
        m.config.seed = c.seed;
        t.get("name", m.config.name);
        t.get("backend", m.backend);
        t.get("backbone", m.config.backbone);
        t.get("learning_rate", m.config.learning_rate);
        t.get("train_batch_size", m.config.train_batch_size);
        t.get("test_batch_size", m.config.test_batch_size);
        t.get("epochs", m.config.epochs);
        if (t.has("seed")) {
            t.get("seed", m.config.seed);
            m.explicit_seed = true;
        }
        t.get("max_sequence_length", m.config.max_sequence_length);
        t.get("stub_mode", m.stub_mode);
        t.get("constant_label", m.constant_label);
        t.get("hash_bits", m.hash_bits);
        t.get("command", m.command);
        c.models.push_back(std::move(m));
    }

    const Table ens = top.sub("ensemble");
    ens.allow({"enabled", "rule", "tie_break", "members"});
    ens.get("enabled", c.ensemble.enabled);
    ens.get("rule", c.ensemble.rule);
    ens.get("tie_break", c.ensemble.tie_break);
    ens.get("members", c.ensemble.members);

    const Table llm = top.sub("llm");
    llm.allow({"enabled", "provider", "mode", "exemplars_per_class", "fallback", "requests_per_minute", "max_requests",
               "max_in_flight", "retries", "backoff_ms", "epochs", "base_model", "endpoint", "api_key_env",
               "mock_label", "task_name", "task_definition"});
    llm.get("enabled", c.llm.enabled);
    llm.get("provider", c.llm.provider);
    llm.get("mode", c.llm.mode);
    llm.get("exemplars_per_class", c.llm.exemplars_per_class);
    llm.get("fallback", c.llm.fallback);
    llm.get("requests_per_minute", c.llm.requests_per_minute);
    llm.get("max_requests", c.llm.max_requests);
    llm.get("max_in_flight", c.llm.max_in_flight);
    llm.get("retries", c.llm.retries);
    llm.get("backoff_ms", c.llm.backoff_ms);
    llm.get("epochs", c.llm.epochs);
    llm.get("base_model", c.llm.base_model);
    llm.get("endpoint", c.llm.endpoint);
    llm.get("api_key_env", c.llm.api_key_env);
    llm.get("mock_label", c.llm.mock_label);
    llm.get("task_name", c.llm.task_name);
    llm.get("task_definition", c.llm.task_definition);

    c.validate();
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    const std::string text = read_file(path);
    return parse_config(text, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

nlohmann::json section_json(const PipelineConfig& c, const std::string& section) {
    using nlohmann::json;
    if (section == "ocr") {
        return {{"provider", c.ocr.provider},
                {"echo", c.ocr.echo},
                {"command", c.ocr.command},
                {"endpoint", c.ocr.endpoint},
                {"on_unreadable", c.ocr.on_unreadable}};
    }
    if (section == "augment") {
        return {{"enabled", c.augment_enabled()},
                {"provider", c.augment.provider},
                {"endpoint", c.augment.endpoint},
                {"source_language", c.augment.source_language},
                {"target_labels", c.augment.target_labels},
                {"drop_duplicates", c.augment.drop_duplicates}};
    }
    if (section == "chains") {
        json arr = json::array();
        for (const auto& ch : c.chains) arr.push_back({{"tag", ch.tag}, {"pivots", ch.pivots}});
        return arr;
    }
    if (section == "models") {
        json arr = json::array();
        for (const auto& m : c.models) {
            arr.push_back({{"config", m.config},
                           {"backend", m.backend},
                           {"stub_mode", m.stub_mode},
                           {"constant_label", m.constant_label},
                           {"hash_bits", m.hash_bits},
                           {"command", m.command}});
        }
        return arr;
    }
    if (section == "ensemble") {
        return {{"enabled", c.ensemble.enabled},
                {"rule", c.ensemble.rule},
                {"tie_break", c.ensemble.tie_break},
                {"members", c.ensemble.members}};
    }
    if (section == "llm") {
        return {{"enabled", c.llm.enabled},
                {"provider", c.llm.provider},
                {"mode", c.llm.mode},
                {"exemplars_per_class", c.llm.exemplars_per_class},
                {"fallback", c.llm.fallback},
                {"epochs", c.llm.epochs},
                {"base_model", c.llm.base_model},
                {"endpoint", c.llm.endpoint},
                {"mock_label", c.llm.mock_label},
                {"task_name", c.llm.task_name},
                {"task_definition", c.llm.task_definition},
                {"seed", c.seed}};
    }
    throw ConfigError("unknown config section '" + section + "'");
}

}  // namespace hatedet
