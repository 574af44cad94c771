#include "hatedet/pipeline.hpp"

#include <algorithm>
#include <map>

#include "hatedet/backends.hpp"
#include "hatedet/classify.hpp"
#include "hatedet/cloud.hpp"
#include "hatedet/ensemble.hpp"
#include "hatedet/errors.hpp"
#include "hatedet/json_util.hpp"
#include "hatedet/kv_store.hpp"
#include "hatedet/text_util.hpp"

namespace hatedet {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Stage stage) {
    switch (stage) {
        case Stage::Ingest: return "ingest";
        case Stage::Ocr: return "ocr";
        case Stage::Augment: return "augment";
        case Stage::Train: return "train";
        case Stage::Predict: return "predict";
        case Stage::Llm: return "llm";
        case Stage::Ensemble: return "ensemble";
        case Stage::Evaluate: return "evaluate";
    }
    return "?";
}

Stage parse_stage(std::string_view name) {
    const std::string n = to_lower(trim(name));
    for (Stage s : kStageOrder) {
        if (to_string(s) == n) return s;
    }
    throw ConfigError("unknown stage '" + std::string(name) + "'");
}

std::string_view to_string(StageState state) {
    switch (state) {
        case StageState::Ran: return "ran";
        case StageState::Cached: return "cached";
        case StageState::Skipped: return "skipped";
        case StageState::WouldRun: return "would run";
    }
    return "?";
}

ArtifactPaths::ArtifactPaths(const PipelineConfig& c)
    : dataset(c.paths.work_dir / "dataset.csv"),
      ocr_dataset(c.paths.work_dir / "ocr" / "dataset.csv"),
      ocr_review(c.paths.work_dir / "ocr" / "review.json"),
      augmented(c.paths.work_dir / "augment" / "augmented.csv"),
      augment_dataset(c.paths.work_dir / "augment" / "dataset.csv"),
      predictions_dir(c.paths.work_dir / "predictions"),
      llm_dir(c.paths.work_dir / "llm"),
      stamps_dir(c.paths.work_dir / "stamps"),
      report_dir(c.paths.reports_dir / c.run_name) {}

fs::path ArtifactPaths::predictions(const std::string& model, Split split) const {
    return predictions_dir / (model + "." + std::string(to_string(split)) + ".jsonl");
}

namespace {

constexpr Split kScoredSplits[] = {Split::Eval, Split::Test};

std::string digest(const fs::path& p) {
    const auto bytes = read_bytes(p);
    return sha256_hex(bytes);
}

std::string make_key(Stage stage, const json& config, const json& inputs) {
    return sha256_hex(dump_json({{"stage", to_string(stage)}, {"config", config}, {"inputs", inputs}}));
}

class Stamps {
public:
    explicit Stamps(fs::path dir) : dir_(std::move(dir)) {}

    [[nodiscard]] bool fresh(const std::string& name, const std::string& key) const {
        const fs::path p = file(name);
        if (!fs::exists(p)) return false;
        json j;
        try {
            j = json::parse(read_file(p));
        } catch (const json::exception&) {
            return false;
        }
        if (j.value("key", std::string()) != key) return false;
        for (const auto& [rel, sha] : j.at("outputs").items()) {
            const fs::path path = dir_ / rel;
            if (!fs::exists(path) || digest(path) != sha.get<std::string>()) return false;
        }
        return true;
    }

    void write(const std::string& name, const std::string& key, const std::vector<fs::path>& outputs) const {
        json out = json::object();
        for (const auto& p : outputs) out[p.lexically_relative(dir_).generic_string()] = digest(p);
        fs::create_directories(dir_);
        write_file_atomic(file(name), dump_json({{"key", key}, {"outputs", out}}, 2) + "\n");
    }

    void clear(const std::string& name) const { fs::remove(file(name)); }

private:
    [[nodiscard]] fs::path file(const std::string& name) const { return dir_ / (name + ".json"); }
    fs::path dir_;
};

RetryPolicy retry_policy(int retries, int backoff_ms) { return {retries, std::chrono::milliseconds(backoff_ms)}; }

std::unique_ptr<ClassifierBackend> make_backend(const ModelEntry& m, const PipelineConfig& c) {
    if (m.backend == "stub") {
        const int constant = m.constant_label.empty() ? 0 : c.scheme().parse(m.constant_label);
        return std::make_unique<StubBackend>(StubBackend::parse_mode(m.stub_mode), constant);
    }
    if (m.backend == "linear") return std::make_unique<LinearBackend>(m.hash_bits);
    if (m.backend == "external") {
        return std::make_unique<ExternalBackend>(m.command, c.paths.work_dir / "external" / m.config.name);
    }
    throw ConfigError("unknown backend '" + m.backend + "'");
}

std::shared_ptr<OcrProvider> make_ocr_provider(const OcrConfig& o) {
    if (o.provider == "mock") {
        if (o.mock_table.empty()) return std::make_shared<MockOcrProvider>(std::map<std::string, std::string>{}, o.echo);
        return std::shared_ptr<MockOcrProvider>(new MockOcrProvider(MockOcrProvider::from_table_file(o.mock_table, o.echo)));
    }
    if (o.provider == "local") return std::make_shared<CommandOcrProvider>(o.command);
    return std::make_shared<CloudVisionOcr>(make_http_transport(o.endpoint), api_key_from_env(o.api_key_env));
}

std::shared_ptr<TranslationProvider> make_translator(const AugmentConfig& a) {
    if (a.provider == "identity") return std::make_shared<IdentityTranslator>();
    if (a.provider == "mock") {
        return std::shared_ptr<TableTranslator>(new TableTranslator(TableTranslator::from_json_file(a.mock_table.string(), false)));
    }
    return std::make_shared<CloudTranslator>(make_http_transport(a.endpoint), api_key_from_env(a.api_key_env));
}

std::shared_ptr<LlmProvider> make_llm_provider(const LlmConfig& l, const LabelScheme& scheme) {
    if (l.provider == "mock") {
        if (!l.mock_label.empty()) {
            return std::shared_ptr<MockLlmProvider>(new MockLlmProvider(MockLlmProvider::constant(scheme.name(scheme.parse(l.mock_label)))));
        }
        const auto names = scheme.names();
        return std::make_shared<MockLlmProvider>([names](const std::string& prompt) {
            return wrap_label(names[fnv1a64(prompt, 0) % names.size()]);
        });
    }
    OpenAiProvider::Options opts;
    opts.base_model = l.base_model;
    return std::make_shared<OpenAiProvider>(make_http_transport(l.endpoint), api_key_from_env(l.api_key_env), opts);
}

bool fully_labeled(const Dataset& d) {
    return std::all_of(d.instances().begin(), d.instances().end(), [](const Instance& i) { return i.label.has_value(); });
}

std::vector<fs::path> existing_prediction_files(const ArtifactPaths& paths, const std::string& model) {
    std::vector<fs::path> out;
    for (Split s : kScoredSplits) {
        if (fs::exists(paths.predictions(model, s))) out.push_back(paths.predictions(model, s));
    }
    return out;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config, RunOptions options)
    : config_(std::move(config)), options_(std::move(options)), paths_(config_) {
    config_.validate();
}

void Pipeline::log(const std::string& line) const {
    if (options_.log) *options_.log << line << "\n";
}

fs::path Pipeline::current_dataset() const {
    return config_.augment_enabled() ? paths_.augment_dataset : paths_.ocr_dataset;
}

std::vector<std::string> Pipeline::prediction_models() const {
    std::vector<std::string> out;
    for (const auto& m : config_.models) out.push_back(m.config.name);
    if (config_.llm.enabled) out.push_back(llm_model_name(parse_prompt_mode(config_.llm.mode)));
    return out;
}

std::vector<StageStatus> Pipeline::run_until(Stage target) {
    std::vector<StageStatus> out;
    bool forced = false;
    bool upstream_pending = false;
    for (Stage s : kStageOrder) {
        forced = forced || options_.force.contains(s);
        const StageStatus st = run_stage(s, forced || (options_.dry_run && upstream_pending));
        if (st.state == StageState::WouldRun) upstream_pending = true;
        log(std::string(to_string(s)) + ": " + std::string(to_string(st.state)) +
            (st.detail.empty() ? "" : " (" + st.detail + ")"));
        out.push_back(st);
        if (s == target) break;
    }
    return out;
}

StageStatus Pipeline::run_stage(Stage stage, bool forced) {
    switch (stage) {
        case Stage::Ingest: return ingest(forced);
        case Stage::Ocr: return ocr(forced);
        case Stage::Augment: return augment(forced);
        case Stage::Train: return train(forced);
        case Stage::Predict: return predict(forced);
        case Stage::Llm: return llm(forced);
        case Stage::Ensemble: return ensemble(forced);
        case Stage::Evaluate: return evaluate(forced);
    }
    return {stage, StageState::Skipped, ""};
}

StageStatus Pipeline::ingest(bool forced) {
    const Stamps stamps(paths_.stamps_dir);
    if (!fs::exists(config_.paths.manifest)) {
        throw MissingFile("manifest '" + config_.paths.manifest.string() + "' does not exist");
    }
    const std::string key = make_key(Stage::Ingest, {{"task", to_string(config_.task)}},
                                     {{"manifest", digest(config_.paths.manifest)}});
    if (!forced && stamps.fresh("ingest", key)) return {Stage::Ingest, StageState::Cached, ""};
    if (options_.dry_run) return {Stage::Ingest, StageState::WouldRun, ""};
    const Dataset ds = load_dataset(config_.paths.manifest, config_.scheme());
    (void)label_distribution(ds);
    save_dataset(ds, paths_.dataset);
    stamps.write("ingest", key, {paths_.dataset});
    return {Stage::Ingest, StageState::Ran, std::to_string(ds.size()) + " instances"};
}

StageStatus Pipeline::ocr(bool forced) {
    const Stamps stamps(paths_.stamps_dir);
    if (!fs::exists(paths_.dataset)) return {Stage::Ocr, StageState::WouldRun, "no ingested dataset"};
    const Dataset ds = load_dataset(paths_.dataset, config_.scheme());

    json images = json::object();
    for (const Instance& i : ds.instances()) {
        if (!i.text.empty() || i.image_path.empty()) continue;
        fs::path p = i.image_path;
        if (p.is_relative()) p = config_.paths.image_root / p;
        images[i.id] = fs::exists(p) ? digest(p) : "";
    }
    json inputs{{"dataset", digest(paths_.dataset)}, {"images", images}};
    if (!config_.ocr.mock_table.empty() && config_.ocr.provider == "mock") inputs["table"] = digest(config_.ocr.mock_table);
    const std::string key = make_key(Stage::Ocr, section_json(config_, "ocr"), inputs);
    if (!forced && stamps.fresh("ocr", key)) return {Stage::Ocr, StageState::Cached, ""};
    if (options_.dry_run) return {Stage::Ocr, StageState::WouldRun, ""};

    auto provider = options_.ocr_provider ? options_.ocr_provider : make_ocr_provider(config_.ocr);
    DiskStore cache(config_.paths.cache_dir, "ocr");
    OcrOptions opts;
    opts.retry = retry_policy(config_.ocr.retries, config_.ocr.backoff_ms);
    opts.max_in_flight = config_.ocr.max_in_flight;
    opts.on_unreadable = config_.ocr.on_unreadable == "skip" ? UnreadablePolicy::Skip : UnreadablePolicy::Fail;
    opts.image_root = config_.paths.image_root;
    const OcrOutcome outcome = extract_text(ds, *provider, cache, opts);

    save_dataset(outcome.dataset, paths_.ocr_dataset);
    const json review{{"needs_review", outcome.needs_review}, {"unreadable", outcome.unreadable}};
    write_file_atomic(paths_.ocr_review, dump_json(review, 2) + "\n");
    stamps.write("ocr", key, {paths_.ocr_dataset, paths_.ocr_review});
    return {Stage::Ocr, StageState::Ran,
            std::to_string(outcome.results.size()) + " extracted, " + std::to_string(outcome.provider_calls) +
                " provider calls, " + std::to_string(outcome.needs_review.size()) + " need review"};
}

StageStatus Pipeline::augment(bool forced) {
    if (!config_.augment_enabled()) return {Stage::Augment, StageState::Skipped, "disabled"};
    const Stamps stamps(paths_.stamps_dir);
    if (!fs::exists(paths_.ocr_dataset)) return {Stage::Augment, StageState::WouldRun, "no OCR dataset"};
    json inputs{{"dataset", digest(paths_.ocr_dataset)}};
    if (config_.augment.provider == "mock") inputs["table"] = digest(config_.augment.mock_table);
    const std::string key = make_key(
        Stage::Augment, {{"augment", section_json(config_, "augment")}, {"chains", section_json(config_, "chains")}},
        inputs);
    if (!forced && stamps.fresh("augment", key)) return {Stage::Augment, StageState::Cached, ""};
    if (options_.dry_run) return {Stage::Augment, StageState::WouldRun, ""};

    const Dataset ds = load_dataset(paths_.ocr_dataset, config_.scheme());
    auto translator = options_.translator ? options_.translator : make_translator(config_.augment);
    DiskStore cache(config_.paths.cache_dir, "translate");
    AugmentOptions opts;
    opts.translation.source_language = config_.augment.source_language;
    opts.translation.retry = retry_policy(config_.augment.retries, config_.augment.backoff_ms);
    opts.translation.cache = &cache;
    for (const auto& l : config_.augment.target_labels) opts.target_labels.insert(config_.scheme().parse(l));
    opts.drop_exact_duplicates = config_.augment.drop_duplicates;
    opts.max_in_flight = config_.augment.max_in_flight;
    const AugmentOutcome outcome = augment_dataset(ds, config_.chains, *translator, opts);

    save_dataset(outcome.augmented, paths_.augmented);
    save_dataset(merge(ds, outcome.augmented), paths_.augment_dataset);
    stamps.write("augment", key, {paths_.augmented, paths_.augment_dataset});
    return {Stage::Augment, StageState::Ran,
            std::to_string(outcome.augmented.size()) + " augmented, " + std::to_string(outcome.skipped.size()) +
                " skipped, " + std::to_string(outcome.duplicates_dropped) + " duplicates dropped"};
}

StageStatus Pipeline::train(bool forced) {
    const Stamps stamps(paths_.stamps_dir);
    const fs::path data = current_dataset();
    if (!fs::exists(data)) return {Stage::Train, StageState::WouldRun, "no dataset"};
    const std::string data_digest = digest(data);
    std::optional<Dataset> ds;
    std::size_t ran = 0;
    std::size_t pending = 0;
    const json sections = section_json(config_, "models");
    for (std::size_t idx = 0; idx < config_.models.size(); ++idx) {
        const ModelEntry& m = config_.models[idx];
        const std::string name = "train-" + m.config.name;
        const std::string key = make_key(Stage::Train, sections.at(idx), {{"dataset", data_digest}});
        if (!forced && stamps.fresh(name, key)) continue;
        if (options_.dry_run) {
            ++pending;
            continue;
        }
        if (!ds) ds = load_dataset(data, config_.scheme());
        Dataset eval_set = ds->subset(Split::Eval);
        if (!fully_labeled(eval_set)) eval_set = Dataset(ds->scheme(), {});
        auto backend = make_backend(m, config_);
        const TrainResult result = hatedet::train(m.config, ds->subset(Split::Train), eval_set, *backend);
        const fs::path dir = config_.paths.models_dir / m.config.name;
        save_model(result, dir);
        stamps.write(name, key, {dir / "handle.json", dir / "summary.json"});
        log("  trained " + m.config.name + " (best epoch " + std::to_string(result.summary.best_epoch) + ")");
        ++ran;
    }
    if (pending) return {Stage::Train, StageState::WouldRun, std::to_string(pending) + " models"};
    if (!ran) return {Stage::Train, StageState::Cached, ""};
    return {Stage::Train, StageState::Ran, std::to_string(ran) + " of " + std::to_string(config_.models.size()) + " models"};
}

StageStatus Pipeline::predict(bool forced) {
    const Stamps stamps(paths_.stamps_dir);
    const fs::path data = current_dataset();
    if (!fs::exists(data)) return {Stage::Predict, StageState::WouldRun, "no dataset"};
    const std::string data_digest = digest(data);
    std::optional<Dataset> ds;
    std::size_t ran = 0;
    std::size_t pending = 0;
    for (const auto& m : config_.models) {
        const std::string name = "predict-" + m.config.name;
        const fs::path handle_path = config_.paths.models_dir / m.config.name / "handle.json";
        if (!fs::exists(handle_path)) {
            if (!options_.dry_run) throw PreconditionError("model '" + m.config.name + "' has not been trained");
            ++pending;
            continue;
        }
        const std::string key = make_key(Stage::Predict, {{"model", m.config.name}},
                                         {{"dataset", data_digest}, {"handle", digest(handle_path)}});
        if (!forced && stamps.fresh(name, key)) continue;
        if (options_.dry_run) {
            ++pending;
            continue;
        }
        if (!ds) ds = load_dataset(data, config_.scheme());
        const int fallback = majority_label(ds->subset(Split::Train));
        const ModelHandle handle = load_handle(handle_path.parent_path());
        auto backend = make_backend(m, config_);
        std::vector<fs::path> outputs;
        for (Split split : kScoredSplits) {
            const Dataset part = ds->subset(split);
            if (part.empty()) continue;
            std::vector<Instance> with_text;
            for (const Instance& i : part.instances()) {
                if (!trim(i.text).empty()) with_text.push_back(i);
            }
            const auto model_preds = with_text.empty() ? std::vector<Prediction>{} : hatedet::predict(handle, with_text, *backend);
            std::vector<Prediction> preds;
            std::size_t next = 0;
            for (const Instance& i : part.instances()) {
                if (next < model_preds.size() && model_preds[next].instance_id == i.id) {
                    preds.push_back(model_preds[next++]);
                } else {
                    preds.push_back({i.id, fallback, std::nullopt, m.config.name});
                }
            }
            write_predictions(paths_.predictions(m.config.name, split), preds, ds->scheme());
            outputs.push_back(paths_.predictions(m.config.name, split));
        }
        stamps.write(name, key, outputs);
        ++ran;
    }
    if (pending) return {Stage::Predict, StageState::WouldRun, std::to_string(pending) + " models"};
    if (!ran) return {Stage::Predict, StageState::Cached, ""};
    return {Stage::Predict, StageState::Ran, std::to_string(ran) + " of " + std::to_string(config_.models.size()) + " models"};
}

StageStatus Pipeline::llm(bool forced) {
    if (!config_.llm.enabled) return {Stage::Llm, StageState::Skipped, "disabled"};
    const Stamps stamps(paths_.stamps_dir);
    const fs::path data = current_dataset();
    if (!fs::exists(data)) return {Stage::Llm, StageState::WouldRun, "no dataset"};
    const std::string key = make_key(Stage::Llm, section_json(config_, "llm"), {{"dataset", digest(data)}});
    if (!forced && stamps.fresh("llm", key)) return {Stage::Llm, StageState::Cached, ""};
    if (options_.dry_run) return {Stage::Llm, StageState::WouldRun, ""};

    const Dataset ds = load_dataset(data, config_.scheme());
    const Dataset train_set = ds.subset(Split::Train);
    const LlmConfig& l = config_.llm;
    const PromptMode mode = parse_prompt_mode(l.mode);
    PromptSpec spec = default_prompt_spec(config_.task, mode);
    if (!l.task_name.empty()) spec.task_name = l.task_name;
    if (!l.task_definition.empty()) spec.task_definition = l.task_definition;
    if (mode == PromptMode::FewShot) spec.exemplars = sample_exemplars(train_set, l.exemplars_per_class, config_.seed);

    auto provider = options_.llm_provider ? options_.llm_provider : make_llm_provider(l, ds.scheme());
    std::vector<fs::path> outputs;
    std::optional<std::string> model_id;
    if (mode == PromptMode::Finetuned) {
        model_id = submit_finetune(train_set, ds.subset(Split::Eval), *provider, spec, l.epochs);
        const fs::path f = paths_.llm_dir / "finetune.json";
        write_file_atomic(f, dump_json({{"model_id", *model_id}, {"epochs", l.epochs}}, 2) + "\n");
        outputs.push_back(f);
    }

    LlmRunOptions opts;
    opts.retry = retry_policy(l.retries, l.backoff_ms);
    opts.max_in_flight = l.max_in_flight;
    opts.requests_per_minute = l.requests_per_minute;
    opts.max_requests = l.max_requests;
    opts.fallback_label = l.fallback.empty() ? majority_label(train_set) : ds.scheme().parse(l.fallback);
    const std::string model = llm_model_name(mode);
    std::size_t failures = 0;
    for (Split split : kScoredSplits) {
        const Dataset part = ds.subset(split);
        if (part.empty()) continue;
        opts.transcript = paths_.llm_dir / (model + "." + std::string(to_string(split)) + ".transcript.jsonl");
        const LlmRun run = run_llm(part, spec, *provider, model_id, opts);
        failures += run.parse_failures;
        write_predictions(paths_.predictions(model, split), run.predictions, ds.scheme());
        outputs.push_back(paths_.predictions(model, split));
        outputs.push_back(opts.transcript);
    }
    stamps.write("llm", key, outputs);
    return {Stage::Llm, StageState::Ran, std::to_string(failures) + " responses fell back"};
}

StageStatus Pipeline::ensemble(bool forced) {
    if (!config_.ensemble.enabled) return {Stage::Ensemble, StageState::Skipped, "disabled"};
    const bool explicit_members = !config_.ensemble.members.empty();
    const std::vector<std::string> members = explicit_members ? config_.ensemble.members : prediction_models();
    if (members.size() < 2) return {Stage::Ensemble, StageState::Skipped, "fewer than two members"};
    const Stamps stamps(paths_.stamps_dir);
    const fs::path data = current_dataset();
    if (!fs::exists(data)) return {Stage::Ensemble, StageState::WouldRun, "no dataset"};

    json inputs{{"dataset", digest(data)}};
    for (const auto& name : members) {
        for (Split split : kScoredSplits) {
            const fs::path p = paths_.predictions(name, split);
            if (fs::exists(p)) {
                inputs[name + "." + std::string(to_string(split))] = digest(p);
            } else if (options_.dry_run) {
                return {Stage::Ensemble, StageState::WouldRun, "member predictions pending"};
            }
        }
    }
    const std::string key = make_key(Stage::Ensemble, section_json(config_, "ensemble"), inputs);
    if (!forced && stamps.fresh("ensemble", key)) return {Stage::Ensemble, StageState::Cached, ""};
    if (options_.dry_run) return {Stage::Ensemble, StageState::WouldRun, ""};

    const Dataset ds = load_dataset(data, config_.scheme());
    const LabelScheme& scheme = ds.scheme();
    std::map<Split, std::map<std::string, std::vector<Prediction>>> preds;
    for (const auto& name : members) {
        for (Split split : kScoredSplits) {
            if (ds.count(split) == 0) continue;
            const fs::path p = paths_.predictions(name, split);
            if (!fs::exists(p)) throw MissingFile("no " + std::string(to_string(split)) + " predictions for ensemble member '" + name + "'");
            preds[split][name] = read_predictions(p, scheme);
        }
    }

    EnsembleSpec spec;
    spec.rule = parse_vote_rule(config_.ensemble.rule);
    spec.tie_break = parse_tie_break(config_.ensemble.tie_break);
    const Dataset eval_gold = ds.subset(Split::Eval);
    const bool eval_scorable = !eval_gold.empty() && fully_labeled(eval_gold);
    if (eval_scorable) {
        std::map<std::string, EvalReport> reports;
        for (const auto& name : members) reports.emplace(name, score(preds[Split::Eval][name], eval_gold));
        spec.members = derive_weights(members, reports);
        if (!explicit_members) spec.members = order_by_weight(spec.members);
    } else {
        if (spec.rule == VoteRule::Weighted) throw MissingReport("weighted voting needs a labeled eval split");
        for (const auto& name : members) spec.members.push_back({name, 1.0});
    }

    std::vector<fs::path> outputs;
    for (auto& [split, per_model] : preds) {
        const auto fused = fuse(per_model, spec, scheme.size());
        write_predictions(paths_.predictions("ensemble", split), fused, scheme);
        outputs.push_back(paths_.predictions("ensemble", split));
    }
    json spec_json{{"rule", to_string(spec.rule)}, {"tie_break", to_string(spec.tie_break)}, {"members", json::array()}};
    for (const auto& m : spec.members) spec_json["members"].push_back({{"model", m.model_name}, {"weight", m.weight}});
    const fs::path spec_path = paths_.predictions_dir / "ensemble.spec.json";
    write_file_atomic(spec_path, dump_json(spec_json, 2) + "\n");
    outputs.push_back(spec_path);
    stamps.write("ensemble", key, outputs);

    std::string order;
    for (const auto& m : spec.members) order += (order.empty() ? "" : ", ") + m.model_name;
    return {Stage::Ensemble, StageState::Ran, std::string(to_string(spec.rule)) + " over " + order};
}

StageStatus Pipeline::evaluate(bool forced) {
    const Stamps stamps(paths_.stamps_dir);
    const fs::path data = current_dataset();
    if (!fs::exists(data)) return {Stage::Evaluate, StageState::WouldRun, "no dataset"};

    std::vector<std::pair<std::string, std::string>> rows;  // model, group
    for (const auto& m : config_.models) rows.emplace_back(m.config.name, "models");
    if (config_.llm.enabled) rows.emplace_back(llm_model_name(parse_prompt_mode(config_.llm.mode)), "llm");
    if (config_.ensemble.enabled) rows.emplace_back("ensemble", "ensemble");

    json inputs{{"dataset", digest(data)}};
    for (const auto& [model, group] : rows) {
        for (const auto& p : existing_prediction_files(paths_, model)) inputs[p.filename().string()] = digest(p);
    }
    const std::string key = make_key(Stage::Evaluate, {{"run_name", config_.run_name}}, inputs);
    if (!forced && stamps.fresh("evaluate", key)) return {Stage::Evaluate, StageState::Cached, ""};
    if (options_.dry_run) return {Stage::Evaluate, StageState::WouldRun, ""};

    const Dataset ds = load_dataset(data, config_.scheme());
    std::vector<ReportEntry> entries;
    for (const auto& [model, group] : rows) {
        for (Split split : kScoredSplits) {
            const Dataset gold = ds.subset(split);
            const fs::path p = paths_.predictions(model, split);
            if (gold.empty() || !fully_labeled(gold) || !fs::exists(p)) continue;
            const auto preds = read_predictions(p, ds.scheme());
            entries.push_back({model, split, group, score(preds, gold)});
        }
    }
    if (entries.empty()) throw MissingReport("nothing to evaluate: no labeled eval or test split with predictions");

    fs::create_directories(paths_.report_dir);
    const fs::path json_path = paths_.report_dir / "report.json";
    const fs::path text_path = paths_.report_dir / "report.txt";
    write_file_atomic(json_path, dump_json(reports_to_json(entries), 2) + "\n");
    TableOptions table;
    table.detailed = true;
    write_file_atomic(text_path, render_table(entries, table));
    const RenderedReport plots = render_report(entries, ReportFormat::Plot, paths_.report_dir);
    std::vector<fs::path> outputs{json_path, text_path};
    outputs.insert(outputs.end(), plots.files.begin(), plots.files.end());
    stamps.write("evaluate", key, outputs);
    return {Stage::Evaluate, StageState::Ran, std::to_string(entries.size()) + " reports"};
}

std::vector<ReportEntry> Pipeline::load_report() const {
    const fs::path p = paths_.report_dir / "report.json";
    if (!fs::exists(p)) throw MissingReport("no report at '" + p.string() + "'; run evaluate first");
    return reports_from_json(json::parse(read_file(p)));
}

}  // namespace hatedet
