#include "hatedet/prompt.hpp"

#include <algorithm>
#include <random>

#include "hatedet/errors.hpp"
#include "hatedet/json_util.hpp"
#include "hatedet/text_util.hpp"

namespace hatedet {

std::string_view to_string(PromptMode mode) {
    switch (mode) {
        case PromptMode::ZeroShot: return "zero_shot";
        case PromptMode::FewShot: return "few_shot";
        case PromptMode::Finetuned: return "finetuned";
    }
    return "?";
}

PromptMode parse_prompt_mode(std::string_view name) {
    std::string n = to_lower(trim(name));
    std::replace(n.begin(), n.end(), '-', '_');
    if (n == "zero_shot" || n == "zeroshot") return PromptMode::ZeroShot;
    if (n == "few_shot" || n == "fewshot") return PromptMode::FewShot;
    if (n == "finetuned" || n == "fine_tuned") return PromptMode::Finetuned;
    throw ConfigError("unknown prompt mode '" + std::string(name) + "'");
}

void PromptSpec::validate(const LabelScheme& scheme) const {
    if (labels != scheme.names()) throw SpecError("prompt labels do not match the task's label names");
    if (task_name.empty()) throw SpecError("prompt task name is empty");
    if ((mode == PromptMode::FewShot) != !exemplars.empty()) {
        throw SpecError("exemplars must be given exactly when the prompt mode is few_shot");
    }
    for (const auto& e : exemplars) {
        if (!scheme.find(e.label)) throw SpecError("exemplar label '" + e.label + "' not in scheme");
    }
}

PromptSpec default_prompt_spec(Task task, PromptMode mode) {
    PromptSpec spec;
    spec.mode = mode;
    spec.labels = LabelScheme::for_task(task).names();
    if (task == Task::A) {
        spec.task_name = "Hate Speech Detection";
        spec.task_definition =
            "Hate speech is language that attacks or demeans a person or group on the basis of who they are. "
            "Each text was extracted from an image shared during a political event; decide whether it contains hate speech";
    } else {
        spec.task_name = "Hate Speech Target Detection";
        spec.task_definition =
            "Each text was extracted from an image containing hate speech shared during a political event. "
            "Identify whom the hate speech targets: a single person, a community or group of people, "
            "or an organization such as a party, company or institution";
    }
    return spec;
}

std::vector<Exemplar> sample_exemplars(const Dataset& train, std::size_t per_class, std::uint64_t seed) {
    const LabelScheme& scheme = train.scheme();
    std::vector<std::vector<const Instance*>> by_label(scheme.size());
    for (const Instance& i : train.instances()) {
        if (i.label && !trim(i.text).empty() && i.origin == Origin::Original) {
            by_label[static_cast<std::size_t>(*i.label)].push_back(&i);
        }
    }
    std::mt19937_64 rng(seed);
    std::vector<Exemplar> out;
    for (std::size_t c = 0; c < by_label.size(); ++c) {
        auto& pool = by_label[c];
        std::shuffle(pool.begin(), pool.end(), rng);
        for (std::size_t n = 0; n < std::min(per_class, pool.size()); ++n) {
            out.push_back({normalize_whitespace(pool[n]->text), scheme.names()[c]});
        }
    }
    return out;
}

std::string wrap_label(const std::string& name) { return "<label> " + name + " <\\label>"; }

std::string build_prompt(const PromptSpec& spec, const std::string& text) {
    if (trim(text).empty()) throw PreconditionError("build_prompt needs non-empty text");

    std::string definition(trim(spec.task_definition));
    while (!definition.empty() && definition.back() == '.') definition.pop_back();

    std::string choices;
    for (std::size_t i = 0; i < spec.labels.size(); ++i) {
        if (i) choices += " or ";
        choices += spec.labels[i];
    }

    std::string out;
    out += "Role: You are a helpful AI assistant. You are given the task of " + spec.task_name + ".\n\n";
    out += "Definition: ";
    if (!definition.empty()) out += definition + ". ";
    out += "You will be given a text to label either " + choices + ".\n\n";
    if (spec.mode == PromptMode::FewShot && !spec.exemplars.empty()) {
        out += "Examples:\n";
        for (const auto& e : spec.exemplars) out += e.text + " \xE2\x86\x92 " + e.label + "\n";
        out += "\n";
    }
    out += "Task: Generate the label for this text in the following format: " + wrap_label("Your_Predicted_Label") +
           ". Thanks.\n";
    out += "Text: " + text;
    return out;
}

int parse_label(const std::string& response, const LabelScheme& scheme) {
    const std::string lower = to_lower(response);
    const auto open = lower.find("<label>");
    if (open == std::string::npos) throw ParseError("no <label> tag in response");
    const auto start = open + 7;
    const auto back = lower.find("<\\label>", start);
    const auto fwd = lower.find("</label>", start);
    const auto close = std::min(back, fwd);
    if (close == std::string::npos) throw ParseError("no closing label tag in response");
    const std::string_view content = trim(std::string_view(response).substr(start, close - start));
    if (auto code = scheme.find(content)) return *code;
    throw UnknownLabel("'" + std::string(content) + "' is not a label of task " + std::string(to_string(scheme.task())));
}

nlohmann::json finetune_record(const PromptSpec& spec, const Instance& instance, const LabelScheme& scheme) {
    if (!instance.label) throw UnlabeledInstance("instance '" + instance.id + "' has no label");
    return {{"messages",
             nlohmann::json::array({{{"role", "user"}, {"content", build_prompt(spec, instance.text)}},
                                    {{"role", "assistant"}, {"content", wrap_label(scheme.name(*instance.label))}}})}};
}

std::string submit_finetune(const Dataset& train_set, const Dataset& eval_set, LlmProvider& provider,
                            const PromptSpec& spec, int epochs) {
    if (epochs < 1) throw PreconditionError("fine-tuning needs at least one epoch");
    spec.validate(train_set.scheme());
    if (!(train_set.scheme() == eval_set.scheme())) throw SchemeMismatch("train and eval sets use different schemes");
    auto serialize = [&](const Dataset& d) {
        std::vector<nlohmann::json> records;
        for (const Instance& i : d.instances()) {
            if (!i.label) throw PreconditionError("instance '" + i.id + "' has no label");
            if (trim(i.text).empty()) throw PreconditionError("instance '" + i.id + "' has no text");
            records.push_back(finetune_record(spec, i, d.scheme()));
        }
        return records;
    };
    const auto training = serialize(train_set);
    if (training.empty()) throw EmptyTrainSet("no training records for fine-tuning");
    return provider.finetune(training, serialize(eval_set), epochs);
}

std::string llm_model_name(PromptMode mode) { return "llm-" + std::string(to_string(mode)); }

int majority_label(const Dataset& train) {
    std::vector<std::size_t> counts(train.scheme().size(), 0);
    for (const Instance& i : train.instances()) {
        if (i.label) ++counts[static_cast<std::size_t>(*i.label)];
    }
    return static_cast<int>(std::distance(counts.begin(), std::max_element(counts.begin(), counts.end())));
}

namespace {

void write_transcript(const std::filesystem::path& path, const std::vector<std::optional<LlmTranscriptEntry>>& entries) {
    if (path.empty()) return;
    std::string out;
    for (const auto& e : entries) {
        if (!e) continue;
        nlohmann::json j{{"id", e->instance_id}, {"prompt", e->prompt}, {"response", e->response}, {"label", e->label}};
        j["error"] = e->error ? nlohmann::json(*e->error) : nlohmann::json(nullptr);
        out += dump_json(j) + "\n";
    }
    write_file_atomic(path, out);
}

}  // namespace

LlmRun run_llm(const Dataset& split, const PromptSpec& spec, LlmProvider& provider,
               const std::optional<std::string>& model_id, const LlmRunOptions& options) {
    const LabelScheme& scheme = split.scheme();
    spec.validate(scheme);
    if (spec.mode == PromptMode::Finetuned && (!model_id || model_id->empty())) {
        throw PreconditionError("fine-tuned mode needs a model id");
    }
    if (!scheme.valid(options.fallback_label)) throw ConfigError("fallback label outside the scheme");

    const auto& instances = split.instances();
    std::vector<std::optional<LlmTranscriptEntry>> entries(instances.size());
    std::atomic<std::size_t> requests{0};
    RateLimiter limiter(options.requests_per_minute);

    try {
        bounded_parallel_for(instances.size(), options.max_in_flight, [&](std::size_t i) {
            const Instance& inst = instances[i];
            LlmTranscriptEntry e;
            e.instance_id = inst.id;
            e.label = options.fallback_label;
            if (trim(inst.text).empty()) {
                e.error = "EmptyText: instance has no text";
                entries[i] = std::move(e);
                return;
            }
            e.prompt = build_prompt(spec, inst.text);
            if (options.max_requests && ++requests > options.max_requests) {
                throw BudgetExceeded("request budget of " + std::to_string(options.max_requests) + " exhausted");
            }
            e.response = with_retry(options.retry, [&] {
                limiter.acquire();
                return spec.mode == PromptMode::Finetuned ? provider.complete_with(*model_id, e.prompt)
                                                          : provider.complete(e.prompt);
            });
            try {
                e.label = parse_label(e.response, scheme);
            } catch (const Error& err) {
                e.error = err.what();
            }
            entries[i] = std::move(e);
        });
    } catch (...) {
        write_transcript(options.transcript, entries);
        throw;
    }
    write_transcript(options.transcript, entries);

    LlmRun run;
    const std::string model_name = llm_model_name(spec.mode);
    for (auto& e : entries) {
        run.predictions.push_back({e->instance_id, e->label, std::nullopt, model_name});
        if (e->error) ++run.parse_failures;
        run.transcript.push_back(std::move(*e));
    }
    return run;
}

MockLlmProvider MockLlmProvider::constant(const std::string& label_name) {
    return MockLlmProvider([answer = wrap_label(label_name)](const std::string&) { return answer; });
}

std::string MockLlmProvider::complete(const std::string& prompt) {
    ++calls_;
    if (failures_.load() > 0 && failures_-- > 0) throw ProviderError("mock LLM failure");
    return responder_(prompt);
}

std::string MockLlmProvider::complete_with(const std::string& model_id, const std::string& prompt) {
    if (model_id.empty()) throw ProviderError("empty model id");
    return complete(prompt);
}

std::string MockLlmProvider::finetune(const std::vector<nlohmann::json>& training,
                                      const std::vector<nlohmann::json>& validation, int epochs) {
    std::lock_guard lock(mutex_);
    training_ = training;
    validation_ = validation;
    epochs_ = epochs;
    return "ft:mock:" + sha256_hex(dump_json(nlohmann::json(training))).substr(0, 12);
}

}  // namespace hatedet
