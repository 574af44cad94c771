#include <doctest.h>

#include <fstream>
#include <set>

#include "fake_http.hpp"
#include "hatedet/cloud.hpp"
#include "hatedet/errors.hpp"
#include "hatedet/prompt.hpp"
#include "support.hpp"

using namespace hatedet;
using testing::make_instance;

namespace {

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

Dataset labeled_a(Split split, const std::string& prefix, std::size_t n) {
    std::vector<Instance> v;
    for (std::size_t i = 0; i < n; ++i) {
        v.push_back(make_instance(prefix + std::to_string(i), "text number " + std::to_string(i),
                                  static_cast<int>(i % 2), split));
    }
    return Dataset(LabelScheme::for_task(Task::A), v);
}

}  // namespace

TEST_CASE("zero-shot prompt has role, definition and task blocks in order") {
    const PromptSpec spec = default_prompt_spec(Task::A);
    const std::string p = build_prompt(spec, "some caption");
    CHECK(contains(p, "You are given the task of " + spec.task_name));
    CHECK(contains(p, "NO-HATE"));
    CHECK(contains(p, "HATE"));
    CHECK(contains(p, "some caption"));
    CHECK(contains(p, "<label> Your_Predicted_Label <\\label>"));
    const auto role = p.find("Role:");
    const auto def = p.find("Definition:");
    const auto task = p.find("Task:");
    CHECK(role < def);
    CHECK(def < task);
    CHECK(p.rfind("some caption") > task);
    CHECK_FALSE(contains(p, "Examples:"));
}

TEST_CASE("few-shot prompt lists exemplars between definition and task") {
    PromptSpec spec = default_prompt_spec(Task::B, PromptMode::FewShot);
    spec.exemplars = {{"first exemplar", "INDIVIDUAL"}, {"second exemplar", "ORGANIZATION"}};
    const std::string p = build_prompt(spec, "query");
    const auto a = p.find("first exemplar");
    const auto b = p.find("second exemplar");
    REQUIRE(a != std::string::npos);
    REQUIRE(b != std::string::npos);
    CHECK(a < b);
    CHECK(p.find("Definition:") < a);
    CHECK(b < p.find("Task:"));
    CHECK(contains(p, "first exemplar \xE2\x86\x92 INDIVIDUAL"));
}

TEST_CASE("prompt preconditions and spec validation") {
    const PromptSpec spec = default_prompt_spec(Task::A);
    CHECK_THROWS_AS((void)build_prompt(spec, ""), PreconditionError);
    CHECK_THROWS_AS((void)build_prompt(spec, "  \n"), PreconditionError);
    CHECK_NOTHROW(spec.validate(LabelScheme::for_task(Task::A)));
    CHECK_THROWS_AS(spec.validate(LabelScheme::for_task(Task::B)), SpecError);
    PromptSpec few = default_prompt_spec(Task::A, PromptMode::FewShot);
    CHECK_THROWS_AS(few.validate(LabelScheme::for_task(Task::A)), SpecError);
    PromptSpec zero = spec;
    zero.exemplars = {{"x", "HATE"}};
    CHECK_THROWS_AS(zero.validate(LabelScheme::for_task(Task::A)), SpecError);
}

TEST_CASE("prompts are deterministic and injective in the text") {
    PromptSpec spec = default_prompt_spec(Task::B, PromptMode::FewShot);
    spec.exemplars = {{"ex", "COMMUNITY"}};
    std::set<std::string> seen;
    const std::vector<std::string> texts{"a", "a ", "A", "ab", "a\nb", "b", "Text: a", "a.", "\xC3\xA9"};
    for (const auto& t : texts) {
        CHECK(build_prompt(spec, t) == build_prompt(spec, t));
        seen.insert(build_prompt(spec, t));
    }
    CHECK(seen.size() == texts.size());
}

TEST_CASE("parse_label examples") {
    const auto a = LabelScheme::for_task(Task::A);
    const auto b = LabelScheme::for_task(Task::B);
    CHECK(parse_label("<label> HATE <\\label>", a) == 1);
    CHECK(parse_label("<label> community <\\label>", b) == 1);
    CHECK_THROWS_AS((void)parse_label("I think it is hateful", a), ParseError);
    CHECK_THROWS_AS((void)parse_label("<label> HATE", a), ParseError);
    CHECK_THROWS_AS((void)parse_label("<label> maybe </label>", a), UnknownLabel);
    CHECK(parse_label("Sure! <LABEL>no-hate</Label> and <label> HATE </label>", a) == 0);
    CHECK(parse_label("<label>\n\tORGANIZATION\n</label>", b) == 2);
}

TEST_CASE("wrapped labels parse back under both closers") {
    for (Task t : {Task::A, Task::B}) {
        const auto scheme = LabelScheme::for_task(t);
        for (std::size_t c = 0; c < scheme.size(); ++c) {
            const std::string& n = scheme.names()[c];
            CHECK(parse_label(wrap_label(n), scheme) == static_cast<int>(c));
            CHECK(parse_label("<label> " + n + " </label>", scheme) == static_cast<int>(c));
        }
    }
}

TEST_CASE("run_llm with a constant provider") {
    const Dataset test = labeled_a(Split::Test, "x", 5);
    auto provider = MockLlmProvider::constant("NO-HATE");
    const auto run = run_llm(test, default_prompt_spec(Task::A), provider, std::nullopt, {});
    REQUIRE(run.predictions.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(run.predictions[i].label == 0);
        CHECK(run.predictions[i].instance_id == test.instances()[i].id);
        CHECK(run.predictions[i].model_name == "llm-zero_shot");
    }
    CHECK(run.parse_failures == 0);
}

TEST_CASE("malformed responses fall back and are logged") {
    testing::ScratchDir dir("llm");
    const Dataset test = labeled_a(Split::Test, "x", 6);
    MockLlmProvider provider([](const std::string& prompt) {
        return prompt.ends_with("text number 3") ? std::string("no idea") : wrap_label("HATE");
    });
    LlmRunOptions opts;
    opts.fallback_label = 0;
    opts.transcript = dir / "t.jsonl";
    const auto run = run_llm(test, default_prompt_spec(Task::A), provider, std::nullopt, opts);
    REQUIRE(run.predictions.size() == 6);
    CHECK(run.parse_failures == 1);
    CHECK(run.predictions[3].label == 0);
    CHECK(run.predictions[2].label == 1);
    REQUIRE(run.transcript[3].error.has_value());
    CHECK(contains(*run.transcript[3].error, "ParseError"));

    std::ifstream in(opts.transcript);
    std::string line;
    std::size_t lines = 0, errors = 0;
    while (std::getline(in, line)) {
        ++lines;
        if (!nlohmann::json::parse(line).at("error").is_null()) ++errors;
    }
    CHECK(lines == 6);
    CHECK(errors == 1);
}

TEST_CASE("run_llm is total under arbitrary responses") {
    const Dataset test = labeled_a(Split::Test, "x", 40);
    const std::vector<std::string> answers{"<label> HATE <\\label>", "", "<label>", "<label> x </label>",
                                           "<label> no-hate </label>", "HATE"};
    MockLlmProvider provider([&](const std::string& prompt) { return answers[prompt.size() % answers.size()]; });
    LlmRunOptions opts;
    opts.fallback_label = 1;
    opts.max_in_flight = 8;
    const auto run = run_llm(test, default_prompt_spec(Task::A), provider, std::nullopt, opts);
    REQUIRE(run.predictions.size() == test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        CHECK(run.predictions[i].instance_id == test.instances()[i].id);
        CHECK(LabelScheme::for_task(Task::A).valid(run.predictions[i].label));
        if (run.transcript[i].error) CHECK(run.predictions[i].label == 1);
    }
}

TEST_CASE("run_llm retries, budgets and fine-tuned mode") {
    const Dataset test = labeled_a(Split::Test, "x", 4);
    auto provider = MockLlmProvider::constant("HATE");
    provider.fail_next(2);
    LlmRunOptions opts;
    opts.max_in_flight = 1;
    opts.retry = {3, std::chrono::milliseconds(0)};
    CHECK(run_llm(test, default_prompt_spec(Task::A), provider, std::nullopt, opts).predictions.size() == 4);
    CHECK(provider.calls() == 6);

    opts.max_requests = 3;
    CHECK_THROWS_AS((void)run_llm(test, default_prompt_spec(Task::A), provider, std::nullopt, opts), BudgetExceeded);

    const auto ft = default_prompt_spec(Task::A, PromptMode::Finetuned);
    CHECK_THROWS_AS((void)run_llm(test, ft, provider, std::nullopt, {}), PreconditionError);
    const auto run = run_llm(test, ft, provider, std::string("ft:model"), {});
    CHECK(run.predictions.front().model_name == "llm-finetuned");
}

TEST_CASE("majority label and exemplar sampling") {
    const auto scheme = LabelScheme::for_task(Task::B);
    const Dataset train(scheme, {make_instance("a", "one", 2), make_instance("b", "two", 2), make_instance("c", "three", 0),
                                 make_instance("d", "", 1), make_instance("e", "five", 1)});
    CHECK(majority_label(train) == 1);
    CHECK(majority_label(Dataset(scheme, {make_instance("a", "x", 1), make_instance("b", "y", 0)})) == 0);
    const auto ex = sample_exemplars(train, 3, 7);
    REQUIRE(ex.size() == 4);
    CHECK(ex[0].label == "INDIVIDUAL");
    CHECK(ex[1].label == "COMMUNITY");
    CHECK(ex[1].text == "five");
    CHECK(ex == sample_exemplars(train, 3, 7));
    CHECK(sample_exemplars(train, 1, 7).size() == 3);
}

TEST_CASE("submit_finetune serializes one record per instance") {
    const Dataset train = labeled_a(Split::Train, "t", 4);
    const Dataset eval = labeled_a(Split::Eval, "e", 2);
    auto provider = MockLlmProvider::constant("HATE");
    const auto spec = default_prompt_spec(Task::A, PromptMode::Finetuned);
    const std::string id = submit_finetune(train, eval, provider, spec);
    CHECK(id.starts_with("ft:mock:"));
    REQUIRE(provider.training_records().size() == 4);
    CHECK(provider.validation_records().size() == 2);
    CHECK(provider.finetune_epochs() == 4);
    const auto& rec = provider.training_records()[1];
    CHECK(rec["messages"][0]["content"] == build_prompt(spec, "text number 1"));
    CHECK(rec["messages"][1]["content"] == "<label> HATE <\\label>");

    const Dataset unlabeled(LabelScheme::for_task(Task::A), {make_instance("u", "text", std::nullopt)});
    CHECK_THROWS_AS((void)submit_finetune(unlabeled, eval, provider, spec), PreconditionError);
    CHECK_THROWS_AS((void)submit_finetune(train, eval, provider, spec, 0), PreconditionError);
}

TEST_CASE("openai provider speaks chat completions and fine-tuning jobs") {
    auto http = std::make_shared<testing::FakeTransport>();
    OpenAiProvider::Options options;
    options.poll_interval = std::chrono::milliseconds(0);
    OpenAiProvider provider(http, "sk-test", options);

    http->enqueue(200, R"({"choices":[{"message":{"role":"assistant","content":"<label> HATE <\\label>"}}]})");
    CHECK(provider.complete("prompt text") == "<label> HATE <\\label>");
    REQUIRE(http->requests.size() == 1);
    CHECK(http->requests[0].path == "/v1/chat/completions");
    CHECK(http->requests[0].headers.at("Authorization") == "Bearer sk-test");
    const auto body = nlohmann::json::parse(http->requests[0].body);
    CHECK(body["model"] == "gpt-3.5-turbo");
    CHECK(body["messages"][0]["content"] == "prompt text");

    http->requests.clear();
    http->enqueue(200, R"({"id":"file-train"})");
    http->enqueue(200, R"({"id":"file-val"})");
    http->enqueue(200, R"({"id":"job-1","status":"queued"})");
    http->enqueue(200, R"({"id":"job-1","status":"running"})");
    http->enqueue(200, R"({"id":"job-1","status":"succeeded","fine_tuned_model":"ft:gpt:abc"})");
    const std::vector<nlohmann::json> records{{{"messages", nlohmann::json::array()}}};
    CHECK(provider.finetune(records, records, 4) == "ft:gpt:abc");
    REQUIRE(http->requests.size() == 5);
    CHECK(http->requests[0].path == "/v1/files");
    CHECK(contains(http->requests[0].content_type, "multipart/form-data; boundary="));
    CHECK(contains(http->requests[0].body, "fine-tune"));
    const auto job = nlohmann::json::parse(http->requests[2].body);
    CHECK(job["training_file"] == "file-train");
    CHECK(job["validation_file"] == "file-val");
    CHECK(job["hyperparameters"] == nlohmann::json{{"n_epochs", 4}});
    CHECK(http->requests[4].method == "GET");
    CHECK(http->requests[4].path == "/v1/fine_tuning/jobs/job-1");

    http->enqueue(401, R"({"error":{"message":"bad key"}})");
    CHECK_THROWS_AS((void)provider.complete("x"), ProviderError);
    http->enqueue(200, R"({"id":"f"})");
    http->enqueue(200, R"({"id":"job-2"})");
    http->enqueue(200, R"({"id":"job-2","status":"failed","error":{"message":"quota"}})");
    CHECK_THROWS_WITH_AS((void)provider.finetune(records, {}, 1), doctest::Contains("quota"), ProviderError);
}
