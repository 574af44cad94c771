#include <doctest.h>

#include <mutex>

#include "fake_http.hpp"
#include "hatedet/augment.hpp"
#include "hatedet/errors.hpp"
#include "support.hpp"

using namespace hatedet;
using testing::make_instance;

namespace {

class RecordingTranslator final : public TranslationProvider {
public:
    [[nodiscard]] std::string name() const override { return "recording"; }
    std::string translate(const std::string& text, const std::string& from, const std::string& to) override {
        std::lock_guard lock(mutex_);
        hops.push_back(from + ">" + to);
        return text + "|" + to;
    }
    std::vector<std::string> hops;

private:
    std::mutex mutex_;
};

Dataset small_train(std::size_t n) {
    std::vector<Instance> v;
    for (std::size_t i = 0; i < n; ++i) {
        v.push_back(make_instance("t" + std::to_string(i), "text " + std::to_string(i), static_cast<int>(i % 3)));
    }
    v.push_back(make_instance("e0", "eval text", 0, Split::Eval));
    return Dataset(LabelScheme::for_task(Task::B), v);
}

}  // namespace

TEST_CASE("chain validation") {
    CHECK_NOTHROW(validate_chains(default_chains()));
    CHECK(default_chains()[0].pivots == std::vector<std::string>{"xh", "tw", "en"});
    CHECK(default_chains()[1].pivots == std::vector<std::string>{"lo", "ps", "yo", "en"});
    CHECK_THROWS_AS(ChainSpec({"x", {"en"}}).validate(), SpecError);
    CHECK_THROWS_AS(ChainSpec({"x", {"fr", "de"}}).validate(), SpecError);
    CHECK_THROWS_AS(ChainSpec({"a#b", {"fr", "en"}}).validate(), SpecError);
    CHECK_THROWS_AS(validate_chains({{"x", {"fr", "en"}}, {"x", {"de", "en"}}}), SpecError);
}

TEST_CASE("back_translate walks every hop in order") {
    RecordingTranslator t;
    const ChainSpec chain{"lo-ps-yo", {"lo", "ps", "yo", "en"}};
    CHECK(back_translate("hi", chain, t) == "hi|lo|ps|yo|en");
    CHECK(t.hops == std::vector<std::string>{"en>lo", "lo>ps", "ps>yo", "yo>en"});
    CHECK_THROWS_AS((void)back_translate("  ", chain, t), PreconditionError);
}

TEST_CASE("back_translate caches each hop") {
    RecordingTranslator t;
    MemoryStore cache;
    BackTranslateOptions opts;
    opts.cache = &cache;
    const ChainSpec chain{"xh-tw", {"xh", "tw", "en"}};
    const std::string first = back_translate("hello", chain, t, opts);
    const std::string second = back_translate("hello", chain, t, opts);
    CHECK(first == second);
    CHECK(t.hops.size() == 3);
    CHECK(cache.entries() == 3);
}

TEST_CASE("empty provider output is a provider error") {
    TableTranslator t;
    t.set("en", "xh", "   ");
    CHECK_THROWS_AS((void)back_translate("hello", default_chains()[0], t), ProviderError);
}

TEST_CASE("augment_dataset laws") {
    const Dataset ds = small_train(9);
    RecordingTranslator t;
    const auto out = augment_dataset(ds, default_chains(), t);
    CHECK(out.augmented.size() == 2 * 9);
    CHECK(out.skipped.empty());
    for (const Instance& a : out.augmented.instances()) {
        const Instance* parent = ds.find(*parent_id_of(a.id));
        REQUIRE(parent != nullptr);
        CHECK(a.label == parent->label);
        CHECK(a.origin == Origin::Augmented);
        CHECK(a.split == Split::Train);
        CHECK(a.id == augmented_id(parent->id, *a.chain_tag));
    }
    CHECK(out.augmented.instances().front().id == "t0#lo-ps-yo");
    CHECK_NOTHROW((void)merge(ds, out.augmented));
}

TEST_CASE("identity translation reproduces parents with distinct ids") {
    const Dataset ds = small_train(4);
    IdentityTranslator t;
    const auto out = augment_dataset(ds, default_chains(), t);
    CHECK(out.augmented.size() == 8);
    for (const Instance& a : out.augmented.instances()) CHECK(a.text == ds.find(*parent_id_of(a.id))->text);
    AugmentOptions opts;
    opts.drop_exact_duplicates = true;
    const auto dropped = augment_dataset(ds, default_chains(), t, opts);
    CHECK(dropped.augmented.empty());
    CHECK(dropped.duplicates_dropped == 8);
}

TEST_CASE("target labels restrict augmentation") {
    const Dataset ds = small_train(9);
    IdentityTranslator t;
    AugmentOptions opts;
    opts.target_labels = {1};
    const auto out = augment_dataset(ds, default_chains(), t, opts);
    CHECK(out.augmented.size() == 2 * 3);
    for (const Instance& a : out.augmented.instances()) CHECK(a.label == 1);
    opts.target_labels = {5};
    CHECK_THROWS_AS((void)augment_dataset(ds, default_chains(), t, opts), LabelError);
}

TEST_CASE("failed translations become skips, not aborts") {
    const Dataset ds = small_train(3);
    TableTranslator t;
    t.fail_on("text 1");
    AugmentOptions opts;
    opts.translation.retry = {0, std::chrono::milliseconds(0)};
    const auto out = augment_dataset(ds, default_chains(), t, opts);
    CHECK(out.augmented.size() == 4);
    REQUIRE(out.skipped.size() == 2);
    CHECK(out.skipped[0].parent_id == "t1");
}

TEST_CASE("output is independent of concurrency") {
    const Dataset ds = small_train(12);
    RecordingTranslator a;
    RecordingTranslator b;
    AugmentOptions serial;
    serial.max_in_flight = 1;
    AugmentOptions wide;
    wide.max_in_flight = 8;
    CHECK(augment_dataset(ds, default_chains(), a, serial).augmented.instances() ==
          augment_dataset(ds, default_chains(), b, wide).augmented.instances());
}

TEST_CASE("cloud translator request and response") {
    auto http = std::make_shared<testing::FakeTransport>();
    http->enqueue(200, R"({"data":{"translations":[{"translatedText":"molo"}]}})");
    CloudTranslator t(http, "K");
    CHECK(t.translate("hello", "en", "xh") == "molo");
    const auto body = nlohmann::json::parse(http->requests.at(0).body);
    CHECK(http->requests[0].path == "/language/translate/v2?key=K");
    CHECK(body["source"] == "en");
    CHECK(body["target"] == "xh");
    CHECK(body["q"] == "hello");
    http->enqueue(429, "slow down");
    CHECK_THROWS_AS((void)t.translate("hello", "en", "xh"), ProviderError);
}
