#include <doctest.h>

#include <fstream>
#include <random>

#include "hatedet/corpus.hpp"
#include "hatedet/errors.hpp"
#include "support.hpp"

using namespace hatedet;
using testing::make_instance;

namespace {

std::filesystem::path write_manifest(const testing::ScratchDir& dir, const std::string& body) {
    const auto p = dir / "manifest.csv";
    std::ofstream(p) << body;
    return p;
}

// Percentages by exact rational arithmetic: round(count * 100 / total, 2 decimals), half up.
long oracle_hundredths(std::size_t count, std::size_t total) {
    const long double exact = static_cast<long double>(count) * 10000.0L / static_cast<long double>(total);
    long whole = static_cast<long>(exact);
    const std::size_t remainder_twice = 2 * (count * 10000 - static_cast<std::size_t>(whole) * total);
    if (remainder_twice >= total) ++whole;
    return whole;
}

}  // namespace

TEST_CASE("label schemes") {
    const auto a = LabelScheme::for_task(Task::A);
    const auto b = LabelScheme::for_task(Task::B);
    CHECK(a.names() == std::vector<std::string>{"NO-HATE", "HATE"});
    CHECK(b.names() == std::vector<std::string>{"INDIVIDUAL", "COMMUNITY", "ORGANIZATION"});
    CHECK(a.parse("hate") == 1);
    CHECK(a.parse("0") == 0);
    CHECK(b.parse("Community") == 1);
    CHECK_THROWS_AS((void)b.parse("HATE"), LabelError);
    CHECK_THROWS_AS((void)a.parse("2"), LabelError);
    CHECK_FALSE(a == b);
}

TEST_CASE("manifest loading") {
    testing::ScratchDir dir("corpus");
    const auto scheme = LabelScheme::for_task(Task::A);

    SUBCASE("valid rows") {
        const auto p = write_manifest(dir, "id,image_path,text,label,split\n"
                                           "a,img/a.png,,HATE,train\n"
                                           "b,,\"hello, world\",NO-HATE,dev\n"
                                           "c,img/c.png,,,test\n");
        const Dataset ds = load_dataset(p, scheme);
        REQUIRE(ds.size() == 3);
        CHECK(ds.instances()[0].label == 1);
        CHECK(ds.instances()[1].split == Split::Eval);
        CHECK(ds.instances()[1].text == "hello, world");
        CHECK_FALSE(ds.instances()[2].label.has_value());
    }
    SUBCASE("bad label names the row") {
        const auto p = write_manifest(dir, "id,image_path,label,split\na,x.png,HATE,train\nb,y.png,MAYBE,train\n");
        try {
            (void)load_dataset(p, scheme);
            FAIL("expected LabelError");
        } catch (const LabelError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("row 3") != std::string::npos);
            CHECK(msg.find("'b'") != std::string::npos);
            CHECK(msg.find("MAYBE") != std::string::npos);
        }
    }
    SUBCASE("duplicate ids cite both rows") {
        const auto p = write_manifest(dir, "id,image_path,split\na,x.png,train\na,y.png,eval\n");
        try {
            (void)load_dataset(p, scheme);
            FAIL("expected DuplicateId");
        } catch (const DuplicateId& e) {
            CHECK(std::string(e.what()).find("row 2") != std::string::npos);
        }
    }
    SUBCASE("schema problems") {
        CHECK_THROWS_AS((void)load_dataset(write_manifest(dir, "id,text\na,hi\n"), scheme), SchemaError);
        CHECK_THROWS_AS((void)load_dataset(write_manifest(dir, "id,image_path,split\na,,train\n"), scheme), SchemaError);
        CHECK_THROWS_AS((void)load_dataset(write_manifest(dir, "id,image_path,split\na,x,holdout\n"), scheme),
                        SchemaError);
        CHECK_THROWS_AS((void)load_dataset(dir / "absent.csv", scheme), MissingFile);
    }
}

TEST_CASE("save and load round trip") {
    testing::ScratchDir dir("corpus-rt");
    const auto scheme = LabelScheme::for_task(Task::B);
    std::vector<Instance> v{make_instance("p1", "multi\nline, \"quoted\"", 2),
                            make_instance("p2", "", std::nullopt, Split::Test)};
    v[1].image_path = "images/p2.png";
    Instance aug = make_instance(augmented_id("p1", "xh-tw"), "para", 2);
    aug.origin = Origin::Augmented;
    aug.chain_tag = "xh-tw";
    v.push_back(aug);
    const Dataset ds(scheme, v);
    save_dataset(ds, dir / "out/ds.csv");
    const Dataset back = load_dataset(dir / "out/ds.csv", scheme);
    CHECK(back.instances() == ds.instances());
}

TEST_CASE("dataset invariants") {
    const auto scheme = LabelScheme::for_task(Task::A);
    CHECK_THROWS_AS(Dataset(scheme, {make_instance("x", "a", 0), make_instance("x", "b", 1)}), DuplicateId);
    CHECK_THROWS_AS(Dataset(scheme, {make_instance("x", "a", 2)}), LabelError);
    Instance aug = make_instance("x#t", "a", 0, Split::Eval);
    aug.origin = Origin::Augmented;
    CHECK_THROWS_AS(Dataset(scheme, {aug}), PreconditionError);
    CHECK(parent_id_of("abc#xh-tw") == "abc");
    CHECK_FALSE(parent_id_of("abc").has_value());
}

TEST_CASE("label distribution examples") {
    const auto scheme = LabelScheme::for_task(Task::A);
    std::vector<Instance> v;
    for (int i = 0; i < 3; ++i) v.push_back(make_instance("h" + std::to_string(i), "t", 1));
    v.push_back(make_instance("n0", "t", 0));
    v.push_back(make_instance("u0", "t", std::nullopt, Split::Test));
    const auto dist = label_distribution(Dataset(scheme, v));
    REQUIRE(dist.splits.size() == 1);
    CHECK(dist.splits[0].percentage(1) == doctest::Approx(75.0));
    CHECK(dist.splits[0].percentage(0) == doctest::Approx(25.0));
    CHECK(dist.omitted == std::vector<Split>{Split::Test});
    CHECK(format_distribution(dist, scheme).find("omitted") != std::string::npos);

    v.push_back(make_instance("u1", "t", std::nullopt, Split::Train));
    CHECK_THROWS_AS((void)label_distribution(Dataset(scheme, v)), UnlabeledInstance);
}

TEST_CASE("label distribution equals brute-force counting") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const Task task = trial % 2 ? Task::A : Task::B;
        const auto scheme = LabelScheme::for_task(task);
        const std::size_t n = 1 + rng() % 300;
        std::vector<Instance> v;
        for (std::size_t i = 0; i < n; ++i) {
            v.push_back(make_instance("i" + std::to_string(i), "t", static_cast<int>(rng() % scheme.size()),
                                      kAllSplits[rng() % 3]));
        }
        const Dataset ds(scheme, v);
        const auto dist = label_distribution(ds);
        for (const auto& sd : dist.splits) {
            std::size_t total = 0;
            std::vector<std::size_t> counts(scheme.size(), 0);
            for (const auto& inst : v) {
                if (inst.split != sd.split) continue;
                ++total;
                ++counts[static_cast<std::size_t>(*inst.label)];
            }
            REQUIRE(sd.total == total);
            for (std::size_t c = 0; c < scheme.size(); ++c) {
                CHECK(sd.counts[c] == counts[c]);
                CHECK(sd.hundredths[c] == oracle_hundredths(counts[c], total));
            }
        }
    }
}

TEST_CASE("merge") {
    const auto a = LabelScheme::for_task(Task::A);
    const auto b = LabelScheme::for_task(Task::B);
    const Dataset orig(b, {make_instance("p", "x", 1)});
    Instance aug = make_instance("p#t", "y", 1);
    aug.origin = Origin::Augmented;
    aug.chain_tag = "t";
    const Dataset merged = merge(orig, Dataset(b, {aug}));
    CHECK(merged.size() == 2);
    CHECK(merged.find("p#t") != nullptr);

    Instance wrong = aug;
    wrong.label = 2;
    CHECK_THROWS_AS((void)merge(orig, Dataset(b, {wrong})), PreconditionError);
    CHECK_THROWS_AS((void)merge(orig, Dataset(a, {})), SchemeMismatch);
    CHECK_THROWS_AS((void)merge(orig, Dataset(b, {make_instance("q", "z", 0)})), PreconditionError);
}
