#include <doctest.h>

#include <random>

#include "hatedet/ensemble.hpp"
#include "hatedet/errors.hpp"
#include "oracles.hpp"

using namespace hatedet;

namespace {

std::vector<Prediction> preds(const std::string& model, const std::vector<int>& labels) {
    std::vector<Prediction> out;
    for (std::size_t i = 0; i < labels.size(); ++i) out.push_back({"i" + std::to_string(i), labels[i], std::nullopt, model});
    return out;
}

EnsembleSpec spec_of(const std::vector<std::string>& names, const std::vector<double>& weights = {},
                     VoteRule rule = VoteRule::Majority, TieBreak tie = TieBreak::MemberPriority) {
    EnsembleSpec s;
    for (std::size_t i = 0; i < names.size(); ++i) s.members.push_back({names[i], weights.empty() ? 1.0 : weights[i]});
    s.rule = rule;
    s.tie_break = tie;
    return s;
}

/// Every vote vector of `members` voters over `labels` labels.
std::vector<std::vector<int>> all_votes(std::size_t members, int labels) {
    std::vector<std::vector<int>> out{{}};
    for (std::size_t m = 0; m < members; ++m) {
        std::vector<std::vector<int>> next;
        for (const auto& v : out) {
            for (int l = 0; l < labels; ++l) {
                auto w = v;
                w.push_back(l);
                next.push_back(w);
            }
        }
        out = std::move(next);
    }
    return out;
}

}  // namespace

TEST_CASE("two of three votes decide") {
    const std::map<std::string, std::vector<Prediction>> per{{"a", preds("a", {1})}, {"b", preds("b", {1})},
                                                             {"c", preds("c", {0})}};
    const auto out = fuse(per, spec_of({"a", "b", "c"}), 2);
    REQUIRE(out.size() == 1);
    CHECK(out[0].label == 1);
    CHECK(out[0].model_name == "ensemble");
    CHECK(out[0].instance_id == "i0");
}

TEST_CASE("three-way split goes to the first listed member") {
    const std::map<std::string, std::vector<Prediction>> per{{"a", preds("a", {0})}, {"b", preds("b", {1})},
                                                             {"c", preds("c", {2})}};
    CHECK(fuse(per, spec_of({"b", "c", "a"}), 3)[0].label == 1);
    CHECK(fuse(per, spec_of({"c", "a", "b"}), 3)[0].label == 2);
    CHECK(fuse(per, spec_of({"c", "a", "b"}, {}, VoteRule::Majority, TieBreak::LowestCode), 3)[0].label == 0);
}

TEST_CASE("exhaustive agreement with the vote oracle") {
    for (std::size_t members = 2; members <= 4; ++members) {
        for (int labels = 2; labels <= 3; ++labels) {
            for (TieBreak tie : {TieBreak::MemberPriority, TieBreak::LowestCode}) {
                const std::vector<int> ones(members, 1);
                for (const auto& v : all_votes(members, labels)) {
                    CHECK(fuse_votes(v, std::vector<double>(members, 1.0), tie, labels) ==
                          testing::vote_oracle(v, ones, tie, labels));
                }
            }
        }
    }
}

TEST_CASE("weighted votes agree with the oracle and ignore weight scale") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> wdist(1, 5);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t members = 2 + trial % 3;
        const int labels = 2 + trial % 2;
        std::uniform_int_distribution<int> ldist(0, labels - 1);
        std::vector<int> votes(members), iw(members);
        std::vector<double> w(members), scaled(members);
        const double factor = std::uniform_real_distribution<double>(0.01, 100.0)(rng);
        for (std::size_t m = 0; m < members; ++m) {
            votes[m] = ldist(rng);
            iw[m] = wdist(rng);
            w[m] = iw[m];
            scaled[m] = iw[m] * factor;
        }
        for (TieBreak tie : {TieBreak::MemberPriority, TieBreak::LowestCode}) {
            const int expected = testing::vote_oracle(votes, iw, tie, labels);
            CHECK(fuse_votes(votes, w, tie, labels) == expected);
            CHECK(fuse_votes(votes, scaled, tie, labels) == expected);
        }
    }
}

TEST_CASE("unanimity and order independence without ties") {
    for (const auto& v : all_votes(4, 3)) {
        const bool unanimous = std::all_of(v.begin(), v.end(), [&](int x) { return x == v[0]; });
        if (unanimous) {
            for (TieBreak tie : {TieBreak::MemberPriority, TieBreak::LowestCode}) {
                CHECK(fuse_votes(v, {0.3, 0.9, 0.5, 0.1}, tie, 3) == v[0]);
            }
        }
        std::vector<int> counts(3, 0);
        for (int x : v) ++counts[static_cast<std::size_t>(x)];
        const int top = *std::max_element(counts.begin(), counts.end());
        if (std::count(counts.begin(), counts.end(), top) == 1) {
            auto r = v;
            std::reverse(r.begin(), r.end());
            CHECK(fuse_votes(v, std::vector<double>(4, 1.0), TieBreak::MemberPriority, 3) ==
                  fuse_votes(r, std::vector<double>(4, 1.0), TieBreak::MemberPriority, 3));
        }
    }
}

TEST_CASE("majority ignores weights, weighted uses them") {
    const std::map<std::string, std::vector<Prediction>> per{{"a", preds("a", {0})}, {"b", preds("b", {1})},
                                                             {"c", preds("c", {1})}};
    CHECK(fuse(per, spec_of({"a", "b", "c"}, {5.0, 1.0, 1.0}), 2)[0].label == 1);
    CHECK(fuse(per, spec_of({"a", "b", "c"}, {5.0, 1.0, 1.0}, VoteRule::Weighted), 2)[0].label == 0);
}

TEST_CASE("fuse validates coverage and spec") {
    std::map<std::string, std::vector<Prediction>> per{{"a", preds("a", {0, 1})}, {"b", preds("b", {1})}};
    CHECK_THROWS_AS((void)fuse(per, spec_of({"a", "b"}), 2), CoverageError);
    per["b"] = preds("b", {1, 1});
    per["b"][1].instance_id = "other";
    CHECK_THROWS_AS((void)fuse(per, spec_of({"a", "b"}), 2), CoverageError);
    per["b"] = preds("b", {1, 0});
    CHECK_THROWS_AS((void)fuse(per, spec_of({"a", "zzz"}), 2), CoverageError);
    CHECK_THROWS_AS((void)fuse(per, spec_of({"a"}), 2), SpecError);
    CHECK_THROWS_AS((void)fuse(per, spec_of({"a", "a"}), 2), SpecError);
    CHECK_THROWS_AS((void)fuse(per, spec_of({"a", "b"}, {1.0, 0.0}, VoteRule::Weighted), 2), SpecError);

    std::swap(per["b"][0], per["b"][1]);
    const auto out = fuse(per, spec_of({"a", "b"}), 2);
    CHECK(out[0].instance_id == "i0");
    CHECK(out[1].instance_id == "i1");
}

TEST_CASE("weights come from eval macro-F1") {
    auto rep = [](double f1) {
        EvalReport r;
        r.macro_f1 = f1;
        return r;
    };
    const std::map<std::string, EvalReport> reports{{"bert", rep(0.61)}, {"xlmr", rep(0.63)}, {"tweet", rep(0.68)},
                                                    {"zero", rep(0.0)}};
    const auto w = derive_weights({"xlmr", "bert", "tweet"}, reports);
    REQUIRE(w.size() == 3);
    CHECK(w[0].weight == doctest::Approx(0.63));
    CHECK(w[1].weight == doctest::Approx(0.61));
    CHECK(w[2].weight == doctest::Approx(0.68));
    CHECK(derive_weights({"zero", "bert"}, reports)[0].weight > 0.0);
    CHECK_THROWS_AS((void)derive_weights({"bert", "missing"}, reports), MissingReport);

    const auto ordered = order_by_weight(w);
    CHECK(ordered[0].model_name == "tweet");
    CHECK(ordered[1].model_name == "xlmr");
    CHECK(ordered[2].model_name == "bert");
}

TEST_CASE("equal weights reduce to majority voting") {
    for (const auto& v : all_votes(3, 3)) {
        CHECK(fuse_votes(v, {0.66, 0.66, 0.66}, TieBreak::MemberPriority, 3) ==
              fuse_votes(v, {1.0, 1.0, 1.0}, TieBreak::MemberPriority, 3));
    }
}

TEST_CASE("rule and tie-break names") {
    CHECK(parse_vote_rule("Weighted") == VoteRule::Weighted);
    CHECK(parse_tie_break("lowest_code") == TieBreak::LowestCode);
    CHECK(to_string(parse_tie_break(" member_priority ")) == "member_priority");
    CHECK_THROWS_AS((void)parse_vote_rule("plurality"), ConfigError);
}
