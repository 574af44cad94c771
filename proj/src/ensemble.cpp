#include "hatedet/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "hatedet/errors.hpp"
#include "hatedet/text_util.hpp"

namespace hatedet {

namespace {
constexpr double kMinWeight = 1e-6;
}

VoteRule parse_vote_rule(std::string_view name) {
    const std::string n = to_lower(trim(name));
    if (n == "majority") return VoteRule::Majority;
    if (n == "weighted") return VoteRule::Weighted;
    throw ConfigError("unknown vote rule '" + std::string(name) + "'");
}

TieBreak parse_tie_break(std::string_view name) {
    const std::string n = to_lower(trim(name));
    if (n == "member_priority") return TieBreak::MemberPriority;
    if (n == "lowest_code") return TieBreak::LowestCode;
    throw ConfigError("unknown tie break '" + std::string(name) + "'");
}

std::string_view to_string(VoteRule rule) { return rule == VoteRule::Majority ? "majority" : "weighted"; }
std::string_view to_string(TieBreak tie_break) {
    return tie_break == TieBreak::MemberPriority ? "member_priority" : "lowest_code";
}

void EnsembleSpec::validate() const {
    if (members.size() < 2) throw SpecError("an ensemble needs at least two members");
    std::set<std::string> names;
    for (const auto& m : members) {
        if (!names.insert(m.model_name).second) throw SpecError("duplicate ensemble member '" + m.model_name + "'");
        if (!(m.weight > 0.0) || !std::isfinite(m.weight)) {
            throw SpecError("member '" + m.model_name + "' needs a positive weight");
        }
    }
}

int fuse_votes(const std::vector<int>& votes, const std::vector<double>& weights, TieBreak tie_break,
               std::size_t num_labels) {
    std::vector<double> score(num_labels, 0.0);
    for (std::size_t m = 0; m < votes.size(); ++m) score.at(static_cast<std::size_t>(votes[m])) += weights[m];
    const double top = *std::max_element(score.begin(), score.end());
    const double eps = 1e-9 * std::max(1e-300, std::abs(top));
    auto tied = [&](int label) { return top - score[static_cast<std::size_t>(label)] <= eps; };
    if (tie_break == TieBreak::MemberPriority) {
        for (int v : votes) {
            if (tied(v)) return v;
        }
    }
    for (std::size_t c = 0; c < num_labels; ++c) {
        if (tied(static_cast<int>(c))) return static_cast<int>(c);
    }
    return 0;
}

std::vector<Prediction> fuse(const std::map<std::string, std::vector<Prediction>>& per_model, const EnsembleSpec& spec,
                             std::size_t num_labels) {
    spec.validate();
    std::vector<const std::vector<Prediction>*> lists;
    std::vector<std::unordered_map<std::string_view, int>> votes_by_id;
    std::vector<double> weights;
    for (const auto& m : spec.members) {
        auto it = per_model.find(m.model_name);
        if (it == per_model.end()) throw CoverageError("no predictions for ensemble member '" + m.model_name + "'");
        lists.push_back(&it->second);
        auto& index = votes_by_id.emplace_back();
        for (const auto& p : it->second) {
            if (p.label < 0 || static_cast<std::size_t>(p.label) >= num_labels) {
                throw LabelError("member '" + m.model_name + "' predicted label " + std::to_string(p.label));
            }
            if (!index.emplace(p.instance_id, p.label).second) {
                throw CoverageError("member '" + m.model_name + "' predicts '" + p.instance_id + "' twice");
            }
        }
        weights.push_back(spec.rule == VoteRule::Majority ? 1.0 : m.weight);
    }
    for (std::size_t m = 1; m < lists.size(); ++m) {
        if (votes_by_id[m].size() != votes_by_id[0].size()) {
            throw CoverageError("members '" + spec.members[0].model_name + "' and '" + spec.members[m].model_name +
                                "' cover different instances");
        }
    }

    std::vector<Prediction> out;
    out.reserve(lists[0]->size());
    std::vector<int> votes(lists.size());
    for (const auto& first : *lists[0]) {
        for (std::size_t m = 0; m < lists.size(); ++m) {
            auto it = votes_by_id[m].find(first.instance_id);
            if (it == votes_by_id[m].end()) {
                throw CoverageError("member '" + spec.members[m].model_name + "' has no prediction for '" +
                                    first.instance_id + "'");
            }
            votes[m] = it->second;
        }
        out.push_back({first.instance_id, fuse_votes(votes, weights, spec.tie_break, num_labels), std::nullopt, "ensemble"});
    }
    return out;
}

std::vector<EnsembleMember> derive_weights(const std::vector<std::string>& members,
                                           const std::map<std::string, EvalReport>& eval_reports) {
    std::vector<EnsembleMember> out;
    for (const auto& name : members) {
        auto it = eval_reports.find(name);
        if (it == eval_reports.end()) throw MissingReport("no eval report for ensemble member '" + name + "'");
        out.push_back({name, std::max(it->second.macro_f1, kMinWeight)});
    }
    return out;
}

std::vector<EnsembleMember> order_by_weight(std::vector<EnsembleMember> members) {
    std::stable_sort(members.begin(), members.end(),
                     [](const EnsembleMember& a, const EnsembleMember& b) { return a.weight > b.weight; });
    return members;
}

}  // namespace hatedet
