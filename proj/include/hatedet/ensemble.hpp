#pragma once

#include <map>
#include <string>
#include <vector>

#include "hatedet/evaluate.hpp"
#include "hatedet/prediction.hpp"

namespace hatedet {

enum class VoteRule { Majority, Weighted };
enum class TieBreak { MemberPriority, LowestCode };

VoteRule parse_vote_rule(std::string_view name);
TieBreak parse_tie_break(std::string_view name);
std::string_view to_string(VoteRule rule);
std::string_view to_string(TieBreak tie_break);

struct EnsembleMember {
    std::string model_name;
    double weight = 1.0;
};

struct EnsembleSpec {
    std::vector<EnsembleMember> members;  // order is the tie-break priority
    VoteRule rule = VoteRule::Majority;
    TieBreak tie_break = TieBreak::MemberPriority;

    /// At least two members, distinct names, positive finite weights. Throws SpecError.
    void validate() const;
};

/// Per instance: score(label) = sum of weights of members voting it (all
/// weights 1 under majority). The top score wins; ties go to the label of the
/// earliest-listed member among the tied labels (member_priority) or to the
/// smallest tied code (lowest_code). Output follows the first member's order.
std::vector<Prediction> fuse(const std::map<std::string, std::vector<Prediction>>& per_model, const EnsembleSpec& spec,
                             std::size_t num_labels);

/// Single-instance vote, exposed for testing.
int fuse_votes(const std::vector<int>& votes, const std::vector<double>& weights, TieBreak tie_break, std::size_t num_labels);

/// Weight of each member = its eval macro-F1. Throws MissingReport.
std::vector<EnsembleMember> derive_weights(const std::vector<std::string>& members,
                                           const std::map<std::string, EvalReport>& eval_reports);

/// Members sorted by descending weight, ties kept in their given order.
std::vector<EnsembleMember> order_by_weight(std::vector<EnsembleMember> members);

}  // namespace hatedet
