#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hatedet {

/// Sub-task A is hate / no-hate, sub-task B is the target of the hate.
enum class Task { A, B };

enum class Split { Train, Eval, Test };

enum class Origin { Original, Augmented };

std::string_view to_string(Task task);
std::string_view to_string(Split split);
std::string_view to_string(Origin origin);
Task parse_task(std::string_view text);
Split parse_split(std::string_view text);
Origin parse_origin(std::string_view text);

inline constexpr Split kAllSplits[] = {Split::Train, Split::Eval, Split::Test};

/// Ordered label vocabulary for one task. Codes are the positions 0..n-1.
class LabelScheme {
public:
    static LabelScheme for_task(Task task);

    [[nodiscard]] Task task() const noexcept { return task_; }
    [[nodiscard]] std::size_t size() const noexcept { return names_.size(); }
    [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
    [[nodiscard]] const std::string& name(int code) const;
    [[nodiscard]] bool valid(int code) const noexcept {
        return code >= 0 && static_cast<std::size_t>(code) < names_.size();
    }

    /// Case-insensitive name lookup.
    [[nodiscard]] std::optional<int> find(std::string_view name) const;
    /// Accepts a label name or its integer code; throws LabelError otherwise.
    [[nodiscard]] int parse(std::string_view token) const;

    friend bool operator==(const LabelScheme& a, const LabelScheme& b) { return a.task_ == b.task_; }

private:
    LabelScheme(Task task, std::vector<std::string> names) : task_(task), names_(std::move(names)) {}

    Task task_;
    std::vector<std::string> names_;
};

/// One text-embedded image.
struct Instance {
    std::string id;
    std::string image_path;  // empty when absent
    std::string text;        // OCR output or gold text; empty until extracted
    std::optional<int> label;
    Split split = Split::Train;
    Origin origin = Origin::Original;
    std::optional<std::string> chain_tag;

    friend bool operator==(const Instance&, const Instance&) = default;
};

/// Id given to the copy of `parent_id` produced by the chain `chain_tag`.
std::string augmented_id(std::string_view parent_id, std::string_view chain_tag);
/// Parent id of an augmented id, or nullopt if the id has no chain suffix.
std::optional<std::string> parent_id_of(std::string_view id);

/// A validated collection of instances sharing one label scheme.
///
/// Construction enforces: unique ids, every present label is a valid code,
/// and augmented instances live in the train split.
class Dataset {
public:
    Dataset(LabelScheme scheme, std::vector<Instance> instances);

    [[nodiscard]] const LabelScheme& scheme() const noexcept { return scheme_; }
    [[nodiscard]] const std::vector<Instance>& instances() const noexcept { return instances_; }
    [[nodiscard]] std::size_t size() const noexcept { return instances_.size(); }
    [[nodiscard]] bool empty() const noexcept { return instances_.empty(); }

    [[nodiscard]] Dataset subset(Split split) const;
    [[nodiscard]] std::size_t count(Split split) const;
    [[nodiscard]] const Instance* find(std::string_view id) const;

private:
    LabelScheme scheme_;
    std::vector<Instance> instances_;
};

/// Reads a manifest with a header row. Required columns: id, image_path,
/// split. Optional: text, label (name or code), origin, chain_tag.
Dataset load_dataset(const std::filesystem::path& manifest_path, const LabelScheme& scheme);

/// Writes the persisted form: id,image_path,text,label,split,origin,chain_tag.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

struct SplitDistribution {
    Split split;
    std::size_t total = 0;
    std::vector<std::size_t> counts;  // indexed by label code
    /// Percentages in hundredths (5395 means 53.95), rounded half-up from the
    /// exact ratio so the two-decimal value is never subject to float error.
    std::vector<long> hundredths;

    [[nodiscard]] double percentage(int code) const {
        return static_cast<double>(hundredths.at(static_cast<std::size_t>(code))) / 100.0;
    }
};

struct LabelDistribution {
    std::vector<SplitDistribution> splits;  // train, eval, test order; present splits only
    std::vector<Split> omitted;             // wholly unlabeled test split

    [[nodiscard]] const SplitDistribution* find(Split split) const;
};

/// Per-split label counts and percentages. A test split with no labels at
/// all is omitted and reported in `omitted`; any other unlabeled instance
/// raises UnlabeledInstance.
LabelDistribution label_distribution(const Dataset& dataset);

/// Renders the distribution as a label-by-split table of percentages.
std::string format_distribution(const LabelDistribution& dist, const LabelScheme& scheme);

/// Union of an original dataset and a set of augmented train copies.
/// Every augmented instance must reference a parent in `original` and carry
/// the parent's label.
Dataset merge(const Dataset& original, const Dataset& augmented);

}  // namespace hatedet
