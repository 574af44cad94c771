#include "hatedet/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "hatedet/csv.hpp"
#include "hatedet/errors.hpp"
#include "hatedet/text_util.hpp"

namespace hatedet {

std::string_view to_string(Task task) { return task == Task::A ? "A" : "B"; }

std::string_view to_string(Split split) {
    switch (split) {
        case Split::Train: return "train";
        case Split::Eval: return "eval";
        case Split::Test: return "test";
    }
    return "?";
}

std::string_view to_string(Origin origin) {
    return origin == Origin::Original ? "original" : "augmented";
}

Task parse_task(std::string_view text) {
    const std::string t = to_lower(trim(text));
    if (t == "a") return Task::A;
    if (t == "b") return Task::B;
    throw ConfigError("unknown task '" + std::string(text) + "' (expected A or B)");
}

Split parse_split(std::string_view text) {
    const std::string t = to_lower(trim(text));
    if (t == "train") return Split::Train;
    if (t == "eval" || t == "dev" || t == "validation") return Split::Eval;
    if (t == "test") return Split::Test;
    throw SchemaError("unknown split '" + std::string(text) + "'");
}

Origin parse_origin(std::string_view text) {
    const std::string t = to_lower(trim(text));
    if (t.empty() || t == "original") return Origin::Original;
    if (t == "augmented") return Origin::Augmented;
    throw SchemaError("unknown origin '" + std::string(text) + "'");
}

LabelScheme LabelScheme::for_task(Task task) {
    if (task == Task::A) return LabelScheme(task, {"NO-HATE", "HATE"});
    return LabelScheme(task, {"INDIVIDUAL", "COMMUNITY", "ORGANIZATION"});
}

const std::string& LabelScheme::name(int code) const {
    if (!valid(code)) throw LabelError("code " + std::to_string(code) + " not in scheme " + std::string(to_string(task_)));
    return names_[static_cast<std::size_t>(code)];
}

std::optional<int> LabelScheme::find(std::string_view name) const {
    const std::string wanted = to_lower(trim(name));
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (to_lower(names_[i]) == wanted) return static_cast<int>(i);
    }
    return std::nullopt;
}

int LabelScheme::parse(std::string_view token) const {
    const std::string_view t = trim(token);
    if (auto code = find(t)) return *code;
    int value = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec == std::errc() && ptr == t.data() + t.size() && valid(value)) return value;
    throw LabelError("label '" + std::string(token) + "' not in scheme " + std::string(to_string(task_)));
}

std::string augmented_id(std::string_view parent_id, std::string_view chain_tag) {
    std::string id(parent_id);
    id += '#';
    id += chain_tag;
    return id;
}

std::optional<std::string> parent_id_of(std::string_view id) {
    const auto pos = id.rfind('#');
    if (pos == std::string_view::npos || pos == 0) return std::nullopt;
    return std::string(id.substr(0, pos));
}

Dataset::Dataset(LabelScheme scheme, std::vector<Instance> instances)
    : scheme_(std::move(scheme)), instances_(std::move(instances)) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(instances_.size());
    for (const Instance& inst : instances_) {
        if (inst.id.empty()) throw SchemaError("instance with empty id");
        if (!seen.insert(inst.id).second) throw DuplicateId("duplicate id '" + inst.id + "'");
        if (inst.label && !scheme_.valid(*inst.label)) {
            throw LabelError("instance '" + inst.id + "' has label code " + std::to_string(*inst.label) +
                             " outside scheme " + std::string(to_string(scheme_.task())));
        }
        if (inst.origin == Origin::Augmented && inst.split != Split::Train) {
            throw PreconditionError("augmented instance '" + inst.id + "' is not in the train split");
        }
    }
}

Dataset Dataset::subset(Split split) const {
    std::vector<Instance> out;
    std::copy_if(instances_.begin(), instances_.end(), std::back_inserter(out),
                 [split](const Instance& i) { return i.split == split; });
    return Dataset(scheme_, std::move(out));
}

std::size_t Dataset::count(Split split) const {
    return static_cast<std::size_t>(std::count_if(instances_.begin(), instances_.end(),
                                                  [split](const Instance& i) { return i.split == split; }));
}

const Instance* Dataset::find(std::string_view id) const {
    auto it = std::find_if(instances_.begin(), instances_.end(), [id](const Instance& i) { return i.id == id; });
    return it == instances_.end() ? nullptr : &*it;
}

namespace {

struct Columns {
    std::optional<std::size_t> id, image_path, text, label, split, origin, chain_tag;
};

Columns map_header(const csv::Row& header) {
    Columns cols;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name = to_lower(trim(header[i]));
        if (name == "id") cols.id = i;
        else if (name == "image_path") cols.image_path = i;
        else if (name == "text") cols.text = i;
        else if (name == "label") cols.label = i;
        else if (name == "split") cols.split = i;
        else if (name == "origin") cols.origin = i;
        else if (name == "chain_tag") cols.chain_tag = i;
    }
    for (auto [col, name] : {std::pair{cols.id, "id"}, {cols.image_path, "image_path"}, {cols.split, "split"}}) {
        if (!col) throw SchemaError(std::string("manifest is missing required column '") + name + "'");
    }
    return cols;
}

std::string cell(const csv::Row& row, std::optional<std::size_t> col) {
    if (!col || *col >= row.size()) return {};
    return row[*col];
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& manifest_path, const LabelScheme& scheme) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw MissingFile("cannot open manifest " + manifest_path.string());
    const std::vector<csv::Row> rows = csv::read(in);
    if (rows.empty()) throw SchemaError("manifest " + manifest_path.string() + " has no header row");

    const Columns cols = map_header(rows.front());
    std::vector<Instance> instances;
    instances.reserve(rows.size() - 1);
    std::unordered_map<std::string, std::size_t> first_row;

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const csv::Row& row = rows[r];
        const std::string where = "row " + std::to_string(r + 1);
        Instance inst;
        inst.id = std::string(trim(cell(row, cols.id)));
        if (inst.id.empty()) throw SchemaError(where + ": empty id");
        inst.image_path = std::string(trim(cell(row, cols.image_path)));
        inst.text = cell(row, cols.text);
        if (inst.text.empty() && inst.image_path.empty()) {
            throw SchemaError(where + " ('" + inst.id + "'): neither text nor image_path given");
        }
        if (const std::string label = std::string(trim(cell(row, cols.label))); !label.empty()) {
            try {
                inst.label = scheme.parse(label);
            } catch (const LabelError&) {
                throw LabelError(where + " ('" + inst.id + "'): label '" + label + "' not in scheme " +
                                 std::string(to_string(scheme.task())));
            }
        }
        try {
            inst.split = parse_split(cell(row, cols.split));
            inst.origin = parse_origin(cell(row, cols.origin));
        } catch (const SchemaError& e) {
            throw SchemaError(where + ": " + e.what());
        }
        if (const std::string tag = std::string(trim(cell(row, cols.chain_tag))); !tag.empty()) inst.chain_tag = tag;

        if (auto [it, fresh] = first_row.emplace(inst.id, r + 1); !fresh) {
            throw DuplicateId(where + ": id '" + inst.id + "' already used on row " + std::to_string(it->second));
        }
        instances.push_back(std::move(inst));
    }
    return Dataset(scheme, std::move(instances));
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ostringstream out;
    csv::write_row(out, {"id", "image_path", "text", "label", "split", "origin", "chain_tag"});
    for (const Instance& i : dataset.instances()) {
        csv::write_row(out, {i.id, i.image_path, i.text, i.label ? dataset.scheme().name(*i.label) : std::string(),
                             std::string(to_string(i.split)), std::string(to_string(i.origin)),
                             i.chain_tag.value_or("")});
    }
    write_file_atomic(path, out.str());
}

const SplitDistribution* LabelDistribution::find(Split split) const {
    for (const auto& s : splits) {
        if (s.split == split) return &s;
    }
    return nullptr;
}

LabelDistribution label_distribution(const Dataset& dataset) {
    const std::size_t k = dataset.scheme().size();
    LabelDistribution dist;
    for (Split split : kAllSplits) {
        SplitDistribution sd{split, 0, std::vector<std::size_t>(k, 0), {}};
        std::size_t unlabeled = 0;
        const Instance* first_unlabeled = nullptr;
        for (const Instance& inst : dataset.instances()) {
            if (inst.split != split) continue;
            if (!inst.label) {
                ++unlabeled;
                if (!first_unlabeled) first_unlabeled = &inst;
                continue;
            }
            ++sd.counts[static_cast<std::size_t>(*inst.label)];
            ++sd.total;
        }
        if (unlabeled > 0) {
            if (split == Split::Test && sd.total == 0) {
                dist.omitted.push_back(split);
                continue;
            }
            throw UnlabeledInstance("instance '" + first_unlabeled->id + "' in split " +
                                    std::string(to_string(split)) + " has no label");
        }
        if (sd.total == 0) continue;
        for (std::size_t c = 0; c < k; ++c) {
            // round-half-up of counts[c] * 10000 / total, in integers
            const unsigned long long num = 2ULL * sd.counts[c] * 10000ULL + sd.total;
            sd.hundredths.push_back(static_cast<long>(num / (2ULL * sd.total)));
        }
        dist.splits.push_back(std::move(sd));
    }
    return dist;
}

std::string format_distribution(const LabelDistribution& dist, const LabelScheme& scheme) {
    std::size_t width = 5;
    for (const auto& n : scheme.names()) width = std::max(width, n.size());

    std::ostringstream out;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(width), "Label");
    out << buf;
    for (const auto& s : dist.splits) {
        std::snprintf(buf, sizeof buf, " %10s", std::string(to_string(s.split)).c_str());
        out << buf;
    }
    out << '\n';
    for (std::size_t c = 0; c < scheme.size(); ++c) {
        std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(width), scheme.names()[c].c_str());
        out << buf;
        for (const auto& s : dist.splits) {
            std::snprintf(buf, sizeof buf, " %10.2f", s.percentage(static_cast<int>(c)));
            out << buf;
        }
        out << '\n';
    }
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(width), "n");
    out << buf;
    for (const auto& s : dist.splits) {
        std::snprintf(buf, sizeof buf, " %10zu", s.total);
        out << buf;
    }
    out << '\n';
    for (Split s : dist.omitted) out << "note: split " << to_string(s) << " is unlabeled and was omitted\n";
    return out.str();
}

Dataset merge(const Dataset& original, const Dataset& augmented) {
    if (!(original.scheme() == augmented.scheme())) {
        throw SchemeMismatch("cannot merge task " + std::string(to_string(augmented.scheme().task())) +
                             " instances into a task " + std::string(to_string(original.scheme().task())) + " dataset");
    }
    std::unordered_map<std::string_view, const Instance*> by_id;
    for (const Instance& i : original.instances()) by_id.emplace(i.id, &i);

    std::vector<Instance> all = original.instances();
    all.reserve(original.size() + augmented.size());
    for (const Instance& a : augmented.instances()) {
        if (a.origin != Origin::Augmented || a.split != Split::Train) {
            throw PreconditionError("instance '" + a.id + "' is not an augmented train instance");
        }
        if (auto parent_id = parent_id_of(a.id)) {
            auto it = by_id.find(*parent_id);
            if (it != by_id.end() && it->second->label != a.label) {
                throw PreconditionError("augmented instance '" + a.id + "' does not carry its parent's label");
            }
        }
        all.push_back(a);
    }
    return Dataset(original.scheme(), std::move(all));
}

}  // namespace hatedet
