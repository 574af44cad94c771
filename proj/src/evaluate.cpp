#include "hatedet/evaluate.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <sstream>
#include <unordered_map>

#include "hatedet/errors.hpp"
#include "hatedet/json_util.hpp"
#include "hatedet/text_util.hpp"

namespace hatedet {

void to_json(nlohmann::json& j, const EvalReport& r) {
    const LabelScheme scheme = r.scheme();
    nlohmann::json per_class = nlohmann::json::object();
    for (std::size_t c = 0; c < r.per_class.size(); ++c) {
        const ClassMetrics& m = r.per_class[c];
        per_class[scheme.name(static_cast<int>(c))] = {{"precision", m.precision},
                                                       {"recall", m.recall},
                                                       {"f1", m.f1},
                                                       {"support", m.support},
                                                       {"zero_division", m.zero_division}};
    }
    j = nlohmann::json{{"task", std::string(to_string(r.task))},
                       {"labels", scheme.names()},
                       {"n", r.n},
                       {"macro_f1", r.macro_f1},
                       {"weighted_f1", r.weighted_f1},
                       {"accuracy", r.accuracy},
                       {"per_class", per_class},
                       {"confusion", r.confusion}};
}

void from_json(const nlohmann::json& j, EvalReport& r) {
    r.task = parse_task(j.at("task").get<std::string>());
    const LabelScheme scheme = r.scheme();
    r.n = j.at("n").get<std::size_t>();
    r.macro_f1 = j.at("macro_f1").get<double>();
    r.weighted_f1 = j.at("weighted_f1").get<double>();
    r.accuracy = j.value("accuracy", 0.0);
    r.per_class.assign(scheme.size(), {});
    for (const auto& [name, m] : j.at("per_class").items()) {
        ClassMetrics& cm = r.per_class.at(static_cast<std::size_t>(scheme.parse(name)));
        cm.precision = m.at("precision").get<double>();
        cm.recall = m.at("recall").get<double>();
        cm.f1 = m.at("f1").get<double>();
        cm.support = m.at("support").get<std::size_t>();
        cm.zero_division = m.value("zero_division", false);
    }
    r.confusion = j.at("confusion").get<ConfusionMatrix>();
}

ConfusionMatrix confusion_from_pairs(std::span<const int> gold, std::span<const int> predicted, std::size_t num_labels) {
    if (gold.size() != predicted.size()) throw PreconditionError("gold and predicted sequences differ in length");
    ConfusionMatrix m(num_labels, std::vector<std::size_t>(num_labels, 0));
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const auto g = static_cast<std::size_t>(gold[i]);
        const auto p = static_cast<std::size_t>(predicted[i]);
        if (gold[i] < 0 || predicted[i] < 0 || g >= num_labels || p >= num_labels) {
            throw LabelError("label pair (" + std::to_string(gold[i]) + ", " + std::to_string(predicted[i]) +
                             ") outside a " + std::to_string(num_labels) + "-label scheme");
        }
        ++m[g][p];
    }
    return m;
}

EvalReport score_labels(std::span<const int> gold, std::span<const int> predicted, const LabelScheme& scheme) {
    const std::size_t k = scheme.size();
    EvalReport r;
    r.task = scheme.task();
    r.n = gold.size();
    r.confusion = confusion_from_pairs(gold, predicted, k);
    r.per_class.resize(k);

    std::size_t correct = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const std::size_t tp = r.confusion[c][c];
        correct += tp;
        std::size_t row = 0;
        std::size_t col = 0;
        for (std::size_t o = 0; o < k; ++o) {
            row += r.confusion[c][o];
            col += r.confusion[o][c];
        }
        ClassMetrics& m = r.per_class[c];
        m.support = row;
        if (col > 0) m.precision = static_cast<double>(tp) / static_cast<double>(col);
        else m.zero_division = true;
        if (row > 0) m.recall = static_cast<double>(tp) / static_cast<double>(row);
        else m.zero_division = true;
        if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        else m.zero_division = true;
    }

    double f1_sum = 0.0;
    double weighted_sum = 0.0;
    for (const auto& m : r.per_class) {
        f1_sum += m.f1;
        weighted_sum += m.f1 * static_cast<double>(m.support);
    }
    r.macro_f1 = k ? f1_sum / static_cast<double>(k) : 0.0;
    r.weighted_f1 = r.n ? weighted_sum / static_cast<double>(r.n) : 0.0;
    r.accuracy = r.n ? static_cast<double>(correct) / static_cast<double>(r.n) : 0.0;
    return r;
}

namespace {

std::pair<std::vector<int>, std::vector<int>> align(std::span<const Prediction> predictions, const Dataset& gold) {
    std::unordered_map<std::string_view, const Prediction*> by_id;
    by_id.reserve(predictions.size());
    for (const auto& p : predictions) {
        if (!gold.scheme().valid(p.label)) {
            throw LabelError("prediction for '" + p.instance_id + "' has label " + std::to_string(p.label));
        }
        if (!by_id.emplace(p.instance_id, &p).second) {
            throw CoverageError("more than one prediction for '" + p.instance_id + "'");
        }
    }
    std::vector<int> g;
    std::vector<int> pr;
    g.reserve(gold.size());
    pr.reserve(gold.size());
    for (const Instance& inst : gold.instances()) {
        if (!inst.label) throw UnlabeledGold("gold instance '" + inst.id + "' has no label");
        auto it = by_id.find(inst.id);
        if (it == by_id.end()) throw CoverageError("no prediction for gold instance '" + inst.id + "'");
        g.push_back(*inst.label);
        pr.push_back(it->second->label);
        by_id.erase(it);
    }
    if (!by_id.empty()) {
        throw CoverageError("prediction for '" + std::string(by_id.begin()->first) + "' has no gold instance");
    }
    return {std::move(g), std::move(pr)};
}

}  // namespace

EvalReport score(std::span<const Prediction> predictions, const Dataset& gold) {
    const auto [g, p] = align(predictions, gold);
    return score_labels(g, p, gold.scheme());
}

ConfusionMatrix confusion_matrix(std::span<const Prediction> predictions, const Dataset& gold) {
    const auto [g, p] = align(predictions, gold);
    return confusion_from_pairs(g, p, gold.scheme().size());
}

ReportFormat parse_report_format(std::string_view name) {
    const std::string n = to_lower(trim(name));
    if (n == "text_table" || n == "text" || n == "table") return ReportFormat::TextTable;
    if (n == "json") return ReportFormat::Json;
    if (n == "plot" || n == "png") return ReportFormat::Plot;
    throw UnknownFormat("unknown report format '" + std::string(name) + "'");
}

namespace {

struct TableRow {
    std::string model;
    std::string group;
    const EvalReport* eval = nullptr;
    const EvalReport* test = nullptr;
};

std::vector<TableRow> collect_rows(std::span<const ReportEntry> entries) {
    std::vector<TableRow> rows;
    for (const auto& e : entries) {
        auto it = std::find_if(rows.begin(), rows.end(), [&](const TableRow& r) { return r.model == e.model; });
        if (it == rows.end()) {
            rows.push_back({e.model, e.group});
            it = std::prev(rows.end());
        }
        if (e.split == Split::Test) it->test = &e.report;
        else if (e.split == Split::Eval) it->eval = &e.report;
    }
    return rows;
}

std::string fmt_score(double v, int precision) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

std::string pad_right(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }
std::string pad_left(const std::string& s, std::size_t w) { return s.size() >= w ? s : std::string(w - s.size(), ' ') + s; }

void append_details(std::ostringstream& out, std::span<const ReportEntry> entries, int precision) {
    for (const auto& e : entries) {
        const LabelScheme scheme = e.report.scheme();
        out << "\n## " << e.model << " (" << to_string(e.split) << ", n=" << e.report.n << ")\n";
        std::size_t w = 12;
        for (const auto& n : scheme.names()) w = std::max(w, n.size() + 2);
        out << pad_right("label", w) << pad_left("precision", 11) << pad_left("recall", 11) << pad_left("f1", 11)
            << pad_left("support", 9) << '\n';
        for (std::size_t c = 0; c < scheme.size(); ++c) {
            const auto& m = e.report.per_class[c];
            out << pad_right(scheme.names()[c], w) << pad_left(fmt_score(m.precision, precision + 2), 11)
                << pad_left(fmt_score(m.recall, precision + 2), 11) << pad_left(fmt_score(m.f1, precision + 2), 11)
                << pad_left(std::to_string(m.support), 9) << (m.zero_division ? "  (zero division)" : "") << '\n';
        }
        out << pad_right("macro_f1", w) << pad_left(fmt_score(e.report.macro_f1, precision + 2), 11) << '\n';
        out << pad_right("weighted_f1", w) << pad_left(fmt_score(e.report.weighted_f1, precision + 2), 11) << '\n';
        out << pad_right("accuracy", w) << pad_left(fmt_score(e.report.accuracy, precision + 2), 11) << '\n';
        out << "confusion [gold rows x predicted columns]\n";
        out << pad_right("", w);
        for (const auto& n : scheme.names()) out << pad_left(n, std::max<std::size_t>(n.size() + 2, 8));
        out << '\n';
        for (std::size_t g = 0; g < scheme.size(); ++g) {
            out << pad_right(scheme.names()[g], w);
            for (std::size_t p = 0; p < scheme.size(); ++p) {
                const auto& n = scheme.names()[p];
                out << pad_left(std::to_string(e.report.confusion.at(g).at(p)), std::max<std::size_t>(n.size() + 2, 8));
            }
            out << '\n';
        }
    }
}

}  // namespace

std::string render_table(std::span<const ReportEntry> entries, const TableOptions& options) {
    if (entries.empty()) throw PreconditionError("render_table needs at least one report");
    const auto rows = collect_rows(entries);

    const bool any_test = std::any_of(rows.begin(), rows.end(), [](const TableRow& r) { return r.test != nullptr; });
    const TableRow* best = nullptr;
    auto headline = [&](const TableRow& r) { return any_test ? r.test : r.eval; };
    for (const auto& r : rows) {
        if (!headline(r)) continue;
        if (!best || headline(r)->macro_f1 > headline(*best)->macro_f1) best = &r;
    }

    std::size_t name_w = 5;
    for (const auto& r : rows) name_w = std::max(name_w, r.model.size());
    name_w += 2;
    const std::size_t col_w = static_cast<std::size_t>(options.precision) + 9;

    auto cell = [&](const TableRow& r, const EvalReport* rep) {
        if (!rep) return std::string("--");
        std::string s = fmt_score(rep->macro_f1, options.precision);
        if (&r == best && rep == headline(r)) s = "**" + s + "**";
        return s;
    };

    std::ostringstream out;
    const std::string rule(name_w + 2 * col_w, '-');
    out << pad_right("Model", name_w) << pad_left("Eval F1", col_w) << pad_left("Test F1", col_w) << '\n';
    out << rule << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i].group != rows[i - 1].group) out << rule << '\n';
        out << pad_right(rows[i].model, name_w) << pad_left(cell(rows[i], rows[i].eval), col_w)
            << pad_left(cell(rows[i], rows[i].test), col_w) << '\n';
    }
    out << rule << '\n';
    if (best) {
        out << "best: " << best->model << " (" << (any_test ? "test" : "eval") << " macro-F1 "
            << fmt_score(headline(*best)->macro_f1, options.precision) << ")\n";
    }
    if (options.detailed) append_details(out, entries, options.precision);
    return out.str();
}

nlohmann::json reports_to_json(std::span<const ReportEntry> entries) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries) {
        arr.push_back({{"model", e.model}, {"split", std::string(to_string(e.split))}, {"group", e.group}, {"report", e.report}});
    }
    return nlohmann::json{{"reports", arr}};
}

std::vector<ReportEntry> reports_from_json(const nlohmann::json& j) {
    std::vector<ReportEntry> out;
    for (const auto& e : j.at("reports")) {
        out.push_back({e.at("model").get<std::string>(), parse_split(e.at("split").get<std::string>()),
                       e.value("group", std::string()), e.at("report").get<EvalReport>()});
    }
    return out;
}

RenderedReport render_report(std::span<const ReportEntry> entries, ReportFormat format,
                             const std::filesystem::path& out_dir, const TableOptions& options) {
    if (entries.empty()) throw PreconditionError("render_report needs at least one report");
    RenderedReport rendered;
    switch (format) {
        case ReportFormat::TextTable:
            rendered.text = render_table(entries, options);
            break;
        case ReportFormat::Json:
            rendered.text = dump_json(reports_to_json(entries), 2) + "\n";
            break;
        case ReportFormat::Plot: {
            if (out_dir.empty()) throw PreconditionError("plot output needs a directory");
            for (const auto& e : entries) {
                std::string stem = "confusion_" + e.model + "_" + std::string(to_string(e.split));
                for (char& c : stem) {
                    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
                }
                auto path = out_dir / (stem + ".png");
                write_confusion_png(e.report, path);
                rendered.files.push_back(path);
                rendered.text += path.string() + "\n";
            }
            break;
        }
    }
    return rendered;
}

}  // namespace hatedet
