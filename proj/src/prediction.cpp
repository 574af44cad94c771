#include "hatedet/prediction.hpp"

#include <cmath>
#include <sstream>

#include "hatedet/errors.hpp"
#include "hatedet/json_util.hpp"
#include "hatedet/text_util.hpp"

namespace hatedet {

int argmax_lowest(std::span<const double> scores) {
    if (scores.empty()) throw PreconditionError("argmax of empty score vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return static_cast<int>(best);
}

void validate_prediction(const Prediction& p, const LabelScheme& scheme) {
    const std::string who = "prediction for '" + p.instance_id + "'";
    if (!scheme.valid(p.label)) throw BackendError(who + " has label " + std::to_string(p.label) + " outside the scheme");
    if (!p.scores) return;
    const auto& s = *p.scores;
    if (s.size() != scheme.size()) throw BackendError(who + " has " + std::to_string(s.size()) + " scores");
    double sum = 0.0;
    for (double v : s) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw BackendError(who + " has a negative or non-finite score");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw BackendError(who + " has scores summing to " + std::to_string(sum));
    if (argmax_lowest(s) != p.label) throw BackendError(who + " label is not the argmax of its scores");
}

nlohmann::json prediction_to_json(const Prediction& p, const LabelScheme& scheme) {
    nlohmann::json j{{"id", p.instance_id}, {"label", p.label}, {"label_name", scheme.name(p.label)}, {"model", p.model_name}};
    if (p.scores) j["scores"] = *p.scores;
    return j;
}

Prediction prediction_from_json(const nlohmann::json& j, const LabelScheme& scheme) {
    Prediction p;
    p.instance_id = j.at("id").get<std::string>();
    const auto& label = j.at("label");
    p.label = label.is_string() ? scheme.parse(label.get<std::string>()) : label.get<int>();
    p.model_name = j.value("model", std::string());
    if (j.contains("scores") && !j["scores"].is_null()) p.scores = j["scores"].get<std::vector<double>>();
    return p;
}

void write_predictions(const std::filesystem::path& path, std::span<const Prediction> predictions,
                       const LabelScheme& scheme) {
    std::string out;
    for (const auto& p : predictions) {
        out += dump_json(prediction_to_json(p, scheme));
        out += '\n';
    }
    write_file_atomic(path, out);
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path, const LabelScheme& scheme) {
    std::istringstream in(read_file(path));
    std::vector<Prediction> out;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            out.push_back(prediction_from_json(nlohmann::json::parse(line), scheme));
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace hatedet
