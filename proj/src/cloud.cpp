#include "hatedet/cloud.hpp"

#include <cstdlib>
#include <sstream>
#include <thread>

#include "hatedet/errors.hpp"
#include "hatedet/json_util.hpp"
#include "hatedet/text_util.hpp"

namespace hatedet {

std::string api_key_from_env(const std::string& variable) {
    const char* v = std::getenv(variable.c_str());
    if (!v || !*v) throw ConfigError("environment variable " + variable + " is not set");
    return v;
}

namespace {

nlohmann::json parse_body(const HttpResponse& r, const std::string& what) {
    if (r.status == 0) throw ProviderError(what + ": no response");
    if (r.status < 200 || r.status >= 300) {
        std::string detail = r.body.substr(0, 300);
        throw ProviderError(what + ": HTTP " + std::to_string(r.status) + " " + detail);
    }
    try {
        return nlohmann::json::parse(r.body);
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(what + ": malformed JSON response (" + e.what() + ")");
    }
}

}  // namespace

Recognition CloudVisionOcr::recognize(std::span<const std::uint8_t> image) {
    const nlohmann::json body{
        {"requests",
         nlohmann::json::array({{{"image", {{"content", base64_encode(image)}}},
                                 {"features", nlohmann::json::array({{{"type", "TEXT_DETECTION"}}})}}})}};
    const auto j = parse_body(http_->post("/v1/images:annotate?key=" + key_, dump_json(body), "application/json", {}),
                              "vision annotate");
    const auto& resp = j.at("responses").at(0);
    if (resp.contains("error")) {
        throw ProviderError("vision annotate: " + resp["error"].value("message", std::string("unknown error")));
    }
    Recognition rec;
    if (!resp.contains("fullTextAnnotation")) return rec;  // no text detected
    const auto& full = resp["fullTextAnnotation"];
    std::istringstream lines(full.value("text", std::string()));
    for (std::string line; std::getline(lines, line);) rec.blocks.push_back(line);
    if (full.contains("pages")) {
        double sum = 0.0;
        int n = 0;
        for (const auto& page : full["pages"]) {
            if (page.contains("confidence")) {
                sum += page["confidence"].get<double>();
                ++n;
            }
        }
        if (n) rec.confidence = sum / n;
    }
    return rec;
}

std::string CloudTranslator::translate(const std::string& text, const std::string& from, const std::string& to) {
    const nlohmann::json body{{"q", text}, {"source", from}, {"target", to}, {"format", "text"}};
    const auto j = parse_body(
        http_->post("/language/translate/v2?key=" + key_, dump_json(body), "application/json", {}), "translate");
    return j.at("data").at("translations").at(0).at("translatedText").get<std::string>();
}

nlohmann::json OpenAiProvider::call(const std::string& path, const nlohmann::json& body) {
    return parse_body(http_->post(path, dump_json(body), "application/json", {{"Authorization", "Bearer " + key_}}),
                      "openai " + path);
}

std::string OpenAiProvider::complete(const std::string& prompt) { return complete_with(options_.base_model, prompt); }

std::string OpenAiProvider::complete_with(const std::string& model_id, const std::string& prompt) {
    const nlohmann::json body{{"model", model_id},
                              {"temperature", options_.temperature},
                              {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
    const auto j = call("/v1/chat/completions", body);
    try {
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw ProviderError("openai completion without message content");
    }
}

std::string OpenAiProvider::upload(const std::vector<nlohmann::json>& records, const std::string& filename) {
    std::string jsonl;
    for (const auto& r : records) jsonl += dump_json(r) + "\n";
    const std::string boundary = "hatedet-" + sha256_hex(jsonl).substr(0, 24);
    std::string body;
    body += "--" + boundary + "\r\nContent-Disposition: form-data; name=\"purpose\"\r\n\r\nfine-tune\r\n";
    body += "--" + boundary + "\r\nContent-Disposition: form-data; name=\"file\"; filename=\"" + filename +
            "\"\r\nContent-Type: application/jsonl\r\n\r\n";
    body += jsonl;
    body += "\r\n--" + boundary + "--\r\n";
    const auto j = parse_body(http_->post("/v1/files", body, "multipart/form-data; boundary=" + boundary,
                                          {{"Authorization", "Bearer " + key_}}),
                              "openai file upload");
    return j.at("id").get<std::string>();
}

std::string OpenAiProvider::finetune(const std::vector<nlohmann::json>& training,
                                     const std::vector<nlohmann::json>& validation, int epochs) {
    nlohmann::json job{{"model", options_.base_model},
                       {"training_file", upload(training, "train.jsonl")},
                       {"hyperparameters", {{"n_epochs", epochs}}}};
    if (!validation.empty()) job["validation_file"] = upload(validation, "validation.jsonl");
    const auto created = call("/v1/fine_tuning/jobs", job);
    const std::string job_id = created.at("id").get<std::string>();

    for (int poll = 0; poll < options_.max_polls; ++poll) {
        const auto j = parse_body(http_->get("/v1/fine_tuning/jobs/" + job_id, {{"Authorization", "Bearer " + key_}}),
                                  "openai job status");
        const std::string status = j.value("status", std::string());
        if (status == "succeeded") return j.at("fine_tuned_model").get<std::string>();
        if (status == "failed" || status == "cancelled") {
            std::string reason = j.contains("error") && j["error"].is_object() ? j["error"].value("message", std::string()) : "";
            throw ProviderError("fine-tuning job " + job_id + " " + status + (reason.empty() ? "" : ": " + reason));
        }
        std::this_thread::sleep_for(options_.poll_interval);
    }
    throw ProviderError("fine-tuning job " + job_id + " did not finish within the polling budget");
}

}  // namespace hatedet
