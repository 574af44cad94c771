#include "hatedet/backends.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "hatedet/errors.hpp"
#include "hatedet/json_util.hpp"
#include "hatedet/process.hpp"
#include "hatedet/text_util.hpp"

namespace hatedet {

// ---------------------------------------------------------------- stub

namespace {

std::string_view mode_name(StubBackend::Mode m) {
    switch (m) {
        case StubBackend::Mode::Hash: return "hash";
        case StubBackend::Mode::Memorize: return "memorize";
        case StubBackend::Mode::Constant: return "constant";
    }
    return "?";
}

int hash_label(const std::string& text, std::uint64_t seed, std::size_t k) {
    return static_cast<int>(fnv1a64(text, seed) % k);
}

std::vector<double> one_hot(int label, std::size_t k) {
    std::vector<double> s(k, 0.0);
    s[static_cast<std::size_t>(label)] = 1.0;
    return s;
}

}  // namespace

StubBackend::Mode StubBackend::parse_mode(std::string_view name) {
    const std::string n = to_lower(trim(name));
    if (n == "hash") return Mode::Hash;
    if (n == "memorize" || n == "memorise") return Mode::Memorize;
    if (n == "constant") return Mode::Constant;
    throw ConfigError("unknown stub mode '" + std::string(name) + "'");
}

ModelHandle StubBackend::fit(const ModelConfig& config, const Dataset& train_set, const EpochSink& on_epoch) {
    const std::size_t k = train_set.scheme().size();
    if (mode_ == Mode::Constant && !train_set.scheme().valid(constant_)) {
        throw ConfigError("constant stub label " + std::to_string(constant_) + " not in scheme");
    }

    // text -> per-label vote counts; majority wins, lowest code on ties
    std::map<std::string, std::vector<std::size_t>> votes;
    for (const Instance& i : train_set.instances()) {
        auto& v = votes[i.text];
        v.resize(k, 0);
        ++v[static_cast<std::size_t>(*i.label)];
    }
    nlohmann::json table = nlohmann::json::object();
    for (const auto& [text, v] : votes) {
        table[text] = std::distance(v.begin(), std::max_element(v.begin(), v.end()));
    }

    ModelHandle h;
    h.model_name = config.name;
    h.backend = name();
    h.task = train_set.scheme().task();
    h.config = config;
    h.state = {{"mode", std::string(mode_name(mode_))},
               {"seed", config.seed},
               {"num_labels", k},
               {"constant", constant_},
               {"table", mode_ == Mode::Memorize ? table : nlohmann::json::object()}};

    const auto preds = predict(h, train_set.instances());
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) wrong += preds[i].label != *train_set.instances()[i].label;
    const double error = static_cast<double>(wrong) / static_cast<double>(std::max<std::size_t>(1, preds.size()));
    for (int epoch = 1; epoch <= config.epochs; ++epoch) on_epoch({epoch, error, h});
    return h;
}

std::vector<Prediction> StubBackend::predict(const ModelHandle& model, std::span<const Instance> instances) {
    const auto& st = model.state;
    const Mode mode = parse_mode(st.at("mode").get<std::string>());
    const auto seed = st.at("seed").get<std::uint64_t>();
    const auto k = st.at("num_labels").get<std::size_t>();
    const int constant = st.value("constant", 0);
    const auto& table = st.at("table");

    std::vector<Prediction> out;
    out.reserve(instances.size());
    for (const Instance& inst : instances) {
        Prediction p;
        p.instance_id = inst.id;
        p.model_name = model.model_name;
        switch (mode) {
            case Mode::Constant:
                p.label = constant;
                p.scores = one_hot(p.label, k);
                break;
            case Mode::Memorize:
                if (auto it = table.find(inst.text); it != table.end()) {
                    p.label = it->get<int>();
                    p.scores = one_hot(p.label, k);
                } else {
                    p.label = hash_label(inst.text, seed, k);
                }
                break;
            case Mode::Hash:
                p.label = hash_label(inst.text, seed, k);
                break;
        }
        out.push_back(std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------- linear

std::vector<std::string> LinearBackend::tokenize(std::string_view text, std::size_t max_tokens) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty() && tokens.size() < max_tokens) tokens.push_back(cur);
        cur.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c) || c >= 0x80) cur.push_back(static_cast<char>(std::tolower(c)));
        else flush();
        if (tokens.size() >= max_tokens) break;
    }
    flush();
    return tokens;
}

namespace {

struct SparseRow {
    std::vector<std::uint32_t> idx;
    double scale = 1.0;  // 1/sqrt(nnz)
};

SparseRow featurize(const std::string& text, std::size_t max_tokens, int bits) {
    const auto toks = LinearBackend::tokenize(text, max_tokens);
    const std::uint64_t mask = (1ULL << bits) - 1;
    SparseRow row;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        row.idx.push_back(static_cast<std::uint32_t>(fnv1a64("u:" + toks[i]) & mask));
        if (i + 1 < toks.size()) row.idx.push_back(static_cast<std::uint32_t>(fnv1a64("b:" + toks[i] + " " + toks[i + 1]) & mask));
    }
    std::sort(row.idx.begin(), row.idx.end());
    row.idx.erase(std::unique(row.idx.begin(), row.idx.end()), row.idx.end());
    row.scale = row.idx.empty() ? 1.0 : 1.0 / std::sqrt(static_cast<double>(row.idx.size()));
    return row;
}

struct LinearModel {
    int bits = 18;
    std::size_t k = 2;
    std::vector<double> bias;
    std::vector<double> w;  // [feature * k + label]

    void softmax(const SparseRow& x, std::vector<double>& p) const {
        p = bias;
        for (auto f : x.idx) {
            for (std::size_t c = 0; c < k; ++c) p[c] += x.scale * w[f * k + c];
        }
        const double mx = *std::max_element(p.begin(), p.end());
        double z = 0.0;
        for (double& v : p) z += (v = std::exp(v - mx));
        for (double& v : p) v /= z;
    }

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json rows = nlohmann::json::array();
        const std::size_t dim = std::size_t{1} << bits;
        for (std::size_t f = 0; f < dim; ++f) {
            bool nz = false;
            for (std::size_t c = 0; c < k; ++c) nz |= w[f * k + c] != 0.0;
            if (!nz) continue;
            nlohmann::json row = nlohmann::json::array({f});
            for (std::size_t c = 0; c < k; ++c) row.push_back(w[f * k + c]);
            rows.push_back(std::move(row));
        }
        return {{"hash_bits", bits}, {"num_labels", k}, {"bias", bias}, {"weights", rows}};
    }

    static LinearModel from_json(const nlohmann::json& j) {
        LinearModel m;
        m.bits = j.at("hash_bits").get<int>();
        m.k = j.at("num_labels").get<std::size_t>();
        m.bias = j.at("bias").get<std::vector<double>>();
        m.w.assign((std::size_t{1} << m.bits) * m.k, 0.0);
        for (const auto& row : j.at("weights")) {
            const auto f = row.at(0).get<std::size_t>();
            for (std::size_t c = 0; c < m.k; ++c) m.w.at(f * m.k + c) = row.at(c + 1).get<double>();
        }
        return m;
    }
};

}  // namespace

ModelHandle LinearBackend::fit(const ModelConfig& config, const Dataset& train_set, const EpochSink& on_epoch) {
    if (hash_bits_ < 4 || hash_bits_ > 24) throw ConfigError("linear backend hash_bits must be in [4, 24]");
    const std::size_t k = train_set.scheme().size();
    const auto max_tokens = static_cast<std::size_t>(config.max_sequence_length);

    std::vector<SparseRow> xs;
    std::vector<int> ys;
    for (const Instance& i : train_set.instances()) {
        xs.push_back(featurize(i.text, max_tokens, hash_bits_));
        ys.push_back(*i.label);
    }

    LinearModel m;
    m.bits = hash_bits_;
    m.k = k;
    m.bias.assign(k, 0.0);
    m.w.assign((std::size_t{1} << hash_bits_) * k, 0.0);

    ModelHandle h;
    h.model_name = config.name;
    h.backend = name();
    h.task = train_set.scheme().task();
    h.config = config;

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    const auto batch = static_cast<std::size_t>(config.train_batch_size);
    std::vector<double> p;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            std::unordered_map<std::uint32_t, std::vector<double>> grad;
            std::vector<double> grad_bias(k, 0.0);
            for (std::size_t n = start; n < end; ++n) {
                const SparseRow& x = xs[order[n]];
                const auto y = static_cast<std::size_t>(ys[order[n]]);
                m.softmax(x, p);
                loss -= std::log(std::max(p[y], 1e-300));
                for (std::size_t c = 0; c < k; ++c) {
                    const double g = p[c] - (c == y ? 1.0 : 0.0);
                    grad_bias[c] += g;
                    for (auto f : x.idx) {
                        auto& gv = grad[f];
                        gv.resize(k, 0.0);
                        gv[c] += g * x.scale;
                    }
                }
            }
            const double step = config.learning_rate / static_cast<double>(end - start);
            for (std::size_t c = 0; c < k; ++c) m.bias[c] -= step * grad_bias[c];
            for (const auto& [f, gv] : grad) {
                for (std::size_t c = 0; c < k; ++c) m.w[f * k + c] -= step * gv[c];
            }
        }
        h.state = m.to_json();
        on_epoch({epoch, loss / static_cast<double>(std::max<std::size_t>(1, xs.size())), h});
    }
    return h;
}

std::vector<Prediction> LinearBackend::predict(const ModelHandle& model, std::span<const Instance> instances) {
    const LinearModel m = LinearModel::from_json(model.state);
    const auto max_tokens = static_cast<std::size_t>(model.config.max_sequence_length);
    std::vector<Prediction> out;
    out.reserve(instances.size());
    std::vector<double> p;
    for (const Instance& inst : instances) {
        m.softmax(featurize(inst.text, max_tokens, m.bits), p);
        Prediction pred;
        pred.instance_id = inst.id;
        pred.label = argmax_lowest(p);
        pred.scores = p;
        pred.model_name = model.model_name;
        out.push_back(std::move(pred));
    }
    return out;
}

// ---------------------------------------------------------------- external

namespace {

void run_external(const std::vector<std::string>& command, const std::string& verb, const std::filesystem::path& request) {
    std::vector<std::string> argv = command;
    argv.push_back(verb);
    argv.push_back(request.string());
    const CommandResult r = run_command(argv);
    if (r.exit_code != 0) {
        throw BackendError("external backend '" + command.front() + " " + verb + "' exited with " +
                           std::to_string(r.exit_code));
    }
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<nlohmann::json> out;
    for (std::string line; std::getline(in, line);) {
        if (trim(line).empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw BackendError("malformed line in " + path.string() + ": " + e.what());
        }
    }
    return out;
}

}  // namespace

ModelHandle ExternalBackend::fit(const ModelConfig& config, const Dataset& train_set, const EpochSink& on_epoch) {
    if (command_.empty()) throw ConfigError("external backend needs a command");
    const auto dir = std::filesystem::absolute(work_dir_ / config.name);
    const auto out_dir = dir / "checkpoints";
    std::filesystem::create_directories(out_dir);
    std::filesystem::remove(out_dir / "epochs.jsonl");

    nlohmann::json train = nlohmann::json::array();
    for (const Instance& i : train_set.instances()) train.push_back({{"id", i.id}, {"text", i.text}, {"label", *i.label}});
    const nlohmann::json request{{"config", config},
                                 {"labels", train_set.scheme().names()},
                                 {"train", train},
                                 {"output_dir", out_dir.string()}};
    const auto request_path = dir / "train_request.json";
    write_file_atomic(request_path, dump_json(request));
    run_external(command_, "train", request_path);

    ModelHandle h;
    h.model_name = config.name;
    h.backend = name();
    h.task = train_set.scheme().task();
    h.config = config;
    const auto epochs = read_jsonl(out_dir / "epochs.jsonl");
    if (epochs.empty()) throw BackendError("external backend reported no epochs");
    for (const auto& e : epochs) {
        h.state = {{"checkpoint", e.at("checkpoint").get<std::string>()}, {"labels", train_set.scheme().names()}};
        std::optional<double> loss;
        if (e.contains("loss") && !e["loss"].is_null()) loss = e["loss"].get<double>();
        on_epoch({e.at("epoch").get<int>(), loss, h});
    }
    return h;
}

std::vector<Prediction> ExternalBackend::predict(const ModelHandle& model, std::span<const Instance> instances) {
    TempDir tmp("hatedet-ext");
    nlohmann::json items = nlohmann::json::array();
    for (const Instance& i : instances) items.push_back({{"id", i.id}, {"text", i.text}});
    const auto output = tmp.path() / "predictions.jsonl";
    const nlohmann::json request{{"config", model.config},
                                 {"labels", model.state.at("labels")},
                                 {"checkpoint", model.state.at("checkpoint")},
                                 {"instances", items},
                                 {"output", output.string()}};
    const auto request_path = tmp.path() / "predict_request.json";
    write_file_atomic(request_path, dump_json(request));
    run_external(command_, "predict", request_path);

    std::vector<Prediction> out;
    for (const auto& j : read_jsonl(output)) {
        Prediction p;
        p.instance_id = j.at("id").get<std::string>();
        p.model_name = model.model_name;
        if (j.contains("scores") && !j["scores"].is_null()) {
            auto s = j["scores"].get<std::vector<double>>();
            const double sum = std::accumulate(s.begin(), s.end(), 0.0);
            if (!(sum > 0.0)) throw BackendError("external backend returned non-positive scores for '" + p.instance_id + "'");
            for (double& v : s) v /= sum;
            p.label = argmax_lowest(s);
            p.scores = std::move(s);
        } else {
            p.label = j.at("label").get<int>();
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace hatedet
