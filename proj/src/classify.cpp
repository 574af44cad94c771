#include "hatedet/classify.hpp"

#include "hatedet/errors.hpp"
#include "hatedet/json_util.hpp"
#include "hatedet/evaluate.hpp"
#include "hatedet/text_util.hpp"

namespace hatedet {

void ModelConfig::validate() const {
    if (name.empty()) throw PreconditionError("model name must not be empty");
    if (!(learning_rate > 0.0)) throw PreconditionError("learning_rate must be positive");
    if (train_batch_size <= 0) throw PreconditionError("train_batch_size must be positive");
    if (test_batch_size <= 0) throw PreconditionError("test_batch_size must be positive");
    if (epochs <= 0) throw PreconditionError("epochs must be positive");
    if (max_sequence_length <= 0) throw PreconditionError("max_sequence_length must be positive");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{{"name", c.name},
                       {"backbone", c.backbone},
                       {"learning_rate", c.learning_rate},
                       {"train_batch_size", c.train_batch_size},
                       {"test_batch_size", c.test_batch_size},
                       {"epochs", c.epochs},
                       {"seed", c.seed},
                       {"max_sequence_length", c.max_sequence_length}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    const ModelConfig d;
    c.name = j.value("name", d.name);
    c.backbone = j.value("backbone", d.backbone);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.train_batch_size = j.value("train_batch_size", d.train_batch_size);
    c.test_batch_size = j.value("test_batch_size", d.test_batch_size);
    c.epochs = j.value("epochs", d.epochs);
    c.seed = j.value("seed", d.seed);
    c.max_sequence_length = j.value("max_sequence_length", d.max_sequence_length);
}

void to_json(nlohmann::json& j, const ModelHandle& h) {
    j = nlohmann::json{{"model_name", h.model_name},
                       {"backend", h.backend},
                       {"task", std::string(to_string(h.task))},
                       {"config", h.config},
                       {"state", h.state}};
}

void from_json(const nlohmann::json& j, ModelHandle& h) {
    h.model_name = j.at("model_name").get<std::string>();
    h.backend = j.at("backend").get<std::string>();
    h.task = parse_task(j.at("task").get<std::string>());
    h.config = j.at("config").get<ModelConfig>();
    h.state = j.at("state");
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> optional_double(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
}

}  // namespace

void to_json(nlohmann::json& j, const TrainingSummary& s) {
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : s.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"loss", optional_json(e.loss)},
                          {"eval_macro_f1", optional_json(e.eval_macro_f1)},
                          {"eval_weighted_f1", optional_json(e.eval_weighted_f1)}});
    }
    j = nlohmann::json{{"model_name", s.model_name},
                       {"backend", s.backend},
                       {"backbone", s.backbone},
                       {"train_size", s.train_size},
                       {"eval_size", s.eval_size},
                       {"excluded_empty_text", s.excluded_empty_text},
                       {"epochs", epochs},
                       {"best_epoch", s.best_epoch}};
}

void from_json(const nlohmann::json& j, TrainingSummary& s) {
    s.model_name = j.at("model_name").get<std::string>();
    s.backend = j.at("backend").get<std::string>();
    s.backbone = j.value("backbone", std::string());
    s.train_size = j.value("train_size", std::size_t{0});
    s.eval_size = j.value("eval_size", std::size_t{0});
    s.excluded_empty_text = j.value("excluded_empty_text", std::size_t{0});
    s.best_epoch = j.value("best_epoch", 0);
    s.epochs.clear();
    for (const auto& e : j.at("epochs")) {
        s.epochs.push_back({e.at("epoch").get<int>(), optional_double(e, "loss"), optional_double(e, "eval_macro_f1"),
                            optional_double(e, "eval_weighted_f1")});
    }
}

namespace {

std::vector<Instance> usable(const Dataset& d, std::size_t& excluded) {
    std::vector<Instance> out;
    for (const Instance& i : d.instances()) {
        if (trim(i.text).empty()) {
            ++excluded;
            continue;
        }
        out.push_back(i);
    }
    return out;
}

}  // namespace

TrainResult train(const ModelConfig& config, const Dataset& train_set, const Dataset& eval_set,
                  ClassifierBackend& backend) {
    config.validate();
    if (!(train_set.scheme() == eval_set.scheme())) {
        throw SchemeMismatch("train and eval sets use different label schemes");
    }
    for (const Instance& i : train_set.instances()) {
        if (!i.label) throw UnlabeledInstance("train instance '" + i.id + "' has no label");
    }
    std::size_t excluded = 0;
    const Dataset train_usable(train_set.scheme(), usable(train_set, excluded));
    if (train_usable.empty()) throw EmptyTrainSet("no labeled train instances with text");
    std::size_t eval_excluded = 0;
    std::vector<Instance> eval_instances;
    for (Instance& i : usable(eval_set, eval_excluded)) {
        if (i.label) eval_instances.push_back(std::move(i));
    }
    const Dataset eval_usable(eval_set.scheme(), std::move(eval_instances));

    TrainResult result;
    result.summary.model_name = config.name;
    result.summary.backend = backend.name();
    result.summary.backbone = config.backbone;
    result.summary.train_size = train_usable.size();
    result.summary.eval_size = eval_usable.size();
    result.summary.excluded_empty_text = excluded;

    std::optional<ModelHandle> best;
    std::optional<double> best_f1;
    const EpochSink sink = [&](const EpochSnapshot& snap) {
        EpochRecord rec{snap.epoch, snap.loss, std::nullopt, std::nullopt};
        if (!eval_usable.empty()) {
            const auto preds = predict(snap.handle, eval_usable.instances(), backend);
            const EvalReport rep = score(preds, eval_usable);
            rec.eval_macro_f1 = rep.macro_f1;
            rec.eval_weighted_f1 = rep.weighted_f1;
            if (!best_f1 || rep.macro_f1 > *best_f1) {
                best_f1 = rep.macro_f1;
                best = snap.handle;
                result.summary.best_epoch = snap.epoch;
            }
        }
        result.summary.epochs.push_back(rec);
    };

    ModelHandle final_handle = backend.fit(config, train_usable, sink);
    final_handle.model_name = config.name;
    if (result.summary.epochs.empty()) throw BackendError("backend " + backend.name() + " reported no epochs");
    if (best) {
        result.handle = std::move(*best);
    } else {
        result.handle = std::move(final_handle);
        result.summary.best_epoch = result.summary.epochs.back().epoch;
    }
    result.handle.model_name = config.name;
    return result;
}

std::vector<Prediction> predict(const ModelHandle& model, std::span<const Instance> instances,
                                ClassifierBackend& backend) {
    if (instances.empty()) return {};
    for (const Instance& i : instances) {
        if (trim(i.text).empty()) throw EmptyText("instance '" + i.id + "' has no text to classify");
    }
    if (model.backend != backend.name()) {
        throw BackendError("model '" + model.model_name + "' was trained by backend '" + model.backend +
                           "', not '" + backend.name() + "'");
    }
    std::vector<Prediction> preds = backend.predict(model, instances);
    if (preds.size() != instances.size()) {
        throw BackendError("backend returned " + std::to_string(preds.size()) + " predictions for " +
                           std::to_string(instances.size()) + " instances");
    }
    const LabelScheme scheme = LabelScheme::for_task(model.task);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i].instance_id != instances[i].id) {
            throw BackendError("prediction " + std::to_string(i) + " is for '" + preds[i].instance_id +
                               "', expected '" + instances[i].id + "'");
        }
        preds[i].model_name = model.model_name;
        validate_prediction(preds[i], scheme);
    }
    return preds;
}

void save_model(const TrainResult& result, const std::filesystem::path& dir) {
    write_file_atomic(dir / "handle.json", dump_json(nlohmann::json(result.handle)) + "\n");
    write_file_atomic(dir / "summary.json", dump_json(nlohmann::json(result.summary), 2) + "\n");
}

ModelHandle load_handle(const std::filesystem::path& dir) {
    return nlohmann::json::parse(read_file(dir / "handle.json")).get<ModelHandle>();
}

TrainingSummary load_summary(const std::filesystem::path& dir) {
    return nlohmann::json::parse(read_file(dir / "summary.json")).get<TrainingSummary>();
}

}  // namespace hatedet
