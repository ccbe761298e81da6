#include "eca/run_config.hpp"

#include <json.hpp>

#include "eca/errors.hpp"
#include "eca/util.hpp"

namespace eca {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
    const std::filesystem::path p(value);
    return p.is_absolute() ? p : base / p;
}

void read_path(const nlohmann::json& doc, const char* key, const std::filesystem::path& base,
               std::filesystem::path& out) {
    if (doc.contains(key) && doc.at(key).is_string()) {
        out = resolve(base, doc.at(key).get<std::string>());
    }
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");

    const std::filesystem::path base =
        path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    RunConfig config;
    read_path(doc, "eval_corpus", base, config.eval_corpus);
    read_path(doc, "train_corpus", base, config.train_corpus);
    if (doc.contains("approach")) {
        const auto approach = parse_approach(doc.at("approach").get<std::string>());
        if (!approach) {
            throw ConfigError("unknown approach '" + doc.at("approach").get<std::string>() +
                              "' (expected finetuned_chat or icl)");
        }
        config.approach = *approach;
    }
    config.use_video_captions = doc.value("use_video_captions", config.use_video_captions);
    config.add_self_causes = doc.value("add_self_causes", config.add_self_causes);
    config.use_gold_emotions = doc.value("use_gold_emotions", config.use_gold_emotions);
    config.max_attempts = doc.value("max_attempts", config.max_attempts);
    config.token_budget = doc.value("token_budget", config.token_budget);
    config.caption_batch_size = doc.value("caption_batch_size", config.caption_batch_size);
    config.max_output_tokens = doc.value("max_output_tokens", config.max_output_tokens);
    config.demonstrations = doc.value("demonstrations", config.demonstrations);
    config.jobs = doc.value("jobs", config.jobs);
    config.seed = doc.value("seed", config.seed);
    if (doc.contains("models")) {
        const auto& models = doc.at("models");
        config.chat_model = models.value("chat", config.chat_model);
        config.vision_model = models.value("vision", config.vision_model);
        config.embedding_model = models.value("embedding", config.embedding_model);
    }
    if (doc.contains("backend")) {
        const auto& backend = doc.at("backend");
        config.backend.kind = backend.value("kind", config.backend.kind);
        config.backend.base_url = backend.value("base_url", config.backend.base_url);
        if (backend.contains("cassette")) {
            config.backend.cassette = resolve(base, backend.at("cassette").get<std::string>());
        }
        config.backend.max_concurrent =
            backend.value("max_concurrent", config.backend.max_concurrent);
        config.backend.min_interval_ms =
            backend.value("min_interval_ms", config.backend.min_interval_ms);
        config.backend.timeout_seconds =
            backend.value("timeout_seconds", config.backend.timeout_seconds);
    }
    if (doc.contains("index")) {
        const auto& index = doc.at("index");
        read_path(index, "conversation", base, config.conversation_index);
        read_path(index, "causes", base, config.cause_indices);
        read_path(index, "payloads", base, config.payloads);
    }
    read_path(doc, "captions_cache", base, config.captions_cache);
    read_path(doc, "media_root", base, config.media_root);
    read_path(doc, "templates_dir", base, config.templates_dir);
    read_path(doc, "out_dir", base, config.out_dir);
    if (doc.contains("selection")) {
        for (const auto& id : doc.at("selection")) {
            config.selection.push_back(id.is_string() ? id.get<std::string>()
                                                      : std::to_string(id.get<long>()));
        }
    }
    if (config.media_root.empty() && !config.eval_corpus.empty()) {
        config.media_root = config.eval_corpus.parent_path();
    }
    return config;
}

void RunConfig::validate_for_run() const {
    if (eval_corpus.empty()) throw ConfigError("config: eval_corpus is required");
    if (!std::filesystem::exists(eval_corpus)) {
        throw ConfigError("config: eval_corpus does not exist: " + eval_corpus.string());
    }
    if (backend.kind != "http" && backend.kind != "replay" && backend.kind != "record") {
        throw ConfigError("config: backend.kind must be http, replay, or record");
    }
    if (backend.kind != "http") {
        if (backend.cassette.empty()) {
            throw ConfigError("config: backend.kind " + backend.kind + " requires a cassette");
        }
        if (backend.kind == "replay" && !std::filesystem::exists(backend.cassette)) {
            throw ConfigError("config: cassette does not exist: " + backend.cassette.string());
        }
    }
    if (approach == Approach::icl) {
        const std::pair<const char*, const std::filesystem::path*> required[] = {
            {"index.conversation", &conversation_index},
            {"index.causes", &cause_indices},
            {"index.payloads", &payloads},
        };
        for (const auto& [name, p] : required) {
            if (p->empty()) {
                throw ConfigError(std::string("config: icl requires ") + name);
            }
            if (!std::filesystem::exists(*p)) {
                throw ConfigError(std::string("config: ") + name +
                                  " does not exist: " + p->string());
            }
        }
    }
    if (max_attempts < 1) throw ConfigError("config: max_attempts must be >= 1");
    if (jobs < 1) throw ConfigError("config: jobs must be >= 1");
}

}  // namespace eca
