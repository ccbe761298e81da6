#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eca/pipeline.hpp"

namespace eca {

struct BackendSettings {
    std::string kind = "replay";  // http | replay | record
    std::string base_url = "https://api.openai.com/v1";
    std::filesystem::path cassette;
    int max_concurrent = 2;
    int min_interval_ms = 0;
    long timeout_seconds = 120;
};

/// One JSON document drives a whole run; flags override fields. Relative
/// paths resolve against the config file's directory.
struct RunConfig {
    std::filesystem::path eval_corpus;
    std::filesystem::path train_corpus;  // build-index only
    Approach approach = Approach::finetuned_chat;
    bool use_video_captions = false;
    bool add_self_causes = true;
    bool use_gold_emotions = false;
    int max_attempts = 3;
    int token_budget = 4096;
    int caption_batch_size = 8;
    int max_output_tokens = 256;
    int demonstrations = 1;
    int jobs = 1;
    std::string chat_model = "gpt-3.5-turbo";
    std::string vision_model = "gpt-4-vision-preview";
    std::string embedding_model = "text-embedding-ada-002";
    BackendSettings backend;
    std::filesystem::path conversation_index;
    std::filesystem::path cause_indices;
    std::filesystem::path payloads;
    std::filesystem::path captions_cache;
    std::filesystem::path media_root;
    std::filesystem::path templates_dir;
    std::filesystem::path out_dir = "out";
    std::vector<std::string> selection;  // conversation ids for build-index
    std::uint64_t seed = 0;
    bool verbose = false;

    static RunConfig load(const std::filesystem::path& path);
    /// ConfigError on missing required paths or inconsistent approach fields.
    void validate_for_run() const;
};

}  // namespace eca
