#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "eca/corpus.hpp"
#include "eca/retrieval.hpp"
#include "eca/util.hpp"

namespace ecatest {

inline std::filesystem::path fixture_dir() {
    return std::filesystem::path(ECA_FIXTURE_DIR);
}

inline std::filesystem::path fixture(const std::string& name) { return fixture_dir() / name; }

/// Fresh scratch directory under the build tree; removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& hint) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("eca_test_" + hint + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Deterministic text embedder for index tests (no backend involved).
inline eca::Embedder hash_embedder(int dimension) {
    return [dimension](const std::string& text) {
        std::mt19937_64 rng(eca::fnv1a64(text));
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        std::vector<float> vec(static_cast<size_t>(dimension));
        for (auto& v : vec) v = static_cast<float>(dist(rng));
        return vec;
    };
}

inline eca::Conversation tiny_conversation(const std::string& id, int utterances) {
    eca::Conversation conv;
    conv.id = id;
    for (int i = 1; i <= utterances; ++i) {
        eca::Utterance utt;
        utt.id = i;
        utt.speaker = i % 2 ? "A" : "B";
        utt.text = "line " + std::to_string(i);
        utt.gold_emotion = eca::EmotionLabel::neutral;
        conv.utterances.push_back(std::move(utt));
    }
    return conv;
}

}  // namespace ecatest
