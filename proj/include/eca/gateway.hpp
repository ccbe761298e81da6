#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "eca/errors.hpp"

namespace eca {

enum class RequestKind { chat, vision, embedding };

std::string_view to_string(RequestKind kind);

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ModelRequest {
    RequestKind kind = RequestKind::chat;
    std::string model_id;
    std::vector<ChatMessage> messages;  // chat and vision
    std::string image_png_b64;          // vision: exactly one image per request
    std::uint64_t image_content_digest = 0;  // pixel-level fingerprint of that image
    std::string input_text;             // embedding
    double temperature = 0.0;
    int max_output_tokens = 512;
    int attempt = 1;  // retry attempts replay deterministically under distinct digests

    // Instrumentation only; excluded from both the wire payload and the digest.
    std::string trace_tag;

    void validate() const;
    /// Canonical sorted-key serialization; the image contributes through its
    /// pixel digest so encoder byte differences cannot shift replay digests.
    nlohmann::json canonical() const;
    std::string digest() const;
};

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct ModelResponse {
    RequestKind kind = RequestKind::chat;
    std::string content;           // chat and vision
    std::vector<float> embedding;  // embedding
    TokenUsage usage;
    long latency_ms = 0;

    nlohmann::json to_json() const;
    static ModelResponse from_json(const nlohmann::json& doc);
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual ModelResponse complete(const ModelRequest& request) = 0;
    virtual std::string describe() const = 0;
};

/// Validates the request and checks the response kind matches.
ModelResponse complete(const ModelRequest& request, Backend& backend);

/// OpenAI-compatible HTTP JSON backend (/chat/completions, /embeddings).
/// Credentials come only from the environment (ECA_API_KEY).
class HttpBackend : public Backend {
public:
    explicit HttpBackend(std::string base_url, long timeout_seconds = 120);
    ModelResponse complete(const ModelRequest& request) override;
    std::string describe() const override { return "http:" + base_url_; }

private:
    std::string base_url_;
    std::string origin_;       // scheme://host[:port]
    std::string path_prefix_;  // e.g. /v1
    std::string api_key_;
    long timeout_seconds_;
};

/// Test backend that always fails as if the network were down.
class FailingBackend : public Backend {
public:
    ModelResponse complete(const ModelRequest&) override {
        ++calls;
        throw TransportError("network disabled");
    }
    std::string describe() const override { return "failing"; }
    int calls = 0;
};

enum class CassetteMode { record, replay, passthrough };

/// Digest-keyed record/replay wrapper. Replay mode never touches the upstream
/// backend; record mode serializes writes and persists after every call.
class CassetteBackend : public Backend {
public:
    CassetteBackend(CassetteMode mode, std::filesystem::path file, Backend* upstream);

    ModelResponse complete(const ModelRequest& request) override;
    std::string describe() const override;

    size_t entry_count() const;
    /// Record-mode hook: observe each (digest, request) as it is stored.
    std::function<void(const std::string& digest, const ModelRequest& request)> on_record;

    static std::map<std::string, ModelResponse> load_entries(const std::filesystem::path& file);

private:
    void persist_locked();

    CassetteMode mode_;
    std::filesystem::path file_;
    Backend* upstream_;
    mutable std::mutex mutex_;
    std::map<std::string, ModelResponse> entries_;
};

/// FNV-1a digest of a cassette file's bytes, for provenance records.
std::string cassette_file_digest(const std::filesystem::path& file);

struct RetryPolicy {
    int max_attempts = 3;
};

/// Calls the backend until the validator accepts a response. Transport,
/// rate-limit, backend, and replay-miss errors consume attempts like
/// validation failures do; RetriesExhaustedError carries every raw attempt.
template <typename T>
T complete_with_retry(ModelRequest request, Backend& backend, const RetryPolicy& policy,
                      const std::function<std::optional<T>(const ModelResponse&)>& validator) {
    if (policy.max_attempts < 1) throw RangeError("max_attempts must be >= 1");
    std::vector<std::string> attempts;
    for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
        request.attempt = attempt;
        ModelResponse response;
        try {
            response = complete(request, backend);
        } catch (const RateLimitError& e) {
            attempts.push_back(std::string("rate-limited: ") + e.what());
            if (e.retry_after_ms > 0 && attempt < policy.max_attempts) {
                std::this_thread::sleep_for(std::chrono::milliseconds(
                    std::min<long>(e.retry_after_ms, 10'000)));
            }
            continue;
        } catch (const Error& e) {
            attempts.push_back(std::string("error: ") + e.what());
            continue;
        }
        if (auto value = validator(response)) return *value;
        attempts.push_back(response.kind == RequestKind::embedding ? "<embedding rejected>"
                                                                   : response.content);
    }
    throw RetriesExhaustedError("no valid response after " +
                                    std::to_string(policy.max_attempts) + " attempt(s)",
                                std::move(attempts));
}

/// Concurrency + pacing gate: at most max_concurrent requests in flight and
/// consecutive dispatches at least min_interval apart, FIFO-fair.
class Throttle {
public:
    Throttle(int max_concurrent, std::chrono::milliseconds min_interval);

    class Slot {
    public:
        Slot(Slot&& other) noexcept : owner_(other.owner_) { other.owner_ = nullptr; }
        Slot(const Slot&) = delete;
        Slot& operator=(const Slot&) = delete;
        Slot& operator=(Slot&&) = delete;
        ~Slot();

    private:
        friend class Throttle;
        explicit Slot(Throttle* owner) : owner_(owner) {}
        Throttle* owner_;
    };

    /// Blocks until a slot is free and the pacing interval has elapsed.
    Slot acquire();
    int max_concurrent() const { return max_concurrent_; }

private:
    void release();

    const int max_concurrent_;
    const std::chrono::milliseconds min_interval_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::uint64_t next_ticket_ = 0;
    std::uint64_t serving_ = 0;
    int in_flight_ = 0;
    std::chrono::steady_clock::time_point last_dispatch_;
    bool dispatched_once_ = false;
};

/// Backend decorator that funnels every call through a shared throttle.
class ThrottledBackend : public Backend {
public:
    ThrottledBackend(Backend& inner, Throttle& throttle) : inner_(inner), throttle_(throttle) {}
    ModelResponse complete(const ModelRequest& request) override {
        auto slot = throttle_.acquire();
        return inner_.complete(request);
    }
    std::string describe() const override { return "throttled:" + inner_.describe(); }

private:
    Backend& inner_;
    Throttle& throttle_;
};

std::string base64_encode(std::string_view data);

}  // namespace eca
