#include "eca/gateway.hpp"

#include <algorithm>
#include <cstdlib>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "eca/util.hpp"

namespace eca {

std::string_view to_string(RequestKind kind) {
    switch (kind) {
        case RequestKind::chat: return "chat";
        case RequestKind::vision: return "vision";
        case RequestKind::embedding: return "embedding";
    }
    return "chat";
}

void ModelRequest::validate() const {
    if (model_id.empty()) throw SchemaError("request has no model_id");
    switch (kind) {
        case RequestKind::chat:
            if (messages.empty()) throw SchemaError("chat request has no messages");
            if (!image_png_b64.empty()) throw SchemaError("chat request carries an image");
            break;
        case RequestKind::vision:
            if (messages.empty()) throw SchemaError("vision request has no messages");
            if (image_png_b64.empty()) {
                throw SchemaError("vision request must carry exactly one image");
            }
            break;
        case RequestKind::embedding:
            if (input_text.empty()) throw SchemaError("embedding request has no input text");
            if (temperature != 0.0 || !messages.empty()) {
                throw SchemaError("embedding request must not carry sampling params or messages");
            }
            break;
    }
}

nlohmann::json ModelRequest::canonical() const {
    nlohmann::json doc;
    doc["kind"] = std::string(to_string(kind));
    doc["model"] = model_id;
    doc["attempt"] = attempt;
    switch (kind) {
        case RequestKind::chat:
        case RequestKind::vision: {
            nlohmann::json msgs = nlohmann::json::array();
            for (const auto& message : messages) {
                msgs.push_back({{"content", message.content}, {"role", message.role}});
            }
            doc["messages"] = std::move(msgs);
            doc["temperature"] = temperature;
            doc["max_output_tokens"] = max_output_tokens;
            if (kind == RequestKind::vision) {
                doc["image_digest"] = to_hex(image_content_digest);
            }
            break;
        }
        case RequestKind::embedding:
            doc["input"] = input_text;
            break;
    }
    return doc;
}

std::string ModelRequest::digest() const {
    return to_hex(fnv1a64(canonical().dump()));
}

nlohmann::json ModelResponse::to_json() const {
    nlohmann::json doc;
    doc["kind"] = std::string(to_string(kind));
    if (kind == RequestKind::embedding) {
        doc["embedding"] = embedding;
    } else {
        doc["content"] = content;
    }
    doc["usage"] = {{"prompt_tokens", usage.prompt_tokens},
                    {"completion_tokens", usage.completion_tokens}};
    doc["latency_ms"] = latency_ms;
    return doc;
}

ModelResponse ModelResponse::from_json(const nlohmann::json& doc) {
    ModelResponse response;
    const std::string kind = doc.value("kind", "chat");
    if (kind == "embedding") {
        response.kind = RequestKind::embedding;
        response.embedding = doc.at("embedding").get<std::vector<float>>();
    } else {
        response.kind = kind == "vision" ? RequestKind::vision : RequestKind::chat;
        response.content = doc.value("content", "");
    }
    if (doc.contains("usage")) {
        response.usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0L);
        response.usage.completion_tokens = doc["usage"].value("completion_tokens", 0L);
    }
    response.latency_ms = doc.value("latency_ms", 0L);
    return response;
}

ModelResponse complete(const ModelRequest& request, Backend& backend) {
    request.validate();
    ModelResponse response = backend.complete(request);
    const RequestKind want =
        request.kind == RequestKind::vision ? RequestKind::chat : request.kind;
    const RequestKind got = response.kind == RequestKind::vision ? RequestKind::chat : response.kind;
    if (want != got) {
        throw BackendError("response kind does not match request kind", 0, "");
    }
    response.kind = request.kind;
    return response;
}

// --- HTTP backend -----------------------------------------------------------

HttpBackend::HttpBackend(std::string base_url, long timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {
    const auto scheme_end = base_url_.find("://");
    const size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = base_url_.find('/', host_start);
    if (path_start == std::string::npos) {
        origin_ = base_url_;
    } else {
        origin_ = base_url_.substr(0, path_start);
        path_prefix_ = base_url_.substr(path_start);
        while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
    if (const char* key = std::getenv("ECA_API_KEY")) api_key_ = key;
}

ModelResponse HttpBackend::complete(const ModelRequest& request) {
    nlohmann::json body;
    std::string path;
    if (request.kind == RequestKind::embedding) {
        path = path_prefix_ + "/embeddings";
        body["model"] = request.model_id;
        body["input"] = request.input_text;
    } else {
        path = path_prefix_ + "/chat/completions";
        body["model"] = request.model_id;
        body["temperature"] = request.temperature;
        body["max_tokens"] = request.max_output_tokens;
        nlohmann::json msgs = nlohmann::json::array();
        for (size_t i = 0; i < request.messages.size(); ++i) {
            const auto& message = request.messages[i];
            if (request.kind == RequestKind::vision && i + 1 == request.messages.size()) {
                // The image rides on the last message as an OpenAI-style part list.
                nlohmann::json parts = nlohmann::json::array();
                parts.push_back({{"type", "text"}, {"text", message.content}});
                parts.push_back(
                    {{"type", "image_url"},
                     {"image_url",
                      {{"url", "data:image/png;base64," + request.image_png_b64}}}});
                msgs.push_back({{"role", message.role}, {"content", std::move(parts)}});
            } else {
                msgs.push_back({{"role", message.role}, {"content", message.content}});
            }
        }
        body["messages"] = std::move(msgs);
    }

    httplib::Client client(origin_);
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto started = std::chrono::steady_clock::now();
    auto result = client.Post(path, headers, body.dump(), "application/json");
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();

    if (!result) {
        throw TransportError("POST " + origin_ + path + ": " + httplib::to_string(result.error()));
    }
    if (result->status == 429) {
        long retry_after_ms = 1000;
        if (result->has_header("Retry-After")) {
            try {
                retry_after_ms = std::stol(result->get_header_value("Retry-After")) * 1000;
            } catch (const std::exception&) {
            }
        }
        throw RateLimitError("rate limited by " + origin_, retry_after_ms);
    }
    if (result->status < 200 || result->status >= 300) {
        throw BackendError("POST " + path + " returned " + std::to_string(result->status),
                           result->status, result->body);
    }

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::parse_error& e) {
        throw BackendError(std::string("unparseable backend response: ") + e.what(),
                           result->status, result->body);
    }

    ModelResponse response;
    response.kind = request.kind;
    response.latency_ms = elapsed;
    try {
        if (request.kind == RequestKind::embedding) {
            response.embedding = doc.at("data").at(0).at("embedding").get<std::vector<float>>();
        } else {
            response.content =
                doc.at("choices").at(0).at("message").at("content").get<std::string>();
        }
        if (doc.contains("usage")) {
            response.usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0L);
            response.usage.completion_tokens = doc["usage"].value("completion_tokens", 0L);
        }
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("unexpected backend response shape: ") + e.what(),
                           result->status, result->body);
    }
    return response;
}

// --- Cassette ----------------------------------------------------------------

CassetteBackend::CassetteBackend(CassetteMode mode, std::filesystem::path file, Backend* upstream)
    : mode_(mode), file_(std::move(file)), upstream_(upstream) {
    if (mode_ != CassetteMode::replay && upstream_ == nullptr) {
        throw ConfigError("cassette mode requires an upstream backend");
    }
    if (mode_ == CassetteMode::replay ||
        (mode_ == CassetteMode::record && std::filesystem::exists(file_))) {
        entries_ = load_entries(file_);
    }
}

std::map<std::string, ModelResponse> CassetteBackend::load_entries(
    const std::filesystem::path& file) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(file));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("cassette " + file.string() + ": " + e.what());
    }
    std::map<std::string, ModelResponse> entries;
    for (const auto& [digest, node] : doc.items()) {
        entries.emplace(digest, ModelResponse::from_json(node));
    }
    return entries;
}

ModelResponse CassetteBackend::complete(const ModelRequest& request) {
    const std::string digest = request.digest();
    if (mode_ == CassetteMode::passthrough) return upstream_->complete(request);
    if (mode_ == CassetteMode::replay) {
        std::lock_guard lock(mutex_);
        const auto it = entries_.find(digest);
        if (it == entries_.end()) {
            throw ReplayMissError("cassette " + file_.string() + " has no entry for digest " +
                                  digest + " (" + std::string(to_string(request.kind)) + ")");
        }
        return it->second;
    }
    // record: reuse an existing entry, otherwise call upstream and persist.
    {
        std::lock_guard lock(mutex_);
        const auto it = entries_.find(digest);
        if (it != entries_.end()) return it->second;
    }
    ModelResponse response = upstream_->complete(request);
    {
        std::lock_guard lock(mutex_);
        entries_[digest] = response;
        persist_locked();
    }
    if (on_record) on_record(digest, request);
    return response;
}

void CassetteBackend::persist_locked() {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [digest, response] : entries_) {
        doc[digest] = response.to_json();
    }
    write_file(file_, doc.dump(2) + "\n");
}

std::string CassetteBackend::describe() const {
    // Filename only: run provenance must not depend on checkout location.
    switch (mode_) {
        case CassetteMode::record: return "record:" + file_.filename().string();
        case CassetteMode::replay: return "replay:" + file_.filename().string();
        case CassetteMode::passthrough: return "passthrough:" + upstream_->describe();
    }
    return "cassette";
}

size_t CassetteBackend::entry_count() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::string cassette_file_digest(const std::filesystem::path& file) {
    return to_hex(fnv1a64(read_file(file)));
}

// --- Throttle ----------------------------------------------------------------

Throttle::Throttle(int max_concurrent, std::chrono::milliseconds min_interval)
    : max_concurrent_(max_concurrent), min_interval_(min_interval) {
    if (max_concurrent < 1) throw RangeError("max_concurrent must be >= 1");
    if (min_interval.count() < 0) throw RangeError("min_interval must be >= 0");
}

Throttle::Slot Throttle::acquire() {
    std::unique_lock lock(mutex_);
    const std::uint64_t ticket = next_ticket_++;
    cv_.wait(lock, [&] { return serving_ == ticket && in_flight_ < max_concurrent_; });
    if (min_interval_.count() > 0 && dispatched_once_) {
        auto next_allowed = last_dispatch_ + min_interval_;
        while (std::chrono::steady_clock::now() < next_allowed) {
            cv_.wait_until(lock, next_allowed);
        }
    }
    ++in_flight_;
    ++serving_;
    last_dispatch_ = std::chrono::steady_clock::now();
    dispatched_once_ = true;
    cv_.notify_all();
    return Slot(this);
}

void Throttle::release() {
    {
        std::lock_guard lock(mutex_);
        --in_flight_;
    }
    cv_.notify_all();
}

Throttle::Slot::~Slot() {
    if (owner_) owner_->release();
}

// --- base64 ------------------------------------------------------------------

std::string base64_encode(std::string_view data) {
    static const char alphabet[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    size_t i = 0;
    while (i + 3 <= data.size()) {
        const unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                           (static_cast<unsigned char>(data[i + 1]) << 8) |
                           static_cast<unsigned char>(data[i + 2]);
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back(alphabet[v & 63]);
        i += 3;
    }
    const size_t rest = data.size() - i;
    if (rest == 1) {
        const unsigned v = static_cast<unsigned char>(data[i]) << 16;
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.append("==");
    } else if (rest == 2) {
        const unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                           (static_cast<unsigned char>(data[i + 1]) << 8);
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

}  // namespace eca
