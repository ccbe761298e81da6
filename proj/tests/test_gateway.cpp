#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "eca/gateway.hpp"
#include "eca/util.hpp"

#include "support.hpp"

using namespace eca;

namespace {

ModelRequest chat_request(const std::string& content, const std::string& tag = "") {
    ModelRequest request;
    request.kind = RequestKind::chat;
    request.model_id = "m";
    request.messages = {{"user", content}};
    request.trace_tag = tag;
    return request;
}

/// Answers from a user-supplied function; counts calls.
class FnBackend : public Backend {
public:
    explicit FnBackend(std::function<std::string(const ModelRequest&)> fn) : fn_(std::move(fn)) {}
    ModelResponse complete(const ModelRequest& request) override {
        ++calls;
        ModelResponse response;
        response.kind = request.kind;
        if (request.kind == RequestKind::embedding) {
            response.embedding = {1.f, 2.f};
        } else {
            response.content = fn_(request);
        }
        return response;
    }
    std::string describe() const override { return "fn"; }
    int calls = 0;

private:
    std::function<std::string(const ModelRequest&)> fn_;
};

}  // namespace

TEST_CASE("request digests are canonical") {
    const auto a = chat_request("hello");
    auto b = chat_request("hello");
    CHECK(a.digest() == b.digest());

    b.trace_tag = "different-tag";
    CHECK(a.digest() == b.digest());  // instrumentation is not hashed

    b.attempt = 2;
    CHECK(a.digest() != b.digest());  // retries replay distinctly

    auto c = chat_request("hello");
    c.temperature = 0.7;
    CHECK(a.digest() != c.digest());

    ModelRequest v = chat_request("look at this");
    v.kind = RequestKind::vision;
    v.image_png_b64 = "QUJD";
    v.image_content_digest = 42;
    ModelRequest v2 = v;
    v2.image_content_digest = 43;
    CHECK(v.digest() != v2.digest());
    // only pixel content matters, not encoder bytes
    v2.image_content_digest = 42;
    v2.image_png_b64 = "different-encoding";
    CHECK(v.digest() == v2.digest());
}

TEST_CASE("request invariants") {
    ModelRequest vision = chat_request("x");
    vision.kind = RequestKind::vision;
    CHECK_THROWS_AS(vision.validate(), SchemaError);  // no image

    ModelRequest embedding;
    embedding.kind = RequestKind::embedding;
    embedding.model_id = "m";
    embedding.input_text = "text";
    CHECK_NOTHROW(embedding.validate());
    embedding.temperature = 0.5;
    CHECK_THROWS_AS(embedding.validate(), SchemaError);
}

TEST_CASE("cassette record then replay") {
    ecatest::TempDir tmp("cassette");
    const auto file = tmp.path() / "c.json";

    FnBackend upstream([](const ModelRequest&) { return "recorded answer"; });
    {
        CassetteBackend recorder(CassetteMode::record, file, &upstream);
        const auto response = complete(chat_request("q1"), recorder);
        CHECK(response.content == "recorded answer");
        CHECK(recorder.entry_count() == 1);
        // identical request replays from the cassette even in record mode
        complete(chat_request("q1"), recorder);
        CHECK(upstream.calls == 1);
    }

    FailingBackend dead;
    CassetteBackend replay(CassetteMode::replay, file, &dead);
    const auto replayed = complete(chat_request("q1"), replay);
    CHECK(replayed.content == "recorded answer");
    CHECK(dead.calls == 0);  // replay performs no network activity

    CHECK_THROWS_AS(complete(chat_request("unseen"), replay), ReplayMissError);
    CHECK(dead.calls == 0);
}

TEST_CASE("cassette passthrough delegates") {
    ecatest::TempDir tmp("cassette");
    FnBackend upstream([](const ModelRequest&) { return "live"; });
    CassetteBackend pass(CassetteMode::passthrough, tmp.path() / "c.json", &upstream);
    CHECK(complete(chat_request("q"), pass).content == "live");
    CHECK(upstream.calls == 1);
    CHECK(pass.entry_count() == 0);
}

TEST_CASE("complete_with_retry validates and retries") {
    const auto validator = [](const ModelResponse& response) -> std::optional<std::string> {
        if (response.content.find("::") != std::string::npos) return response.content;
        return std::nullopt;
    };

    SUBCASE("first valid answer short-circuits") {
        FnBackend backend([](const ModelRequest&) { return ":: joy"; });
        const auto result =
            complete_with_retry<std::string>(chat_request("q"), backend, {3}, validator);
        CHECK(result == ":: joy");
        CHECK(backend.calls == 1);
    }
    SUBCASE("invalid then valid, replayable through a cassette") {
        ecatest::TempDir tmp("retry");
        FnBackend flaky([](const ModelRequest& request) {
            return request.attempt == 1 ? std::string("garbage") : std::string(":: joy");
        });
        const auto file = tmp.path() / "c.json";
        {
            CassetteBackend recorder(CassetteMode::record, file, &flaky);
            const auto result =
                complete_with_retry<std::string>(chat_request("q"), recorder, {3}, validator);
            CHECK(result == ":: joy");
            CHECK(flaky.calls == 2);
        }
        CassetteBackend replay(CassetteMode::replay, file, nullptr);
        const auto result =
            complete_with_retry<std::string>(chat_request("q"), replay, {3}, validator);
        CHECK(result == ":: joy");
    }
    SUBCASE("exhaustion carries the raw attempts") {
        FnBackend backend([](const ModelRequest&) { return "nope"; });
        try {
            complete_with_retry<std::string>(chat_request("q"), backend, {2}, validator);
            FAIL("expected RetriesExhaustedError");
        } catch (const RetriesExhaustedError& e) {
            CHECK(e.attempts.size() == 2);
            CHECK(e.attempts[0] == "nope");
        }
        CHECK(backend.calls == 2);
    }
    SUBCASE("max_attempts=1 with invalid response") {
        FnBackend backend([](const ModelRequest&) { return "nope"; });
        CHECK_THROWS_AS(
            complete_with_retry<std::string>(chat_request("q"), backend, {1}, validator),
            RetriesExhaustedError);
        CHECK(backend.calls == 1);
    }
    SUBCASE("transport errors consume attempts") {
        FailingBackend backend;
        CHECK_THROWS_AS(
            complete_with_retry<std::string>(chat_request("q"), backend, {3}, validator),
            RetriesExhaustedError);
        CHECK(backend.calls == 3);
    }
}

TEST_CASE("throttle bounds concurrency") {
    Throttle throttle(2, std::chrono::milliseconds(0));
    std::atomic<int> in_flight{0};
    std::atomic<int> peak{0};
    std::vector<std::thread> workers;
    for (int i = 0; i < 10; ++i) {
        workers.emplace_back([&] {
            auto slot = throttle.acquire();
            const int now = ++in_flight;
            int prev = peak.load();
            while (now > prev && !peak.compare_exchange_weak(prev, now)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
            --in_flight;
        });
    }
    for (auto& worker : workers) worker.join();
    CHECK(peak.load() <= 2);
    CHECK(peak.load() >= 1);
}

TEST_CASE("throttle paces dispatches") {
    Throttle throttle(4, std::chrono::milliseconds(60));
    const auto started = std::chrono::steady_clock::now();
    for (int i = 0; i < 3; ++i) {
        auto slot = throttle.acquire();
    }
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();
    CHECK(elapsed >= 120);  // two full intervals between three dispatches
}

TEST_CASE("throttle {1,0} serializes strictly") {
    Throttle throttle(1, std::chrono::milliseconds(0));
    std::vector<int> order;
    std::mutex order_mutex;
    std::atomic<bool> overlap{false};
    std::atomic<int> active{0};
    std::vector<std::thread> workers;
    for (int i = 0; i < 6; ++i) {
        workers.emplace_back([&, i] {
            auto slot = throttle.acquire();
            if (++active > 1) overlap = true;
            {
                std::lock_guard lock(order_mutex);
                order.push_back(i);
            }
            --active;
        });
        // staggered submission keeps the expected FIFO order observable
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    for (auto& worker : workers) worker.join();
    CHECK(!overlap.load());
    CHECK(order.size() == 6);
}

TEST_CASE("http backend speaks the chat/embeddings wire shape") {
    httplib::Server server;
    server.Post("/v1/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        nlohmann::json reply;
        if (body.at("messages").at(0).at("content").is_array()) {
            // vision request: text part + one image part
            const auto& parts = body["messages"][0]["content"];
            if (parts.size() == 2 && parts[1].at("type") == "image_url") {
                reply["choices"] = {{{"message", {{"content", "a 3x3 grid"}}}}};
            } else {
                reply["choices"] = {{{"message", {{"content", "bad parts"}}}}};
            }
        } else {
            reply["choices"] = {{{"message", {{"content", "echo: " + body.at("messages")
                                                                          .at(0)
                                                                          .at("content")
                                                                          .get<std::string>()}}}}};
        }
        reply["usage"] = {{"prompt_tokens", 7}, {"completion_tokens", 3}};
        res.set_content(reply.dump(), "application/json");
    });
    server.Post("/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
        nlohmann::json reply;
        reply["data"] = {{{"embedding", {0.5, -0.25}}}};
        res.set_content(reply.dump(), "application/json");
    });
    server.Post("/v1/limited", [](const httplib::Request&, httplib::Response& res) {
        res.status = 429;
    });

    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread serverThread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpBackend backend("http://127.0.0.1:" + std::to_string(port) + "/v1", 5);

    SUBCASE("chat round trip") {
        const auto response = complete(chat_request("hello there"), backend);
        CHECK(response.content == "echo: hello there");
        CHECK(response.usage.prompt_tokens == 7);
        CHECK(response.usage.completion_tokens == 3);
    }
    SUBCASE("vision carries exactly one image part") {
        ModelRequest request = chat_request("describe");
        request.kind = RequestKind::vision;
        request.image_png_b64 = "QUJD";
        request.image_content_digest = 1;
        CHECK(complete(request, backend).content == "a 3x3 grid");
    }
    SUBCASE("embedding round trip") {
        ModelRequest request;
        request.kind = RequestKind::embedding;
        request.model_id = "m";
        request.input_text = "vectorize me";
        const auto response = complete(request, backend);
        REQUIRE(response.embedding.size() == 2);
        CHECK(response.embedding[0] == doctest::Approx(0.5f));
    }

    server.stop();
    serverThread.join();
}

TEST_CASE("http backend error mapping") {
    httplib::Server server;
    server.Post("/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        res.status = 429;
        res.set_header("Retry-After", "2");
    });
    server.Post("/embeddings", [](const httplib::Request&, httplib::Response& res) {
        res.status = 500;
        res.set_content("boom", "text/plain");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread serverThread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpBackend backend("http://127.0.0.1:" + std::to_string(port), 5);
    try {
        backend.complete(chat_request("x"));
        FAIL("expected RateLimitError");
    } catch (const RateLimitError& e) {
        CHECK(e.retry_after_ms == 2000);
    }
    ModelRequest embedding;
    embedding.kind = RequestKind::embedding;
    embedding.model_id = "m";
    embedding.input_text = "x";
    try {
        backend.complete(embedding);
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(e.status == 500);
        CHECK(e.body == "boom");
    }
    server.stop();
    serverThread.join();

    HttpBackend nowhere("http://127.0.0.1:1", 1);
    CHECK_THROWS_AS(nowhere.complete(chat_request("x")), TransportError);
}

TEST_CASE("cassette file digest is content-based") {
    ecatest::TempDir tmp("digest");
    write_file(tmp.path() / "a.json", "{}");
    write_file(tmp.path() / "b.json", "{}");
    write_file(tmp.path() / "c.json", "{\"x\":1}");
    CHECK(cassette_file_digest(tmp.path() / "a.json") == cassette_file_digest(tmp.path() / "b.json"));
    CHECK(cassette_file_digest(tmp.path() / "a.json") != cassette_file_digest(tmp.path() / "c.json"));
}
