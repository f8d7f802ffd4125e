#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "planguard/gateway.hpp"
#include "test_support.hpp"

using namespace planguard;

TEST_SUITE_BEGIN("gateway");

namespace {

ChatRequest simple_request(const std::string& user_text, CallTag tag = CallTag::Planner) {
    ChatRequest req;
    req.model = "test-model";
    req.tag = tag;
    req.messages = {{Role::System, "be brief"}, {Role::User, user_text}};
    return req;
}

}  // namespace

TEST_CASE("render_request is deterministic and role-prefixed") {
    ChatRequest req = simple_request("hello");
    const std::string a = render_request(req);
    const std::string b = render_request(req);
    CHECK(a == b);
    CHECK(a.find("system: be brief\n") != std::string::npos);
    CHECK(a.find("user: hello\n") != std::string::npos);
    CHECK(a.find("model=test-model temperature=0 max_tokens=none tag=planner") !=
          std::string::npos);

    ChatRequest warm = req;
    warm.temperature = 0.7;
    CHECK(render_request(warm) != a);

    ChatRequest capped = req;
    capped.max_tokens = 128;
    CHECK(render_request(capped).find("max_tokens=128") != std::string::npos);
}

TEST_CASE("chat rejects empty message lists and out-of-range temperatures") {
    MockScript script;
    script.strict = false;
    script.expect("", "ok");
    Gateway gateway(std::make_unique<MockBackend>(std::move(script)));
    ChatRequest empty;
    empty.model = "m";
    CHECK_THROWS_AS(gateway.chat(empty), ConfigError);
    ChatRequest hot = simple_request("x");
    hot.temperature = 2.5;
    CHECK_THROWS_AS(gateway.chat(hot), ConfigError);
}

TEST_CASE("request hashes are stable fnv-1a hex") {
    const std::string h = fnv1a_hex("abc");
    CHECK(h.size() == 16);
    CHECK(h == fnv1a_hex("abc"));
    CHECK(h != fnv1a_hex("abd"));
}

TEST_CASE("strict mock replays the scripted reply") {
    MockScript script;
    script.expect("BinanceGetRealTimePrice",
                  "Observation: {\"price\": 45000.23}");
    Gateway gateway(std::make_unique<MockBackend>(std::move(script)));
    const std::string reply =
        gateway.chat(simple_request("call BinanceGetRealTimePrice now"));
    CHECK(reply == "Observation: {\"price\": 45000.23}");
}

TEST_CASE("strict mock rejects non-matching and surplus requests") {
    MockScript script;
    script.expect("expected text", "reply");
    Gateway gateway(std::make_unique<MockBackend>(std::move(script)));
    CHECK_THROWS_AS(gateway.chat(simple_request("something else")), MockMismatch);
}

TEST_CASE("non-strict mock answers with the first matching entry") {
    MockScript script;
    script.strict = false;
    script.expect("alpha", "first");
    script.expect("beta", "second");
    script.expect("alpha", "shadowed");
    Gateway gateway(std::make_unique<MockBackend>(std::move(script)));
    CHECK(gateway.chat(simple_request("beta")) == "second");
    CHECK(gateway.chat(simple_request("alpha")) == "first");
    CHECK(gateway.chat(simple_request("alpha again")) == "first");
    CHECK_THROWS_AS(gateway.chat(simple_request("gamma")), MockMismatch);
}

TEST_CASE("regex mock entries match across lines") {
    MockScript script;
    script.strict = false;
    script.expect("BinancePlaceOrder[\\s\\S]*tag=inspector", "matched", /*is_regex=*/true);
    Gateway gateway(std::make_unique<MockBackend>(std::move(script)));
    CHECK(gateway.chat(simple_request("check BinancePlaceOrder\nmore", CallTag::Inspector)) ==
          "matched");
}

TEST_CASE("transcript records one entry per call with tags and hashes") {
    MockScript script;
    script.strict = false;
    script.expect("", "ok");
    Gateway gateway(std::make_unique<MockBackend>(std::move(script)));
    gateway.chat(simple_request("one", CallTag::Planner));
    gateway.chat(simple_request("two", CallTag::Inspector));
    gateway.chat(simple_request("three", CallTag::Inspector));

    auto transcript = gateway.transcript();
    REQUIRE(transcript.size() == 3);
    CHECK(gateway.count_tag(CallTag::Inspector) == 2);
    CHECK(gateway.count_tag(CallTag::Planner) == 1);
    CHECK(gateway.count_tag(CallTag::Emulator) == 0);
    for (const auto& e : transcript) {
        CHECK(e.request_hash == fnv1a_hex(e.request));
        CHECK(e.attempts == 1);
        CHECK(e.latency_ms == 0);  // deterministic backend
    }
}

TEST_CASE("transcript serialization round-trips byte-stably") {
    MockScript script;
    script.strict = false;
    script.expect("", "reply with \"quotes\" and\nnewlines");
    Gateway gateway(std::make_unique<MockBackend>(std::move(script)));
    gateway.chat(simple_request("x"));
    gateway.chat(simple_request("y", CallTag::QaGen));

    const std::string once = serialize_transcript(gateway.transcript());
    auto parsed = parse_transcript(once);
    CHECK(serialize_transcript(parsed) == once);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[1].tag == CallTag::QaGen);
}

// --- live backend retry behaviour -------------------------------------------

namespace {

// Scripted transport: each element is an HttpResponse or a timeout marker.
class FakeTransport : public Transport {
public:
    struct Step {
        bool throw_timeout = false;
        bool throw_connect = false;
        HttpResponse response;
    };

    explicit FakeTransport(std::vector<Step> steps) : steps_(std::move(steps)) {}

    HttpResponse post(const std::string&, const std::string& body,
                      const std::string&) override {
        last_body = body;
        ++calls;
        const Step& step = steps_.at(std::min(cursor_, steps_.size() - 1));
        ++cursor_;
        if (step.throw_timeout) throw TransportError("read timed out", true);
        if (step.throw_connect) throw TransportError("connection refused", false);
        return step.response;
    }

    int calls = 0;
    std::string last_body;

private:
    std::vector<Step> steps_;
    size_t cursor_ = 0;
};

const std::string kGoodBody =
    R"({"choices": [{"message": {"content": "all good"}}]})";

HttpBackendConfig fast_retry(const std::string& name = "testbackend") {
    HttpBackendConfig cfg;
    cfg.name = name;
    cfg.retry.max_attempts = 3;
    cfg.retry.base_delay_ms = 0;
    cfg.retry.max_delay_ms = 0;
    return cfg;
}

}  // namespace

TEST_CASE("live backend succeeding on attempt 2 records 2 attempts") {
    auto transport = std::make_unique<FakeTransport>(std::vector<FakeTransport::Step>{
        {false, false, {500, "oops"}},
        {false, false, {200, kGoodBody}},
    });
    FakeTransport* raw = transport.get();
    Gateway gateway(std::make_unique<HttpChatBackend>(std::move(transport), fast_retry()));
    CHECK(gateway.chat(simple_request("hi")) == "all good");
    CHECK(raw->calls == 2);
    auto transcript = gateway.transcript();
    REQUIRE(transcript.size() == 1);
    CHECK(transcript[0].attempts == 2);
}

TEST_CASE("retry count never exceeds the configured budget") {
    auto transport = std::make_unique<FakeTransport>(std::vector<FakeTransport::Step>{
        {false, false, {503, "unavailable"}},
    });
    FakeTransport* raw = transport.get();
    Gateway gateway(std::make_unique<HttpChatBackend>(std::move(transport), fast_retry()));
    CHECK_THROWS_AS(gateway.chat(simple_request("hi")), GatewayError);
    CHECK(raw->calls == 3);
}

TEST_CASE("error kinds: timeout, http status, exhausted") {
    {
        auto transport = std::make_unique<FakeTransport>(std::vector<FakeTransport::Step>{
            {true, false, {}},
        });
        Gateway gateway(std::make_unique<HttpChatBackend>(std::move(transport), fast_retry()));
        try {
            gateway.chat(simple_request("hi"));
            FAIL("expected GatewayError");
        } catch (const GatewayError& e) {
            CHECK(e.kind() == GatewayError::Kind::Timeout);
        }
    }
    {
        auto transport = std::make_unique<FakeTransport>(std::vector<FakeTransport::Step>{
            {false, false, {404, "missing"}},
        });
        FakeTransport* raw = transport.get();
        Gateway gateway(std::make_unique<HttpChatBackend>(std::move(transport), fast_retry()));
        try {
            gateway.chat(simple_request("hi"));
            FAIL("expected GatewayError");
        } catch (const GatewayError& e) {
            CHECK(e.kind() == GatewayError::Kind::HttpStatus);
            CHECK(e.status() == 404);
        }
        CHECK(raw->calls == 1);  // 404 is not retryable
    }
    {
        auto transport = std::make_unique<FakeTransport>(std::vector<FakeTransport::Step>{
            {false, true, {}},
        });
        Gateway gateway(std::make_unique<HttpChatBackend>(std::move(transport), fast_retry()));
        try {
            gateway.chat(simple_request("hi"));
            FAIL("expected GatewayError");
        } catch (const GatewayError& e) {
            CHECK(e.kind() == GatewayError::Kind::Exhausted);
        }
    }
}

TEST_CASE("request body follows the wire contract") {
    auto transport = std::make_unique<FakeTransport>(std::vector<FakeTransport::Step>{
        {false, false, {200, kGoodBody}},
    });
    FakeTransport* raw = transport.get();
    Gateway gateway(std::make_unique<HttpChatBackend>(std::move(transport), fast_retry()));
    ChatRequest req = simple_request("payload test");
    req.max_tokens = 64;
    gateway.chat(req);

    auto body = nlohmann::json::parse(raw->last_body);
    CHECK(body.at("model") == "test-model");
    CHECK(body.at("temperature") == 0.0);
    CHECK(body.at("max_tokens") == 64);
    REQUIRE(body.at("messages").size() == 2);
    CHECK(body.at("messages")[0].at("role") == "system");
    CHECK(body.at("messages")[1].at("content") == "payload test");
}

TEST_CASE("backoff delays grow exponentially up to the cap") {
    RetryPolicy policy{5, 250, 4000};
    CHECK(backoff_delay_ms(policy, 1) == 250);
    CHECK(backoff_delay_ms(policy, 2) == 500);
    CHECK(backoff_delay_ms(policy, 3) == 1000);
    CHECK(backoff_delay_ms(policy, 5) == 4000);
    CHECK(is_retryable_status(408));
    CHECK(is_retryable_status(429));
    CHECK(is_retryable_status(500));
    CHECK_FALSE(is_retryable_status(400));
    CHECK_FALSE(is_retryable_status(404));
}

TEST_CASE("httplib transport speaks the wire contract end to end") {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/chat/completions",
                [&](const httplib::Request& req, httplib::Response& res) {
                    ++hits;
                    auto body = nlohmann::json::parse(req.body);
                    const std::string user =
                        body.at("messages").back().at("content").get<std::string>();
                    nlohmann::json reply{
                        {"choices",
                         {{{"message", {{"content", "echo: " + user}}}}}}};
                    res.set_content(reply.dump(), "application/json");
                });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    {
        Gateway gateway(std::make_unique<HttpChatBackend>(
            make_httplib_transport("http://127.0.0.1:" + std::to_string(port)),
            fast_retry()));
        CHECK(gateway.chat(simple_request("ping")) == "echo: ping");
        CHECK(hits == 1);
    }
    server.stop();
    server_thread.join();
}

TEST_SUITE_END();
