#pragma once

// Provider-agnostic chat-completion client shared by the planner, emulator,
// inspector, judges, and QA generation. One wire contract:
//
//   request  {model, messages: [{role, content}], temperature, max_tokens?}
//   response {choices: [{message: {content}}]}
//
// Backends: a live HTTP endpoint (bearer token from GATEWAY_API_KEY_<NAME>)
// and a deterministic scripted mock. Every exchange is appended to the run
// transcript; the hash of the rendered request is the stable reference other
// records use to point back at an exchange.

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "planguard/errors.hpp"

namespace planguard {

enum class Role { System, User, Assistant };

std::string to_string(Role r);

struct ChatMessage {
    Role role = Role::User;
    std::string content;
};

enum class CallTag { Planner, Emulator, Inspector, JudgeSafety, JudgeHelpfulness, QaGen };

std::string to_string(CallTag t);
CallTag call_tag_from_string(std::string_view s);

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    std::optional<int> max_tokens;
    CallTag tag = CallTag::Planner;
};

// Deterministic text form of a request: one role-prefixed line per message,
// then a parameter line. Mock matching and transcript hashing both run over
// this rendering.
std::string render_request(const ChatRequest& req);

std::string fnv1a_hex(std::string_view bytes);

class GatewayError : public Error {
public:
    enum class Kind { Timeout, HttpStatus, Exhausted };

    GatewayError(Kind kind, const std::string& message, int status = 0)
        : Error(message), kind_(kind), status_(status) {}
    Kind kind() const { return kind_; }
    int status() const { return status_; }

private:
    Kind kind_;
    int status_;
};

class MockMismatch : public Error {
public:
    explicit MockMismatch(const std::string& message) : Error(message) {}
};

struct MockEntry {
    std::string pattern;
    bool is_regex = false;
    std::string reply;
};

// Scripted replies. Strict scripts consume entries in order and fail on the
// first request that does not match its entry; non-strict scripts answer
// each request with the first matching entry (entries are reusable).
struct MockScript {
    std::vector<MockEntry> entries;
    bool strict = true;

    static MockScript parse(const nlohmann::json& j);
    static MockScript load(const std::string& path);

    MockScript& expect(std::string pattern, std::string reply, bool is_regex = false) {
        entries.push_back({std::move(pattern), is_regex, std::move(reply)});
        return *this;
    }
};

struct BackendReply {
    std::string text;
    int attempts = 1;
    long latency_ms = 0;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual BackendReply complete(const ChatRequest& req) = 0;
    // Deterministic backends record zero latency so transcripts are
    // byte-identical across executions.
    virtual bool deterministic() const = 0;
};

class MockBackend : public ChatBackend {
public:
    explicit MockBackend(MockScript script) : script_(std::move(script)) {}
    BackendReply complete(const ChatRequest& req) override;
    bool deterministic() const override { return true; }

private:
    MockScript script_;
    size_t cursor_ = 0;
    std::mutex mutex_;
};

// Transport abstraction under the live backend; tests substitute a fake.
struct HttpResponse {
    int status = 0;
    std::string body;
};

class TransportError : public Error {
public:
    TransportError(const std::string& message, bool timeout)
        : Error(message), timeout_(timeout) {}
    bool timeout() const { return timeout_; }

private:
    bool timeout_;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const std::string& path, const std::string& body,
                              const std::string& bearer_token) = 0;
};

// cpp-httplib transport against a base URL such as "https://api.example.com".
std::unique_ptr<Transport> make_httplib_transport(const std::string& base_url,
                                                  int timeout_seconds = 60);

struct RetryPolicy {
    int max_attempts = 3;
    int base_delay_ms = 250;
    int max_delay_ms = 4000;
};

struct HttpBackendConfig {
    std::string name;                          // selects GATEWAY_API_KEY_<NAME>
    std::string path = "/v1/chat/completions";
    RetryPolicy retry;
};

bool is_retryable_status(int status);
int backoff_delay_ms(const RetryPolicy& policy, int attempt);  // attempt is 1-based

class HttpChatBackend : public ChatBackend {
public:
    HttpChatBackend(std::unique_ptr<Transport> transport, HttpBackendConfig config);
    BackendReply complete(const ChatRequest& req) override;
    bool deterministic() const override { return false; }

private:
    std::unique_ptr<Transport> transport_;
    HttpBackendConfig config_;
    std::string bearer_;
};

struct TranscriptEntry {
    CallTag tag = CallTag::Planner;
    std::string request_hash;
    std::string request;
    std::string response;
    int attempts = 1;
    long latency_ms = 0;
};

void to_json(nlohmann::json& j, const TranscriptEntry& e);
void from_json(const nlohmann::json& j, TranscriptEntry& e);

struct ChatExchange {
    std::string text;
    std::string request_hash;
};

// The gateway owns one backend and the transcript. Shareable across
// concurrent scenario runs; transcript appends are serialized internally.
class Gateway {
public:
    explicit Gateway(std::unique_ptr<ChatBackend> backend)
        : backend_(std::move(backend)) {}

    std::string chat(const ChatRequest& req) { return chat_ex(req).text; }
    ChatExchange chat_ex(const ChatRequest& req);

    bool deterministic() const { return backend_->deterministic(); }

    std::vector<TranscriptEntry> transcript() const;
    size_t count_tag(CallTag tag) const;
    void write_transcript(const std::string& path) const;  // line-delimited JSON

private:
    std::unique_ptr<ChatBackend> backend_;
    mutable std::mutex mutex_;
    std::vector<TranscriptEntry> entries_;
};

std::vector<TranscriptEntry> parse_transcript(const std::string& text);
std::string serialize_transcript(const std::vector<TranscriptEntry>& entries);

}  // namespace planguard
