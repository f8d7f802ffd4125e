#include "planguard/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "planguard/domain.hpp"

namespace planguard {

std::string to_string(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

std::string to_string(CallTag t) {
    switch (t) {
        case CallTag::Planner: return "planner";
        case CallTag::Emulator: return "emulator";
        case CallTag::Inspector: return "inspector";
        case CallTag::JudgeSafety: return "judge_safety";
        case CallTag::JudgeHelpfulness: return "judge_helpfulness";
        case CallTag::QaGen: return "qa_gen";
    }
    return "planner";
}

CallTag call_tag_from_string(std::string_view s) {
    if (s == "planner") return CallTag::Planner;
    if (s == "emulator") return CallTag::Emulator;
    if (s == "inspector") return CallTag::Inspector;
    if (s == "judge_safety") return CallTag::JudgeSafety;
    if (s == "judge_helpfulness") return CallTag::JudgeHelpfulness;
    if (s == "qa_gen") return CallTag::QaGen;
    throw SchemaError("tag: unknown value '" + std::string(s) + "'");
}

std::string render_request(const ChatRequest& req) {
    std::string out;
    for (const auto& m : req.messages) {
        out += to_string(m.role);
        out += ": ";
        out += m.content;
        out += '\n';
    }
    out += "model=" + req.model;
    out += " temperature=" + format_number(req.temperature);
    out += " max_tokens=" + (req.max_tokens ? std::to_string(*req.max_tokens)
                                            : std::string("none"));
    out += " tag=" + to_string(req.tag);
    return out;
}

std::string fnv1a_hex(std::string_view bytes) {
    unsigned long long h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", h);
    return std::string(buf);
}

// --- mock backend ----------------------------------------------------------

MockScript MockScript::parse(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("entries") || !j.at("entries").is_array()) {
        throw SchemaError("mock script: expected {strict?, entries: [...]}");
    }
    MockScript script;
    script.strict = j.value("strict", true);
    for (const auto& e : j.at("entries")) {
        MockEntry entry;
        entry.pattern = e.at("match").get<std::string>();
        entry.is_regex = e.value("kind", "substring") == "regex";
        entry.reply = e.at("reply").get<std::string>();
        script.entries.push_back(std::move(entry));
    }
    return script;
}

MockScript MockScript::load(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw SchemaError("mock script '" + path + "': not valid JSON");
    return parse(j);
}

namespace {

bool entry_matches(const MockEntry& entry, const std::string& rendered) {
    if (entry.is_regex) {
        return std::regex_search(rendered, std::regex(entry.pattern));
    }
    return rendered.find(entry.pattern) != std::string::npos;
}

std::string head_of(const std::string& s, size_t n = 400) {
    return s.size() <= n ? s : s.substr(0, n) + "...";
}

}  // namespace

BackendReply MockBackend::complete(const ChatRequest& req) {
    const std::string rendered = render_request(req);
    std::lock_guard<std::mutex> lock(mutex_);
    if (script_.strict) {
        if (cursor_ >= script_.entries.size()) {
            throw MockMismatch("mock script exhausted; request was:\n" + head_of(rendered));
        }
        const MockEntry& entry = script_.entries[cursor_];
        if (!entry_matches(entry, rendered)) {
            throw MockMismatch("strict mock entry " + std::to_string(cursor_) +
                               " (pattern '" + head_of(entry.pattern, 120) +
                               "') does not match request:\n" + head_of(rendered));
        }
        ++cursor_;
        return {entry.reply, 1, 0};
    }
    for (const auto& entry : script_.entries) {
        if (entry_matches(entry, rendered)) return {entry.reply, 1, 0};
    }
    throw MockMismatch("no mock entry matches request:\n" + head_of(rendered));
}

// --- live backend ----------------------------------------------------------

bool is_retryable_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

int backoff_delay_ms(const RetryPolicy& policy, int attempt) {
    long long delay = policy.base_delay_ms;
    for (int i = 1; i < attempt; ++i) delay *= 2;
    return static_cast<int>(std::min<long long>(delay, policy.max_delay_ms));
}

namespace {

class HttplibTransport : public Transport {
public:
    HttplibTransport(std::string base_url, int timeout_seconds)
        : client_(base_url), base_url_(std::move(base_url)) {
        client_.set_connection_timeout(timeout_seconds);
        client_.set_read_timeout(timeout_seconds);
        client_.set_write_timeout(timeout_seconds);
    }

    HttpResponse post(const std::string& path, const std::string& body,
                      const std::string& bearer_token) override {
        httplib::Headers headers;
        if (!bearer_token.empty()) {
            headers.emplace("Authorization", "Bearer " + bearer_token);
        }
        auto result = client_.Post(path, headers, body, "application/json");
        if (!result) {
            const bool timeout = result.error() == httplib::Error::ConnectionTimeout ||
                                 result.error() == httplib::Error::Read ||
                                 result.error() == httplib::Error::Write;
            throw TransportError("transport failure against " + base_url_ + ": " +
                                     httplib::to_string(result.error()),
                                 timeout);
        }
        return {result->status, result->body};
    }

private:
    httplib::Client client_;
    std::string base_url_;
};

std::string api_key_for(const std::string& backend_name) {
    std::string var = "GATEWAY_API_KEY_";
    for (char c : backend_name) var += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const char* value = std::getenv(var.c_str());
    return value ? value : "";
}

nlohmann::json request_body(const ChatRequest& req) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : req.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    nlohmann::json body{{"model", req.model},
                        {"messages", std::move(messages)},
                        {"temperature", req.temperature}};
    if (req.max_tokens) body["max_tokens"] = *req.max_tokens;
    return body;
}

std::string parse_completion(const std::string& body) {
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || !j.at("choices").is_array() ||
        j.at("choices").empty()) {
        throw GatewayError(GatewayError::Kind::HttpStatus,
                           "malformed completion body: " + head_of(body), 200);
    }
    const auto& first = j.at("choices").at(0);
    if (!first.contains("message") || !first.at("message").contains("content")) {
        throw GatewayError(GatewayError::Kind::HttpStatus,
                           "completion choice lacks message.content", 200);
    }
    return first.at("message").at("content").get<std::string>();
}

}  // namespace

std::unique_ptr<Transport> make_httplib_transport(const std::string& base_url,
                                                  int timeout_seconds) {
    return std::make_unique<HttplibTransport>(base_url, timeout_seconds);
}

HttpChatBackend::HttpChatBackend(std::unique_ptr<Transport> transport,
                                 HttpBackendConfig config)
    : transport_(std::move(transport)),
      config_(std::move(config)),
      bearer_(api_key_for(config_.name)) {}

BackendReply HttpChatBackend::complete(const ChatRequest& req) {
    const std::string body = request_body(req).dump();
    const auto start = std::chrono::steady_clock::now();
    auto elapsed_ms = [&start] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - start)
            .count();
    };

    bool last_was_timeout = false;
    std::string last_failure;
    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
        try {
            HttpResponse resp = transport_->post(config_.path, body, bearer_);
            if (resp.status == 200) {
                return {parse_completion(resp.body), attempt, elapsed_ms()};
            }
            if (!is_retryable_status(resp.status)) {
                throw GatewayError(GatewayError::Kind::HttpStatus,
                                   "chat endpoint returned status " +
                                       std::to_string(resp.status) + ": " +
                                       head_of(resp.body),
                                   resp.status);
            }
            last_was_timeout = false;
            last_failure = "status " + std::to_string(resp.status);
        } catch (const TransportError& e) {
            last_was_timeout = e.timeout();
            last_failure = e.what();
        }
        if (attempt < config_.retry.max_attempts) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(backoff_delay_ms(config_.retry, attempt)));
        }
    }
    const auto kind = last_was_timeout ? GatewayError::Kind::Timeout
                                       : GatewayError::Kind::Exhausted;
    throw GatewayError(kind, "chat call failed after " +
                                 std::to_string(config_.retry.max_attempts) +
                                 " attempts; last failure: " + last_failure);
}

// --- gateway ---------------------------------------------------------------

ChatExchange Gateway::chat_ex(const ChatRequest& req) {
    if (req.messages.empty()) {
        throw ConfigError("messages", "chat request needs at least one message");
    }
    if (req.temperature < 0.0 || req.temperature > 2.0) {
        throw ConfigError("temperature", "must lie in [0, 2]");
    }
    const std::string rendered = render_request(req);
    const std::string hash = fnv1a_hex(rendered);
    BackendReply reply = backend_->complete(req);

    TranscriptEntry entry;
    entry.tag = req.tag;
    entry.request_hash = hash;
    entry.request = rendered;
    entry.response = reply.text;
    entry.attempts = reply.attempts;
    entry.latency_ms = backend_->deterministic() ? 0 : reply.latency_ms;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        entries_.push_back(std::move(entry));
    }
    return {reply.text, hash};
}

std::vector<TranscriptEntry> Gateway::transcript() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_;
}

size_t Gateway::count_tag(CallTag tag) const {
    std::lock_guard<std::mutex> lock(mutex_);
    size_t n = 0;
    for (const auto& e : entries_) {
        if (e.tag == tag) ++n;
    }
    return n;
}

void Gateway::write_transcript(const std::string& path) const {
    write_file(path, serialize_transcript(transcript()));
}

void to_json(nlohmann::json& j, const TranscriptEntry& e) {
    j = nlohmann::json{{"tag", to_string(e.tag)},
                       {"request_hash", e.request_hash},
                       {"request", e.request},
                       {"response", e.response},
                       {"attempts", e.attempts},
                       {"latency_ms", e.latency_ms}};
}

void from_json(const nlohmann::json& j, TranscriptEntry& e) {
    e.tag = call_tag_from_string(j.at("tag").get<std::string>());
    e.request_hash = j.at("request_hash").get<std::string>();
    e.request = j.at("request").get<std::string>();
    e.response = j.at("response").get<std::string>();
    e.attempts = j.at("attempts").get<int>();
    e.latency_ms = j.at("latency_ms").get<long>();
}

std::string serialize_transcript(const std::vector<TranscriptEntry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        out += nlohmann::json(e).dump();
        out += '\n';
    }
    return out;
}

std::vector<TranscriptEntry> parse_transcript(const std::string& text) {
    std::vector<TranscriptEntry> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw SchemaError("transcript line is not valid JSON");
        out.push_back(j.get<TranscriptEntry>());
    }
    return out;
}

}  // namespace planguard
