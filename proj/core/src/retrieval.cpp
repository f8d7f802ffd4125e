#include "planguard/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace planguard {

namespace {
constexpr double kK1 = 1.2;
constexpr double kB = 0.75;
}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current += static_cast<char>(std::tolower(c));
        } else if (!current.empty()) {
            if (current.size() >= 2) tokens.push_back(current);
            current.clear();
        }
    }
    if (current.size() >= 2) tokens.push_back(current);
    return tokens;
}

RegulationIndex build_index(const Constitution& view) {
    if (view.regulations.empty()) throw EmptyConstitution();
    RegulationIndex index;
    index.regulations = view.regulations;
    long total_len = 0;
    for (const auto& reg : view.regulations) {
        auto tokens = tokenize(reg.text);
        auto& tf = index.entries[reg.id];
        for (const auto& t : tokens) ++tf[t];
        index.doc_lengths[reg.id] = static_cast<int>(tokens.size());
        total_len += static_cast<long>(tokens.size());
        for (const auto& [token, count] : tf) {
            (void)count;
            ++index.df[token];
        }
    }
    index.corpus_size = static_cast<int>(view.regulations.size());
    index.avg_doc_len =
        total_len > 0 ? static_cast<double>(total_len) / index.corpus_size : 1.0;
    return index;
}

RetrievalQuery compose_query(const Scenario& s, const Trajectory& t,
                             const std::optional<Action>& candidate) {
    std::string text = s.instruction;
    for (const auto& step : t.steps) {
        text += '\n';
        text += step.action.tool;
        text += ' ';
        text += canonicalize(step.action.input);
    }
    if (candidate) {
        text += '\n';
        text += candidate->tool;
        text += ' ';
        text += canonicalize(candidate->input);
    }
    return {text};
}

std::vector<ScoredRegulation> retrieve(const RegulationIndex& index,
                                       const RetrievalQuery& query, int k) {
    if (k < 1) throw ConfigError("top_k", "must be at least 1");
    const auto query_tokens = tokenize(query.text);
    const double n = index.corpus_size;

    std::vector<ScoredRegulation> scored;
    scored.reserve(index.regulations.size());
    for (const auto& reg : index.regulations) {
        const auto& tf = index.entries.at(reg.id);
        const double len = index.doc_lengths.at(reg.id);
        double score = 0.0;
        for (const auto& token : query_tokens) {
            auto tf_it = tf.find(token);
            if (tf_it == tf.end()) continue;
            const double f = tf_it->second;
            const double df = index.df.at(token);
            const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
            const double denom = f + kK1 * (1.0 - kB + kB * len / index.avg_doc_len);
            score += idf * (f * (kK1 + 1.0)) / denom;
        }
        scored.push_back({reg, score});
    }
    std::sort(scored.begin(), scored.end(),
              [](const ScoredRegulation& a, const ScoredRegulation& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.regulation.id < b.regulation.id;
              });
    const size_t take = std::min<size_t>(static_cast<size_t>(k), scored.size());
    scored.resize(take);
    return scored;
}

// --- remote embedding backend ----------------------------------------------

namespace {

std::string embedding_api_key(const std::string& name) {
    std::string var = "GATEWAY_API_KEY_";
    for (char c : name) var += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const char* value = std::getenv(var.c_str());
    return value ? value : "";
}

}  // namespace

EmbeddingClient::EmbeddingClient(std::unique_ptr<Transport> transport, Config config)
    : transport_(std::move(transport)),
      config_(std::move(config)),
      bearer_(embedding_api_key(config_.name)) {}

std::vector<std::vector<double>> EmbeddingClient::embed(
    const std::vector<std::string>& inputs) {
    nlohmann::json body{{"model", config_.model}, {"inputs", inputs}};
    const std::string payload = body.dump();

    bool last_was_timeout = false;
    std::string last_failure;
    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
        try {
            HttpResponse resp = transport_->post(config_.path, payload, bearer_);
            if (resp.status == 200) {
                nlohmann::json j = nlohmann::json::parse(resp.body, nullptr, false);
                if (j.is_discarded() || !j.contains("vectors") ||
                    !j.at("vectors").is_array()) {
                    throw GatewayError(GatewayError::Kind::HttpStatus,
                                       "malformed embedding response", 200);
                }
                auto vectors = j.at("vectors").get<std::vector<std::vector<double>>>();
                if (vectors.size() != inputs.size()) {
                    throw GatewayError(GatewayError::Kind::HttpStatus,
                                       "embedding response count mismatch", 200);
                }
                return vectors;
            }
            if (!is_retryable_status(resp.status)) {
                throw GatewayError(GatewayError::Kind::HttpStatus,
                                   "embedding endpoint returned status " +
                                       std::to_string(resp.status),
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
    throw GatewayError(last_was_timeout ? GatewayError::Kind::Timeout
                                        : GatewayError::Kind::Exhausted,
                       "embedding call failed after " +
                           std::to_string(config_.retry.max_attempts) +
                           " attempts; last failure: " + last_failure);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) return 0.0;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<ScoredRegulation> retrieve_embedding(const Constitution& view,
                                                 const RetrievalQuery& query, int k,
                                                 EmbeddingClient& client) {
    if (view.regulations.empty()) throw EmptyConstitution();
    if (k < 1) throw ConfigError("top_k", "must be at least 1");

    std::vector<std::string> inputs;
    inputs.reserve(view.regulations.size() + 1);
    inputs.push_back(query.text);
    for (const auto& reg : view.regulations) inputs.push_back(reg.text);
    auto vectors = client.embed(inputs);

    std::vector<ScoredRegulation> scored;
    scored.reserve(view.regulations.size());
    for (size_t i = 0; i < view.regulations.size(); ++i) {
        const double cos = cosine_similarity(vectors[0], vectors[i + 1]);
        scored.push_back({view.regulations[i], std::max(0.0, cos)});
    }
    std::sort(scored.begin(), scored.end(),
              [](const ScoredRegulation& a, const ScoredRegulation& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.regulation.id < b.regulation.id;
              });
    scored.resize(std::min<size_t>(static_cast<size_t>(k), scored.size()));
    return scored;
}

}  // namespace planguard
