#pragma once

// Per-step regulation retrieval. The default backend is an in-memory lexical
// index scored with BM25 (k1 = 1.2, b = 0.75):
//
//   idf(t)      = ln(1 + (N - df(t) + 0.5) / (df(t) + 0.5))
//   tf_norm(f)  = f * (k1 + 1) / (f + k1 * (1 - b + b * len / avgdl))
//   score(D, Q) = sum over query tokens (repeats included) of idf * tf_norm
//
// Tokenization: lowercase, split on non-alphanumeric, tokens shorter than 2
// characters dropped. Results are sorted by (score desc, id asc) and always
// min(k, corpus size) long; zero-score entries are kept — the inspector's
// relevance judgment is the semantic filter.
//
// An optional remote backend embeds texts through an HTTP endpoint and
// scores by cosine similarity, reusing the gateway's transport and retry
// policy.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planguard/constitution.hpp"
#include "planguard/domain.hpp"
#include "planguard/gateway.hpp"

namespace planguard {

enum class RetrievalBackend { Lexical, RemoteEmbedding };

std::vector<std::string> tokenize(std::string_view text);

struct RegulationIndex {
    std::vector<Regulation> regulations;                        // build order
    std::map<std::string, std::map<std::string, int>> entries;  // id -> term freq
    std::map<std::string, int> doc_lengths;                     // id -> token count
    std::map<std::string, int> df;                              // token -> doc freq
    int corpus_size = 0;
    double avg_doc_len = 0.0;
    RetrievalBackend backend = RetrievalBackend::Lexical;
};

// Throws EmptyConstitution on an empty view.
RegulationIndex build_index(const Constitution& view);

struct RetrievalQuery {
    std::string text;
};

// instruction, then one "tool canonical-input" line per step, then the
// candidate action as a final line when present.
RetrievalQuery compose_query(const Scenario& s, const Trajectory& t,
                             const std::optional<Action>& candidate = std::nullopt);

struct ScoredRegulation {
    Regulation regulation;
    double score = 0.0;
};

std::vector<ScoredRegulation> retrieve(const RegulationIndex& index,
                                       const RetrievalQuery& query, int k = 5);

// Remote embedding endpoint contract: POST {model, inputs: [text]} ->
// {vectors: [[real]]}, bearer token from GATEWAY_API_KEY_<NAME>. Negative
// cosines clamp to zero so scores stay non-negative.
class EmbeddingClient {
public:
    struct Config {
        std::string name;              // selects the API-key env var
        std::string model;
        std::string path = "/v1/embeddings";
        RetryPolicy retry;
    };

    EmbeddingClient(std::unique_ptr<Transport> transport, Config config);

    std::vector<std::vector<double>> embed(const std::vector<std::string>& inputs);

private:
    std::unique_ptr<Transport> transport_;
    Config config_;
    std::string bearer_;
};

std::vector<ScoredRegulation> retrieve_embedding(const Constitution& view,
                                                 const RetrievalQuery& query, int k,
                                                 EmbeddingClient& client);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace planguard
