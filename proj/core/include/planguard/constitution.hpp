#pragma once

// The agent constitution: a validated collection of statute-law safety
// regulations (general-domain plus domain-specific), its file format, and
// QA-pair generation for regulation-learning exports.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planguard/domain.hpp"
#include "planguard/gateway.hpp"
#include "planguard/prompts.hpp"

namespace planguard {

enum class Scope { General, DomainSpecific };

std::string to_string(Scope s);
Scope scope_from_string(std::string_view s);

struct Regulation {
    std::string id;
    Scope scope = Scope::General;
    std::optional<Domain> domain;  // required iff scope is domain-specific
    std::string text;
    std::string source;
};

struct Constitution {
    std::string version;
    std::vector<Regulation> regulations;
};

class DuplicateId : public Error {
public:
    explicit DuplicateId(const std::string& id)
        : Error("duplicate regulation id '" + id + "'"), id_(id) {}
    const std::string& id() const { return id_; }

private:
    std::string id_;
};

class EmptyConstitution : public Error {
public:
    EmptyConstitution() : Error("constitution holds no regulations") {}
};

// File format: {version, regulations: [{id, scope, domain?, text, source}]}.
// All invariants are validated; regulation order is preserved.
Constitution parse_constitution(const std::string& text);
std::string serialize_constitution(const Constitution& c);
Constitution load_constitution(const std::string& path);

// All general regulations plus the domain-specific ones matching d, in the
// original order.
Constitution filter_by_domain(const Constitution& c, Domain d);

const Regulation* find_regulation(const Constitution& c, const std::string& id);

struct QARecord {
    std::string regulation_id;
    int style = 1;  // 1..5
    std::string question;
    std::string answer;
};

class MalformedCompletion : public Error {
public:
    explicit MalformedCompletion(const std::string& message) : Error(message) {}
};

// One gateway exchange per style (two on one re-ask). Answers must be
// non-empty and cite the regulation id; anything else is a
// MalformedCompletion after the re-ask.
std::vector<QARecord> generate_qa(const Regulation& reg, Gateway& gateway, int n = 5,
                                  const PromptLibrary& prompts = PromptLibrary::builtin(),
                                  const std::string& model = "qa-gen");

// Line-delimited {regulation_id, style, question, answer} records.
size_t export_qa_corpus(std::span<const QARecord> records, const std::string& path);
std::string serialize_qa_corpus(std::span<const QARecord> records);
std::vector<QARecord> parse_qa_corpus(const std::string& text);
std::vector<QARecord> load_qa_corpus(const std::string& path);

void to_json(nlohmann::json& j, const Regulation& r);
void from_json(const nlohmann::json& j, Regulation& r);

}  // namespace planguard
