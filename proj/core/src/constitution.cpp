#include "planguard/constitution.hpp"

#include <set>
#include <sstream>

#include "reask.hpp"

namespace planguard {

std::string to_string(Scope s) {
    return s == Scope::General ? "general" : "domain";
}

Scope scope_from_string(std::string_view s) {
    if (s == "general") return Scope::General;
    if (s == "domain") return Scope::DomainSpecific;
    throw SchemaError("scope: unknown value '" + std::string(s) + "'");
}

void to_json(nlohmann::json& j, const Regulation& r) {
    j = nlohmann::json{{"id", r.id},
                       {"scope", to_string(r.scope)},
                       {"text", r.text},
                       {"source", r.source}};
    if (r.domain) j["domain"] = to_string(*r.domain);
}

void from_json(const nlohmann::json& j, Regulation& r) {
    r.id = j.at("id").get<std::string>();
    r.scope = scope_from_string(j.at("scope").get<std::string>());
    r.domain = j.contains("domain")
                   ? std::optional<Domain>(domain_from_string(j.at("domain").get<std::string>()))
                   : std::nullopt;
    r.text = j.at("text").get<std::string>();
    r.source = j.value("source", "");
}

Constitution parse_constitution(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw SchemaError("constitution: not a valid document");
    }
    Constitution c;
    c.version = j.value("version", "");
    if (!j.contains("regulations") || !j.at("regulations").is_array()) {
        throw SchemaError("constitution: missing field 'regulations'");
    }
    std::set<std::string> ids;
    for (const auto& rj : j.at("regulations")) {
        Regulation r = rj.get<Regulation>();
        if (r.id.empty()) throw SchemaError("regulation: field 'id' must be non-empty");
        if (r.text.empty()) {
            throw SchemaError("regulation '" + r.id + "': field 'text' must be non-empty");
        }
        if (r.scope == Scope::DomainSpecific && !r.domain) {
            throw SchemaError("regulation '" + r.id + "': scope 'domain' requires a domain");
        }
        if (!ids.insert(r.id).second) throw DuplicateId(r.id);
        c.regulations.push_back(std::move(r));
    }
    if (c.regulations.empty()) throw EmptyConstitution();
    return c;
}

std::string serialize_constitution(const Constitution& c) {
    nlohmann::json j{{"version", c.version}, {"regulations", c.regulations}};
    return j.dump(2) + "\n";
}

Constitution load_constitution(const std::string& path) {
    return parse_constitution(read_file(path));
}

Constitution filter_by_domain(const Constitution& c, Domain d) {
    Constitution view;
    view.version = c.version;
    for (const auto& r : c.regulations) {
        if (r.scope == Scope::General || (r.domain && *r.domain == d)) {
            view.regulations.push_back(r);
        }
    }
    return view;
}

const Regulation* find_regulation(const Constitution& c, const std::string& id) {
    for (const auto& r : c.regulations) {
        if (r.id == id) return &r;
    }
    return nullptr;
}

namespace {

std::optional<QARecord> parse_qa_reply(const std::string& reply,
                                       const Regulation& reg, int style) {
    auto doc = extract_document(reply);
    if (!doc || !doc->contains("question") || !doc->contains("answer") ||
        !doc->at("question").is_string() || !doc->at("answer").is_string()) {
        return std::nullopt;
    }
    QARecord rec;
    rec.regulation_id = reg.id;
    rec.style = style;
    rec.question = doc->at("question").get<std::string>();
    rec.answer = doc->at("answer").get<std::string>();
    if (rec.question.empty() || rec.answer.empty()) return std::nullopt;
    if (rec.answer.find(reg.id) == std::string::npos) return std::nullopt;
    return rec;
}

}  // namespace

std::vector<QARecord> generate_qa(const Regulation& reg, Gateway& gateway, int n,
                                  const PromptLibrary& prompts, const std::string& model) {
    if (n < 1 || n > static_cast<int>(prompts.qa_styles.size())) {
        throw ConfigError("qa_styles", "style count must be between 1 and " +
                                           std::to_string(prompts.qa_styles.size()));
    }
    std::vector<QARecord> records;
    for (int style = 1; style <= n; ++style) {
        const std::string user =
            fill_template(prompts.qa_styles[static_cast<size_t>(style - 1)],
                          {{"regulation_id", reg.id}, {"regulation_text", reg.text}});
        ChatRequest req;
        req.model = model;
        req.tag = CallTag::QaGen;
        req.messages = {{Role::System, prompts.qa_system}, {Role::User, user}};
        auto result = detail::ask_with_reask<QARecord>(
            gateway, req, prompts.reask_note,
            [&](const std::string& reply) { return parse_qa_reply(reply, reg, style); });
        if (!result.value) {
            throw MalformedCompletion("QA generation for regulation '" + reg.id +
                                      "' style " + std::to_string(style) +
                                      " produced no parseable question/answer pair");
        }
        records.push_back(std::move(*result.value));
    }
    return records;
}

std::string serialize_qa_corpus(std::span<const QARecord> records) {
    std::string out;
    for (const auto& r : records) {
        nlohmann::json j{{"regulation_id", r.regulation_id},
                         {"style", r.style},
                         {"question", r.question},
                         {"answer", r.answer}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

size_t export_qa_corpus(std::span<const QARecord> records, const std::string& path) {
    write_file(path, serialize_qa_corpus(records));
    return records.size();
}

std::vector<QARecord> parse_qa_corpus(const std::string& text) {
    std::vector<QARecord> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw SchemaError("QA corpus line is not valid JSON");
        QARecord r;
        r.regulation_id = j.at("regulation_id").get<std::string>();
        r.style = j.at("style").get<int>();
        r.question = j.at("question").get<std::string>();
        r.answer = j.at("answer").get<std::string>();
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<QARecord> load_qa_corpus(const std::string& path) {
    return parse_qa_corpus(read_file(path));
}

}  // namespace planguard
