#pragma once

// Shared ask/re-ask pattern: send a request, try to parse the reply, and on
// parse failure re-ask exactly once with the previous reply plus a corrective
// note appended to the conversation. Callers decide what failure after the
// re-ask means.

#include <functional>
#include <optional>
#include <string>

#include "planguard/gateway.hpp"
#include "planguard/prompts.hpp"

namespace planguard::detail {

template <typename T>
struct AskResult {
    std::optional<T> value;
    std::string last_reply;
    std::string request_hash;  // hash of the exchange that produced value
};

template <typename T>
AskResult<T> ask_with_reask(Gateway& gateway, ChatRequest req,
                            const std::string& reask_note,
                            const std::function<std::optional<T>(const std::string&)>& parse) {
    ChatExchange first = gateway.chat_ex(req);
    if (auto parsed = parse(first.text)) {
        return {std::move(parsed), first.text, first.request_hash};
    }
    req.messages.push_back({Role::Assistant, first.text});
    req.messages.push_back({Role::User, reask_note});
    ChatExchange second = gateway.chat_ex(req);
    if (auto parsed = parse(second.text)) {
        return {std::move(parsed), second.text, second.request_hash};
    }
    return {std::nullopt, second.text, second.request_hash};
}

}  // namespace planguard::detail
