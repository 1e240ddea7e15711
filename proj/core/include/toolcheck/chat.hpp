#pragma once

#include "toolcheck/value.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace toolcheck {

enum class Role { System, User, Assistant };

std::string_view role_name(Role role);
std::optional<Role> parse_role(std::string_view name);

struct ChatMessage {
    Role role = Role::User;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

Value message_to_json(const ChatMessage& m);
ChatMessage message_from_json(const Value& v);

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t generated_tokens = 0;

    TokenUsage& operator+=(const TokenUsage& o) {
        prompt_tokens += o.prompt_tokens;
        generated_tokens += o.generated_tokens;
        return *this;
    }
    friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

struct CompletionParams {
    double temperature = 0.2;
    int max_tokens = 512;
    // Opaque request label ("<case id>/round<N>"); scripted clients key on it.
    std::string tag;
};

struct Completion {
    std::string text;
    TokenUsage usage;
};

// Provider-agnostic chat completion. Implementations must tolerate concurrent
// calls and report Error(ClientError) on transport or provider failures.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual Completion complete(const std::vector<ChatMessage>& messages, const CompletionParams& params) = 0;
};

}  // namespace toolcheck
