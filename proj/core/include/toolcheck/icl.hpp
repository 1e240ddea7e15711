#pragma once

#include "toolcheck/chat.hpp"
#include "toolcheck/checker.hpp"
#include "toolcheck/ingest.hpp"
#include "toolcheck/localgen.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace toolcheck {

// Whitespace-delimited token estimate; a tokenizer-free proxy for prompt size.
std::size_t estimate_tokens(std::string_view text);

/// System message = tool-calling instruction with the case's tools; optional
/// prior turns; user message = query, plus a blank line and `global_text` when
/// it is non-empty (empty = vanilla prompting).
std::vector<ChatMessage> build_round1(const EvalCase& c, const std::string& global_text);

struct Round2Build {
    std::vector<ChatMessage> messages;
    // Invoked tools that have no local checklist.
    std::vector<std::string> missing_checklists;
    // Findings of the schema-only check on the round-1 output.
    std::vector<ErrorFinding> findings;
};

/// Appends the round-1 output and a user message holding the round-two
/// instruction, the checker findings for round 1, and the local checklists of
/// the tools round 1 invoked (first-invocation order).
Round2Build build_round2(const std::vector<ChatMessage>& round1_messages, const std::string& round1_output,
                         const std::vector<LocalChecklist>& checklists, const ToolRegistry& registry);

struct RoundRecord {
    std::vector<ChatMessage> messages;
    std::string output;
    TokenUsage usage;
    std::vector<ErrorFinding> findings;
    // Set when the round was not sent; messages/output are then empty.
    std::optional<std::string> skipped;

    friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct IclRunRecord {
    std::string id;
    RoundRecord round1;
    // Absent iff the run was single-round.
    std::optional<RoundRecord> round2;
    std::vector<std::string> missing_checklists;
    std::vector<ToolCall> final_calls;
    TokenUsage usage;
};

Value run_record_to_json(const IclRunRecord& r);
IclRunRecord run_record_from_json(const Value& v);

struct IclOptions {
    bool two_round = true;
    // Round 1 without the global checklist.
    bool vanilla = false;
    std::vector<LocalChecklist> checklists;
    CompletionParams params;
    // Cap on prompt + generated tokens per case; 0 disables.
    std::int64_t max_tokens_per_case = 0;
};

/// Round 1, then (when two_round) round 2 unless round 1 was exactly `[]`.
/// final_calls is the lenient parse of the last output sent. Throws
/// Error(ClientError) naming the failing round, or Error(BudgetExceeded).
IclRunRecord run_icl(const EvalCase& c, ChatClient& client, const IclOptions& options);

/// Runs cases with at most `in_flight` concurrent cases; records keep input
/// order. Rethrows the first failure (by case order) after all runs finish.
std::vector<IclRunRecord> run_icl_batch(const std::vector<EvalCase>& cases, ChatClient& client,
                                        const IclOptions& options, std::size_t in_flight);

struct CostSummary {
    std::size_t cases = 0;
    TokenUsage usage;
    // Currency per case; only when both prices (per million tokens) are set.
    std::optional<double> cost_per_case;
};

CostSummary cost_summary(const std::vector<IclRunRecord>& records, std::optional<double> price_in_per_mtok,
                         std::optional<double> price_out_per_mtok);

// Replays canned completions keyed by CompletionParams::tag.
class ScriptedChatClient : public ChatClient {
public:
    ScriptedChatClient() = default;
    // {"<tag>": {"text": ..., "prompt_tokens": n, "generated_tokens": n}, ...}
    // or {"<tag>": "text"} for zero usage.
    explicit ScriptedChatClient(const Value& script);

    void add(const std::string& tag, Completion completion);

    Completion complete(const std::vector<ChatMessage>& messages, const CompletionParams& params) override;

    std::size_t calls() const;
    // Sum of declared usage over every completion served.
    TokenUsage served_usage() const;

private:
    std::map<std::string, Completion> script_;
    mutable std::mutex mu_;
    std::size_t calls_ = 0;
    TokenUsage served_;
};

struct HttpClientConfig {
    // Base URL up to the API version, e.g. "https://api.openai.com/v1".
    std::string base_url = "https://api.openai.com/v1";
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";
    int timeout_seconds = 120;
    int max_retries = 2;
};

// Chat-completions wire format over HTTP(S).
class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(HttpClientConfig config);
    Completion complete(const std::vector<ChatMessage>& messages, const CompletionParams& params) override;

    // Request body for the given messages (exposed for inspection and tests).
    Value request_body(const std::vector<ChatMessage>& messages, const CompletionParams& params) const;
    // Extracts text and usage from a response body; throws Error(ClientError).
    static Completion parse_response(const std::string& body);

private:
    HttpClientConfig config_;
    std::string api_key_;
};

}  // namespace toolcheck
