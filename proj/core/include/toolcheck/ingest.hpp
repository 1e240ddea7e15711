#pragma once

#include "toolcheck/callparse.hpp"
#include "toolcheck/chat.hpp"
#include "toolcheck/checker.hpp"
#include "toolcheck/toolspec.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace toolcheck {

struct EvalCase {
    std::string id;
    std::string query;
    std::vector<ToolSpec> tools;
    // May be empty: the "no call needed" case.
    std::vector<ToolCall> gold;
    // Prior turns injected ahead of the query (multi-turn hook).
    std::vector<ChatMessage> context;

    ToolRegistry registry() const { return ToolRegistry::from_specs(tools); }
};

Value case_to_json(const EvalCase& c);
// Throws Error(InvariantViolation) when a gold call names a tool outside `tools`.
EvalCase case_from_json(const Value& v);

struct SkipRecord {
    std::size_t line = 0;
    std::string reason;
};

struct LoadResult {
    std::vector<EvalCase> cases;
    std::vector<SkipRecord> skipped;
};

// Converts one parsed JSON line of an upstream dataset into a case. `line` is
// 1-based and may be used to synthesize an id.
using CaseAdapter = std::function<EvalCase(const Value& line_json, std::size_t line)>;

void register_case_adapter(const std::string& name, CaseAdapter adapter);
std::vector<std::string> case_adapter_names();

/// Loads JSON-lines cases. `format` is "unified" or "adapter:<name>". Lines
/// that fail are collected in `skipped`. Throws Error(UnreadableFile) or
/// Error(EmptyDataset) when no line yields a case.
LoadResult load_cases(const std::filesystem::path& path, const std::string& format = "unified");

void write_cases(const std::vector<EvalCase>& cases, const std::filesystem::path& path);

struct PreferencePair {
    std::string prompt;
    std::string chosen;
    std::string rejected;
    std::optional<ErrorCode> injected_error;
    bool label_chosen = true;
    bool label_rejected = false;

    friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

Value pair_to_json(const PreferencePair& p);
PreferencePair pair_from_json(const Value& v);

/// Throws Error(InvariantViolation) for a pair whose chosen text is not a
/// strict call array or equals the rejected text.
void write_ptc(const std::vector<PreferencePair>& pairs, const std::filesystem::path& path);
std::vector<PreferencePair> read_ptc(const std::filesystem::path& path);

// One compact JSON value per line.
void write_json_lines(const std::vector<Value>& rows, const std::filesystem::path& path);

// Reads every non-blank line of a JSON-lines file.
std::vector<Value> read_json_lines(const std::filesystem::path& path);

}  // namespace toolcheck
