#pragma once

#include "toolcheck/value.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace toolcheck {

struct ToolCall {
    std::string name;
    // Always a JSON object; key order is preserved from the source text.
    Value arguments = Value::object();

    friend bool operator==(const ToolCall&, const ToolCall&) = default;
};

struct ParseOutcome {
    std::vector<ToolCall> calls;
    // The whole text was exactly one call array (modulo surrounding whitespace).
    bool strict = false;
    // Calls were recovered from inside non-conforming text.
    bool salvage = false;
    std::string raw;
};

/// Accepts only a single JSON array whose elements each have exactly a text
/// `name` and an object `arguments`. Throws Error(FormatError) describing the
/// first structural violation otherwise.
ParseOutcome parse_strict(std::string_view raw);

/// Never throws. Falls back from parse_strict to the longest bracket-balanced
/// substring that parses as a call array (earliest start on ties). Single-quoted
/// pseudo-JSON inside a candidate is normalized to double quotes first.
ParseOutcome parse_lenient(std::string_view raw);

// Canonical `[{"name": ..., "arguments": {...}}, ...]` form.
std::string render_calls(const std::vector<ToolCall>& calls);

Value calls_to_json(const std::vector<ToolCall>& calls);
// Converts an already-parsed array; throws Error(FormatError) on a bad shape.
std::vector<ToolCall> calls_from_json(const Value& array);

/// Rewrites single-quoted strings as double-quoted JSON strings. Text inside
/// double-quoted strings is left untouched.
std::string normalize_quotes(std::string_view text);

/// End index (inclusive) of the bracket group opened at `open`, honoring single-
/// and double-quoted strings, or npos when it never closes.
std::size_t match_bracket(std::string_view text, std::size_t open);

/// True when an empty array at `pos` sits in a value slot of a larger
/// structure (after `,`, `[`, or a quoted key's `:`); such arrays are never
/// salvaged as call lists.
bool empty_array_in_value_slot(std::string_view text, std::size_t pos);

}  // namespace toolcheck
