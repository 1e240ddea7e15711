#pragma once

#include "toolcheck/callparse.hpp"
#include "toolcheck/toolspec.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace toolcheck {

// Global checklist numbering: 0 and 7 are tool-level, 1-4 parameter-level,
// 5-6 output-level.
enum class ErrorCode : int {
    WrongToolName = 0,
    MissingRequiredParameter = 1,
    InvalidParameterType = 2,
    EmptyParameterValue = 3,
    RedundantParameter = 4,
    InvalidFormat = 5,
    RedundantInformation = 6,
    WrongNumberOfTools = 7,
};

inline constexpr std::array<ErrorCode, 8> kAllErrorCodes{
    ErrorCode::WrongToolName,        ErrorCode::MissingRequiredParameter, ErrorCode::InvalidParameterType,
    ErrorCode::EmptyParameterValue,  ErrorCode::RedundantParameter,       ErrorCode::InvalidFormat,
    ErrorCode::RedundantInformation, ErrorCode::WrongNumberOfTools,
};

std::string code_label(ErrorCode code);                // "E4"
std::optional<ErrorCode> parse_code_label(std::string_view label);  // "E4" or "4"
std::string_view error_identifier(ErrorCode code);     // "RedundantParameter"
std::string_view error_title(ErrorCode code);          // "Redundant Parameter Error"
std::optional<ErrorCode> code_from_title(std::string_view title);

struct ErrorFinding {
    ErrorCode code;
    // Machine-styled `{"error": ..., "message": ...}` block.
    std::string message;
    // Remediation sentence ("Thought of Error").
    std::string thought;
    std::optional<std::size_t> call_index;
    std::optional<std::string> param;

    friend bool operator==(const ErrorFinding&, const ErrorFinding&) = default;
};

Value finding_to_json(const ErrorFinding& f);
// Throws Error(InvalidArgument) on an unknown code or bad shape.
ErrorFinding finding_from_json(const Value& v);

enum class CheckMode {
    SchemaOnly,
    // Gold calls stand in for query intent; enables the intent part of
    // redundant-parameter checks and the call-count check.
    Referenced,
};

/// Applies the global checklist. Returns every finding; empty iff clean.
/// Throws Error(MissingReference) in referenced mode without gold.
std::vector<ErrorFinding> check(const ParseOutcome& outcome, const ToolRegistry& registry,
                                const std::vector<ToolCall>* gold, CheckMode mode);

inline std::vector<ErrorFinding> check(const ParseOutcome& outcome, const ToolRegistry& registry) {
    return check(outcome, registry, nullptr, CheckMode::SchemaOnly);
}

/// For each predicted call, the index of the gold call it is compared with, or
/// nullopt. Only same-named calls pair up; exact matches are taken first, then
/// pairs sharing the most equal arguments, then the lowest (pred, gold) indices.
std::vector<std::optional<std::size_t>> align_to_gold(const std::vector<ToolCall>& pred,
                                                      const std::vector<ToolCall>& gold);

std::string render_global_checklist();

using ErrorHistogram = std::map<ErrorCode, std::size_t>;

// All eight codes are present in the result, zero when unseen.
ErrorHistogram error_histogram(const std::vector<std::vector<ErrorFinding>>& findings_per_case);

bool has_code(const std::vector<ErrorFinding>& findings, ErrorCode code);

}  // namespace toolcheck
