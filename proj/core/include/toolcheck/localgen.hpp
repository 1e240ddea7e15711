#pragma once

#include "toolcheck/chat.hpp"
#include "toolcheck/checker.hpp"
#include "toolcheck/toolspec.hpp"

#include <optional>
#include <string>
#include <vector>

namespace toolcheck {

struct LocalChecklistEntry {
    ErrorCode code = ErrorCode::InvalidFormat;
    std::string query;
    std::string faulty_output;
    std::string error_message;
    std::string thought;
    // Correct call list for the query, when known. Entries without it get an
    // implied reference derived from the faulty output and the message.
    std::optional<std::string> expected_output;
};

struct LocalChecklist {
    ToolSpec tool;
    std::vector<LocalChecklistEntry> entries;
};

struct ChecklistDrop {
    std::string section;
    std::string reason;
};

struct ChecklistParse {
    LocalChecklist checklist;
    std::vector<ChecklistDrop> dropped;
};

// The generation template with `<tool_info>` replaced by the tool's block.
std::string render_generation_prompt(const ToolSpec& tool);

/// Returns nullopt when the entry's faulty output triggers its code when
/// checked against `tool`, otherwise the reason it does not.
std::optional<std::string> validate_entry(const ToolSpec& tool, const LocalChecklistEntry& entry);

/// Splits a model response into "Error N: <title>" sections and keeps entries
/// that pass validate_entry; the rest land in `dropped`. Throws
/// Error(NoEntriesParsed) when nothing survives.
ChecklistParse parse_checklist_response(const std::string& text, const ToolSpec& tool);

struct OfflineOptions {
    // Also emit a wrong-tool-name entry.
    bool include_wrong_name = false;
};

/// Deterministic checklist built by injecting each applicable error into a
/// synthetic correct call. Pure function of (tool, seed, options).
LocalChecklist synth_checklist_offline(const ToolSpec& tool, std::uint64_t seed, OfflineOptions options = {});

ChecklistParse generate_checklist_with_client(const ToolSpec& tool, ChatClient& client);

// Synthetic correct call used by the offline synthesizer: required parameters
// (or the first parameter when none is required) filled with typed samples.
ToolCall sample_call(const ToolSpec& tool);
Value sample_value(const ParamType& type, const std::string& name, std::size_t index);

Value checklist_to_json(const LocalChecklist& checklist);
LocalChecklist checklist_from_json(const Value& v);

// Human-readable rendering in the template's section layout; parses back with
// parse_checklist_response.
std::string render_checklist_text(const LocalChecklist& checklist);

}  // namespace toolcheck
