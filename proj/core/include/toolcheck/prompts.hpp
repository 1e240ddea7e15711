#pragma once

#include "toolcheck/ingest.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace toolcheck::prompts {

// The tool-calling instruction; `{tools}` is replaced by the JSON tool list.
extern const std::string_view kToolCallingInstruction;

// Second-round instruction; the local checklist entries follow it.
extern const std::string_view kRoundTwoInstruction;

// Local checklist generation template; `<tool_info>` is replaced by the tool block.
extern const std::string_view kLocalChecklistTemplate;

// Negative sample generation; `<checklist>`, `<user_query>`, `<groundtruth>` placeholders.
extern const std::string_view kNegativeSystemPrompt;
extern const std::string_view kNegativeUserPrompt;

std::string render_tools_json(const std::vector<ToolSpec>& tools);

// Instruction with the case's tools filled in.
std::string render_instruction(const std::vector<ToolSpec>& tools);

// Single-message prompt (instruction, blank line, query) stored in preference pairs.
std::string render_case_prompt(const EvalCase& c);

// "name: '...'\ndescription: '...'\nparameters: {...} required parameters: [...]"
std::string render_tool_info(const ToolSpec& tool);

std::string replace_all(std::string text, std::string_view from, std::string_view to);

}  // namespace toolcheck::prompts
