#pragma once

#include "toolcheck/value.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace toolcheck {

enum class TypeKind { String, Integer, Number, Boolean, List, Tuple, Object, Unknown };

struct ParamType {
    TypeKind kind = TypeKind::Unknown;
    // Element types for list/tuple/object; empty for scalars.
    std::vector<ParamType> elements;

    friend bool operator==(const ParamType&, const ParamType&) = default;
};

// Total: unrecognized text maps to Unknown, never throws.
ParamType parse_param_type(std::string_view text);

// Canonical type text ("str", "int", "List[Tuple[float, float]]", ...).
std::string param_type_to_string(const ParamType& type);

// True when `v` satisfies `type`. Integers widen to number; floats do not
// narrow to integer. Unknown accepts everything.
bool value_matches_type(const Value& v, const ParamType& type);

struct ParamSpec {
    std::string name;
    ParamType type;
    // Type text as it appeared in the source, kept for rendering and round trips.
    std::string type_text;
    std::string description;
    bool required = true;

    friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

struct ToolSpec {
    std::string name;
    std::string description;
    std::vector<ParamSpec> params;

    const ParamSpec* find_param(std::string_view param) const;
    std::vector<std::string> required_names() const;

    friend bool operator==(const ToolSpec&, const ToolSpec&) = default;
};

/// Parses a tool object. Accepts the flat `{"parameters": {p: {"type", "description"}}}`
/// shape with an optional top-level `"required"` list, and the JSON-schema shape
/// `{"parameters": {"type": "object", "properties": {...}, "required": [...]}}`.
/// Without any required information every parameter is required. A type text
/// ending in ", optional" marks the parameter optional.
/// Throws Error(MalformedSpec) on a missing name or duplicate parameter names.
ToolSpec parse_tool_spec(const Value& raw);

Value tool_spec_to_json(const ToolSpec& spec);

class ToolRegistry {
public:
    ToolRegistry() = default;

    static ToolRegistry from_specs(const std::vector<ToolSpec>& specs);

    // Case-sensitive exact lookup.
    const ToolSpec* find(std::string_view name) const;
    // Case-insensitive near miss, for suggestions in wrong-name findings.
    std::optional<std::string> suggest(std::string_view name) const;

    bool empty() const { return tools_.empty(); }
    std::size_t size() const { return tools_.size(); }
    const std::vector<std::string>& warnings() const { return warnings_; }
    std::vector<ToolSpec> specs() const;

private:
    std::map<std::string, ToolSpec, std::less<>> tools_;
    std::vector<std::string> warnings_;
};

// JSON-lines registry interchange: one tool object per line.
std::vector<ToolSpec> read_tool_specs(const std::filesystem::path& path);
void write_tool_specs(const std::vector<ToolSpec>& specs, const std::filesystem::path& path);

}  // namespace toolcheck
