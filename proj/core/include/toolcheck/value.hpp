#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace toolcheck {

// Argument values keep insertion order and the integer/float distinction.
using Value = nlohmann::ordered_json;

// Renders JSON with ", " and ": " separators on one line, the layout model
// prompts use for call arrays. Scalars use nlohmann's shortest round-trip form.
std::string render_compact(const Value& v);

// Broad JSON category used when a parameter type is unknown: "null", "boolean",
// "number", "string", "list", "object".
std::string value_category(const Value& v);

// Equality after normalization: integer-valued floats equal their integer forms,
// lists compare element-wise in order, objects compare key-wise ignoring order,
// text compares exactly.
bool values_equal(const Value& a, const Value& b);

// Empty text, empty list or null. Zero and false are not empty.
bool is_empty_value(const Value& v);

// Parses JSON text, throwing Error(InvalidArgument) on syntax errors or on an
// object that repeats a key (ordinary parsing would silently keep one).
Value parse_json_unique_keys(std::string_view text);

// Stable 64-bit FNV-1a hash; used for per-case seeding so results do not
// depend on the standard library's std::hash.
std::uint64_t stable_hash(std::string_view s);

}  // namespace toolcheck
