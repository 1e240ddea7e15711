#include "toolcheck/callparse.hpp"

#include "toolcheck/error.hpp"

#include <algorithm>
#include <cctype>

namespace toolcheck {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void format_error(const std::string& what) { throw Error(ErrorKind::FormatError, what); }

}  // namespace

std::vector<ToolCall> calls_from_json(const Value& array) {
    if (!array.is_array()) format_error("top level is " + value_category(array) + ", expected a list of calls");
    std::vector<ToolCall> calls;
    calls.reserve(array.size());
    for (std::size_t i = 0; i < array.size(); ++i) {
        const auto& el = array[i];
        auto where = "element " + std::to_string(i);
        if (!el.is_object()) format_error(where + " is " + value_category(el) + ", expected an object");
        for (const auto& [k, _] : el.items())
            if (k != "name" && k != "arguments") format_error(where + " has unexpected key '" + k + "'");
        auto name = el.find("name");
        if (name == el.end()) format_error(where + " has no 'name'");
        if (!name->is_string() || name->get_ref<const std::string&>().empty())
            format_error(where + " 'name' is not a non-empty string");
        auto args = el.find("arguments");
        if (args == el.end()) format_error(where + " has no 'arguments'");
        if (!args->is_object()) format_error(where + " 'arguments' is not an object");
        calls.push_back(ToolCall{name->get<std::string>(), *args});
    }
    return calls;
}

Value calls_to_json(const std::vector<ToolCall>& calls) {
    Value out = Value::array();
    for (const auto& c : calls) {
        Value el = Value::object();
        el["name"] = c.name;
        el["arguments"] = c.arguments.is_null() ? Value::object() : c.arguments;
        out.push_back(std::move(el));
    }
    return out;
}

std::string render_calls(const std::vector<ToolCall>& calls) { return render_compact(calls_to_json(calls)); }

ParseOutcome parse_strict(std::string_view raw) {
    Value parsed;
    try {
        parsed = parse_json_unique_keys(trim(raw));
    } catch (const Error& e) {
        format_error(std::string("not valid JSON: ") + e.what());
    }
    ParseOutcome out;
    out.calls = calls_from_json(parsed);
    out.strict = true;
    out.raw = std::string(raw);
    return out;
}

std::string normalize_quotes(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    enum class State { Plain, Double, Single } state = State::Plain;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        switch (state) {
            case State::Plain:
                if (c == '"') state = State::Double;
                if (c == '\'') {
                    state = State::Single;
                    c = '"';
                }
                out += c;
                break;
            case State::Double:
                out += c;
                if (c == '\\' && i + 1 < text.size()) out += text[++i];
                else if (c == '"') state = State::Plain;
                break;
            case State::Single:
                if (c == '\\' && i + 1 < text.size()) {
                    char next = text[++i];
                    if (next == '\'') out += '\'';
                    else {
                        out += '\\';
                        out += next;
                    }
                } else if (c == '"') {
                    out += "\\\"";
                } else if (c == '\'') {
                    out += '"';
                    state = State::Plain;
                } else {
                    out += c;
                }
                break;
        }
    }
    return out;
}

std::size_t match_bracket(std::string_view text, std::size_t open) {
    int depth = 0;
    char quote = 0;
    for (std::size_t i = open; i < text.size(); ++i) {
        char c = text[i];
        if (quote) {
            if (c == '\\') ++i;
            else if (c == quote) quote = 0;
            continue;
        }
        if (c == '"' || c == '\'') quote = c;
        else if (c == '[') ++depth;
        else if (c == ']' && --depth == 0) return i;
    }
    return std::string_view::npos;
}

bool empty_array_in_value_slot(std::string_view text, std::size_t pos) {
    auto prev_non_space = [&](std::size_t end) -> std::size_t {
        while (end > 0) {
            --end;
            if (!std::isspace(static_cast<unsigned char>(text[end]))) return end;
        }
        return std::string_view::npos;
    };
    auto p = prev_non_space(pos);
    if (p == std::string_view::npos) return false;
    if (text[p] == ',' || text[p] == '[') return true;
    if (text[p] == ':') {
        auto q = prev_non_space(p);
        return q != std::string_view::npos && (text[q] == '"' || text[q] == '\'');
    }
    return false;
}

ParseOutcome parse_lenient(std::string_view raw) {
    try {
        return parse_strict(raw);
    } catch (const Error&) {
    }

    struct Candidate {
        std::size_t start, end;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '[') continue;
        auto j = match_bracket(raw, i);
        if (j == std::string_view::npos) continue;
        if (trim(raw.substr(i + 1, j - i - 1)).empty() && empty_array_in_value_slot(raw, i)) continue;
        candidates.push_back({i, j});
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return (a.end - a.start) > (b.end - b.start);
    });

    ParseOutcome out;
    out.raw = std::string(raw);
    for (const auto& c : candidates) {
        auto text = normalize_quotes(raw.substr(c.start, c.end - c.start + 1));
        try {
            out.calls = parse_strict(text).calls;
            out.salvage = true;
            return out;
        } catch (const Error&) {
        }
    }
    return out;
}

}  // namespace toolcheck
