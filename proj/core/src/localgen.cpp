#include "toolcheck/localgen.hpp"

#include "toolcheck/error.hpp"
#include "toolcheck/negsample.hpp"
#include "toolcheck/prompts.hpp"
#include "toolcheck/rng.hpp"

#include <cctype>
#include <regex>
#include <sstream>

namespace toolcheck {

namespace {

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::string strip_decoration(std::string_view line) {
    auto s = trim(line);
    std::size_t b = 0;
    while (b < s.size() && (s[b] == '*' || s[b] == '#')) ++b;
    std::size_t e = s.size();
    while (e > b && s[e - 1] == '*') --e;
    return trim(std::string_view(s).substr(b, e - b));
}

std::string strip_outer_quotes(std::string s) {
    s = trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

std::string collapse_double_braces(std::string s) {
    return prompts::replace_all(prompts::replace_all(std::move(s), "{{", "{"), "}}", "}");
}

std::optional<std::string> first_quoted(const std::string& text) {
    static const std::regex quoted(R"('([^']+)')");
    std::smatch m;
    if (std::regex_search(text, m, quoted)) return m[1].str();
    return std::nullopt;
}

// Reference call list an LLM-written entry implies for its own query.
std::optional<std::vector<ToolCall>> implied_gold(const LocalChecklistEntry& e, const std::vector<ToolCall>& faulty) {
    if (e.expected_output) {
        try {
            return parse_strict(*e.expected_output).calls;
        } catch (const Error&) {
            return std::nullopt;
        }
    }
    switch (e.code) {
        case ErrorCode::RedundantParameter: {
            auto param = first_quoted(e.error_message);
            if (!param) return std::nullopt;
            auto gold = faulty;
            for (auto& c : gold) c.arguments.erase(*param);
            return gold;
        }
        case ErrorCode::WrongNumberOfTools: {
            std::vector<ToolCall> gold;
            for (const auto& c : faulty)
                if (std::find(gold.begin(), gold.end(), c) == gold.end()) gold.push_back(c);
            if (gold.size() == faulty.size()) {
                if (gold.size() < 2) return std::nullopt;
                gold.pop_back();
            }
            return gold;
        }
        default:
            return faulty;
    }
}

ErrorFinding finding_for(const ToolSpec& tool, const std::string& faulty, const std::vector<ToolCall>& gold,
                         ErrorCode code) {
    auto findings = check(parse_lenient(faulty), ToolRegistry::from_specs({tool}), &gold, CheckMode::Referenced);
    for (auto& f : findings)
        if (f.code == code) return f;
    throw Error(ErrorKind::InvariantViolation, "injected " + code_label(code) + " not detected");
}

struct Section {
    std::string heading;
    std::map<std::string, std::string> fields;
};

const std::vector<std::string> kMarkers{"Query", "Function Calling Output", "Error Message", "Thought of Error",
                                        "Correct Output"};

std::vector<Section> split_sections(const std::string& text) {
    static const std::regex heading(R"(^Error\s+\d+\s*:\s*(.+)$)");
    std::vector<Section> sections;
    std::string current_field;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto plain = strip_decoration(line);
        std::smatch m;
        if (std::regex_match(plain, m, heading)) {
            sections.push_back({trim(m[1].str()), {}});
            current_field.clear();
            continue;
        }
        if (sections.empty()) continue;
        if (plain.starts_with("---") || plain == "Instructions") {
            current_field.clear();
            continue;
        }
        bool is_marker = false;
        for (const auto& marker : kMarkers) {
            if (plain.starts_with(marker + ":")) {
                current_field = marker;
                sections.back().fields[marker] = plain.substr(marker.size() + 1);
                is_marker = true;
                break;
            }
        }
        if (!is_marker && !current_field.empty()) sections.back().fields[current_field] += "\n" + line;
    }
    return sections;
}

}  // namespace

std::string render_generation_prompt(const ToolSpec& tool) {
    return prompts::replace_all(std::string(prompts::kLocalChecklistTemplate), "<tool_info>",
                                prompts::render_tool_info(tool));
}

std::optional<std::string> validate_entry(const ToolSpec& tool, const LocalChecklistEntry& entry) {
    auto outcome = parse_lenient(entry.faulty_output);
    if (!outcome.strict && !outcome.salvage && entry.faulty_output.find("{{") != std::string::npos) {
        auto collapsed = parse_lenient(collapse_double_braces(entry.faulty_output));
        if (collapsed.strict || collapsed.salvage) outcome = collapsed;
    }
    auto gold = implied_gold(entry, outcome.calls);
    if (!gold) return "no reference call list can be derived for " + code_label(entry.code);
    auto findings = check(outcome, ToolRegistry::from_specs({tool}), &*gold, CheckMode::Referenced);
    if (!has_code(findings, entry.code))
        return "faulty output does not trigger " + code_label(entry.code) + " (" +
               std::string(error_title(entry.code)) + ")";
    return std::nullopt;
}

ChecklistParse parse_checklist_response(const std::string& text, const ToolSpec& tool) {
    ChecklistParse out;
    out.checklist.tool = tool;
    for (const auto& s : split_sections(text)) {
        auto code = code_from_title(s.heading);
        if (!code) {
            out.dropped.push_back({s.heading, "unknown error title"});
            continue;
        }
        auto field = [&](const std::string& name) -> std::optional<std::string> {
            auto it = s.fields.find(name);
            if (it == s.fields.end()) return std::nullopt;
            return trim(it->second);
        };
        auto faulty = field("Function Calling Output");
        if (!faulty || faulty->empty()) {
            out.dropped.push_back({s.heading, "missing function calling output"});
            continue;
        }
        LocalChecklistEntry entry;
        entry.code = *code;
        entry.query = strip_outer_quotes(field("Query").value_or(""));
        entry.faulty_output = *faulty;
        entry.error_message = field("Error Message").value_or("");
        entry.thought = field("Thought of Error").value_or("");
        if (auto correct = field("Correct Output"); correct && !correct->empty()) entry.expected_output = correct;

        bool duplicate = false;
        for (const auto& e : out.checklist.entries) duplicate = duplicate || e.code == entry.code;
        if (duplicate) {
            out.dropped.push_back({s.heading, "duplicate entry for " + code_label(entry.code)});
            continue;
        }
        if (auto reason = validate_entry(tool, entry)) {
            out.dropped.push_back({s.heading, *reason});
            continue;
        }
        out.checklist.entries.push_back(std::move(entry));
    }
    if (out.checklist.entries.empty())
        throw Error(ErrorKind::NoEntriesParsed,
                    "no valid checklist entries for '" + tool.name + "' (" + std::to_string(out.dropped.size()) +
                        " dropped)");
    return out;
}

Value sample_value(const ParamType& type, const std::string& name, std::size_t index) {
    switch (type.kind) {
        case TypeKind::String: return Value("example_" + name);
        case TypeKind::Integer: return Value(static_cast<std::int64_t>(index + 2));
        case TypeKind::Number: return Value(static_cast<double>(index) + 0.5);
        case TypeKind::Boolean: return Value(true);
        case TypeKind::List:
            if (type.elements.empty()) return Value::array({Value("item")});
            return Value::array({sample_value(type.elements[0], name, index)});
        case TypeKind::Tuple: {
            if (type.elements.empty()) return Value::array({1, 2});
            Value arr = Value::array();
            for (std::size_t i = 0; i < type.elements.size(); ++i)
                arr.push_back(sample_value(type.elements[i], name, index + i));
            return arr;
        }
        case TypeKind::Object: {
            Value obj = Value::object();
            obj["key"] = type.elements.size() == 2 ? sample_value(type.elements[1], name, index) : Value("value");
            return obj;
        }
        case TypeKind::Unknown: return Value("value_" + name);
    }
    return Value("value");
}

ToolCall sample_call(const ToolSpec& tool) {
    ToolCall call{tool.name, Value::object()};
    bool any_required = false;
    for (const auto& p : tool.params) any_required = any_required || p.required;
    for (std::size_t i = 0; i < tool.params.size(); ++i) {
        const auto& p = tool.params[i];
        if (p.required || (!any_required && i == 0)) call.arguments[p.name] = sample_value(p.type, p.name, i);
    }
    return call;
}

LocalChecklist synth_checklist_offline(const ToolSpec& tool, std::uint64_t seed, OfflineOptions options) {
    const std::vector<ToolSpec> tools{tool};
    const std::vector<ToolCall> gold{sample_call(tool)};
    const auto expected = render_calls(gold);

    std::string query = "Use the '" + tool.name + "' tool";
    if (gold[0].arguments.empty()) {
        query += ".";
    } else {
        query += " with ";
        bool first = true;
        for (const auto& [k, v] : gold[0].arguments.items()) {
            if (!first) query += ", ";
            first = false;
            query += k + " set to " + render_compact(v);
        }
        query += ".";
    }

    std::vector<ErrorCode> codes;
    if (options.include_wrong_name) codes.push_back(ErrorCode::WrongToolName);
    for (auto code : {ErrorCode::MissingRequiredParameter, ErrorCode::InvalidParameterType,
                      ErrorCode::EmptyParameterValue, ErrorCode::RedundantParameter, ErrorCode::InvalidFormat,
                      ErrorCode::RedundantInformation})
        codes.push_back(code);

    LocalChecklist checklist{tool, {}};
    for (auto code : codes) {
        if (perturb_sites(gold, tools, code).empty()) continue;
        auto faulty = perturb(gold, tools, code, mix_seed(seed, static_cast<std::uint64_t>(code)));
        auto finding = finding_for(tool, faulty, gold, code);
        checklist.entries.push_back({code, query, faulty, finding.message, finding.thought, expected});
    }
    return checklist;
}

ChecklistParse generate_checklist_with_client(const ToolSpec& tool, ChatClient& client) {
    std::vector<ChatMessage> messages{{Role::User, render_generation_prompt(tool)}};
    auto completion = client.complete(messages, {0.2, 2048, tool.name + "/checklist"});
    return parse_checklist_response(completion.text, tool);
}

Value checklist_to_json(const LocalChecklist& checklist) {
    Value out = Value::object();
    out["tool"] = tool_spec_to_json(checklist.tool);
    out["entries"] = Value::array();
    for (const auto& e : checklist.entries) {
        Value j = Value::object();
        j["code"] = code_label(e.code);
        j["query"] = e.query;
        j["faulty_output"] = e.faulty_output;
        j["error_message"] = e.error_message;
        j["thought"] = e.thought;
        if (e.expected_output) j["expected_output"] = *e.expected_output;
        out["entries"].push_back(std::move(j));
    }
    return out;
}

LocalChecklist checklist_from_json(const Value& v) {
    LocalChecklist out;
    out.tool = parse_tool_spec(v.at("tool"));
    for (const auto& j : v.at("entries")) {
        auto code = parse_code_label(j.at("code").get<std::string>());
        if (!code) throw Error(ErrorKind::InvalidArgument, "unknown checklist code " + j.at("code").dump());
        LocalChecklistEntry e;
        e.code = *code;
        e.query = j.value("query", "");
        e.faulty_output = j.at("faulty_output").get<std::string>();
        e.error_message = j.value("error_message", "");
        e.thought = j.value("thought", "");
        if (auto x = j.find("expected_output"); x != j.end() && x->is_string()) e.expected_output = x->get<std::string>();
        out.entries.push_back(std::move(e));
    }
    return out;
}

std::string render_checklist_text(const LocalChecklist& checklist) {
    std::string out = "Tool Information\n\n" + prompts::render_tool_info(checklist.tool) + "\n\n---\n";
    for (const auto& e : checklist.entries) {
        out += "\nError " + std::to_string(static_cast<int>(e.code)) + ": " + std::string(error_title(e.code)) +
               "\n\nQuery: \"" + e.query + "\"\n\nFunction Calling Output: " + e.faulty_output +
               "\n\nError Message: " + e.error_message + "\n\nThought of Error: " + e.thought + "\n";
        if (e.expected_output) out += "\nCorrect Output: " + *e.expected_output + "\n";
        out += "\n---\n";
    }
    return out;
}

}  // namespace toolcheck
