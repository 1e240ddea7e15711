#include "toolcheck/checker.hpp"

#include "toolcheck/error.hpp"

#include <algorithm>
#include <cctype>

namespace toolcheck {

namespace {

struct CodeInfo {
    std::string_view identifier;
    std::string_view title;
    std::string_view summary;
};

constexpr std::array<CodeInfo, 8> kCodeInfo{{
    {"WrongToolName", "Wrong Tool Name Error",
     "the tool name must exactly match one of the provided tools."},
    {"MissingRequiredParameter", "Missing Required Parameter Error",
     "every required parameter of the called tool must be filled in."},
    {"InvalidParameterType", "Invalid Parameter Type Error",
     "every parameter value must have the type declared for it."},
    {"EmptyParameterValue", "Empty Parameter Value Error",
     "parameter values must not be empty."},
    {"RedundantParameter", "Redundant Parameter Error",
     "only pass parameters that the tool defines and the query asks for."},
    {"InvalidFormat", "Invalid Function Calling Output Format Error",
     "the output must be a JSON list of {\"name\": ..., \"arguments\": {...}} objects."},
    {"RedundantInformationError", "Redundant Information Error",
     "the output must contain the function calls only, with no other text."},
    {"WrongNumberOfTools", "Wrong Number of Tools Error",
     "call exactly as many tools as the query requires."},
}};

const CodeInfo& info(ErrorCode code) { return kCodeInfo[static_cast<std::size_t>(code)]; }

std::string squote(std::string_view s) { return "'" + std::string(s) + "'"; }

std::string message_block(ErrorCode code, const std::string& message) {
    Value block = Value::object();
    block["error"] = std::string(info(code).identifier);
    block["message"] = message;
    return render_compact(block);
}

ErrorFinding make_finding(ErrorCode code, const std::string& message, std::string thought,
                          std::optional<std::size_t> call_index = std::nullopt,
                          std::optional<std::string> param = std::nullopt) {
    return ErrorFinding{code, message_block(code, message), std::move(thought), call_index, std::move(param)};
}

std::string join_quoted(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += squote(names[i]);
    }
    return out;
}

std::string type_text(const ParamSpec& p) {
    return p.type_text.empty() ? param_type_to_string(p.type) : p.type_text;
}

ErrorFinding invalid_type(std::size_t call, const std::string& param, const std::string& expected) {
    return make_finding(ErrorCode::InvalidParameterType,
                        "The " + squote(param) + " is not of " + squote(expected) + ".",
                        "Parameter " + squote(param) + " should be of type " + squote(expected) +
                            ", but an invalid type was provided. Ensure all parameters match their expected types.",
                        call, param);
}

ErrorFinding redundant_param(std::size_t call, const std::string& param) {
    return make_finding(ErrorCode::RedundantParameter,
                        "The parameter " + squote(param) + " is not indicated by the query and should not be called.",
                        "Parameter " + squote(param) +
                            " is unnecessary and was not specified in the query. Ensure only the required and "
                            "specified parameters are included in the function call.",
                        call, param);
}

std::string prose_excerpt(std::string_view raw) {
    std::string text;
    for (char c : raw) {
        if (c == '[' || c == '`') break;
        text += (c == '\n' || c == '\r') ? ' ' : c;
    }
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
    std::size_t first = 0;
    while (first < text.size() && std::isspace(static_cast<unsigned char>(text[first]))) ++first;
    text = text.substr(first);
    if (text.empty()) return "text around the call list";
    if (text.size() > 48) text = text.substr(0, 48);
    return text + "...";
}

std::size_t overlap(const ToolCall& a, const ToolCall& b) {
    std::size_t n = 0;
    for (const auto& [k, v] : a.arguments.items()) {
        auto it = b.arguments.find(k);
        if (it != b.arguments.end() && values_equal(v, *it)) ++n;
    }
    return n;
}

}  // namespace

std::string code_label(ErrorCode code) { return "E" + std::to_string(static_cast<int>(code)); }

std::optional<ErrorCode> parse_code_label(std::string_view label) {
    if (!label.empty() && (label.front() == 'E' || label.front() == 'e')) label.remove_prefix(1);
    if (label.size() != 1 || label[0] < '0' || label[0] > '7') return std::nullopt;
    return static_cast<ErrorCode>(label[0] - '0');
}

std::string_view error_identifier(ErrorCode code) { return info(code).identifier; }
std::string_view error_title(ErrorCode code) { return info(code).title; }

std::optional<ErrorCode> code_from_title(std::string_view title) {
    auto norm = [](std::string_view s) {
        std::string out;
        for (char c : s)
            if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(c));
        return out;
    };
    auto needle = norm(title);
    if (needle.ends_with("error")) needle.resize(needle.size() - 5);
    for (auto code : kAllErrorCodes) {
        auto candidate = norm(info(code).title);
        candidate.resize(candidate.size() - 5);
        if (candidate == needle) return code;
    }
    // The generation template shortens the format error's title.
    if (needle == "invalidformat" || needle == "invalidoutputformat") return ErrorCode::InvalidFormat;
    return std::nullopt;
}

Value finding_to_json(const ErrorFinding& f) {
    Value out = Value::object();
    out["code"] = code_label(f.code);
    out["error"] = std::string(error_identifier(f.code));
    out["message"] = f.message;
    out["thought"] = f.thought;
    out["call_index"] = f.call_index ? Value(*f.call_index) : Value(nullptr);
    out["param"] = f.param ? Value(*f.param) : Value(nullptr);
    return out;
}

ErrorFinding finding_from_json(const Value& v) {
    if (!v.is_object()) throw Error(ErrorKind::InvalidArgument, "finding is not an object");
    auto code = parse_code_label(v.value("code", ""));
    if (!code) throw Error(ErrorKind::InvalidArgument, "finding has an unknown code");
    ErrorFinding f{*code, v.value("message", ""), v.value("thought", ""), std::nullopt, std::nullopt};
    if (auto it = v.find("call_index"); it != v.end() && it->is_number_unsigned()) f.call_index = it->get<std::size_t>();
    if (auto it = v.find("param"); it != v.end() && it->is_string()) f.param = it->get<std::string>();
    return f;
}

std::vector<std::optional<std::size_t>> align_to_gold(const std::vector<ToolCall>& pred,
                                                      const std::vector<ToolCall>& gold) {
    struct Candidate {
        bool exact;
        std::size_t overlap, p, g;
    };
    std::vector<Candidate> cands;
    for (std::size_t p = 0; p < pred.size(); ++p)
        for (std::size_t g = 0; g < gold.size(); ++g)
            if (gold[g].name == pred[p].name)
                cands.push_back({values_equal(pred[p].arguments, gold[g].arguments), overlap(pred[p], gold[g]), p, g});
    // Global greedy: exact matches first, then larger overlap, then lowest
    // indices. A duplicated call therefore cannot steal its sibling's partner.
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.exact != b.exact) return a.exact;
        if (a.overlap != b.overlap) return a.overlap > b.overlap;
        if (a.p != b.p) return a.p < b.p;
        return a.g < b.g;
    });
    std::vector<std::optional<std::size_t>> out(pred.size());
    std::vector<bool> used(gold.size(), false);
    for (const auto& c : cands) {
        if (out[c.p] || used[c.g]) continue;
        out[c.p] = c.g;
        used[c.g] = true;
    }
    return out;
}

std::vector<ErrorFinding> check(const ParseOutcome& outcome, const ToolRegistry& registry,
                                const std::vector<ToolCall>* gold, CheckMode mode) {
    const bool referenced = mode == CheckMode::Referenced;
    if (referenced && !gold) throw Error(ErrorKind::MissingReference, "referenced mode requires gold calls");

    std::vector<ErrorFinding> findings;
    if (!outcome.strict && !outcome.salvage) {
        findings.push_back(make_finding(
            ErrorCode::InvalidFormat,
            "The function calling output does not follow the required format and cannot be parsed.",
            "The output format is incorrect due to improperly formatted keys and symbols. The correct function "
            "calling output should be a list such as [{\"name\": \"func_name1\", \"arguments\": "
            "{\"parameter_1\": \"value1\", \"parameter_2\": \"value2\"}}]."));
        return findings;
    }
    if (outcome.salvage) {
        findings.push_back(make_finding(
            ErrorCode::RedundantInformation,
            "The function calling output contains redundant text such as '" + prose_excerpt(outcome.raw) +
                "' which is unnecessary.",
            "No additional text should be included in the output. The correct function calling output should only "
            "contain: " + render_calls(outcome.calls)));
    }

    const auto& calls = outcome.calls;
    std::vector<std::optional<std::size_t>> aligned;
    if (referenced) aligned = align_to_gold(calls, *gold);

    for (std::size_t ci = 0; ci < calls.size(); ++ci) {
        const auto& call = calls[ci];
        const ToolSpec* spec = registry.find(call.name);
        if (!spec) {
            std::string message = "The tool " + squote(call.name) + " does not exist in the provided tool list.";
            if (auto near = registry.suggest(call.name)) message += " Did you mean " + squote(*near) + "?";
            findings.push_back(make_finding(
                ErrorCode::WrongToolName, message,
                "Tool " + squote(call.name) +
                    " is not one of the available tools. Use a tool name exactly as it appears in the tool "
                    "information.",
                ci));
            continue;
        }

        const ToolCall* matched = nullptr;
        if (referenced && aligned[ci]) matched = &(*gold)[*aligned[ci]];

        const auto required = spec->required_names();
        for (const auto& r : required) {
            if (call.arguments.contains(r)) continue;
            findings.push_back(make_finding(ErrorCode::MissingRequiredParameter,
                                            "The " + squote(r) + " parameter is required.",
                                            "Parameter " + squote(r) +
                                                " is missing. Ensure all required parameters (" +
                                                join_quoted(required) + ") are included in the function call.",
                                            ci, r));
        }

        for (const auto& [key, value] : call.arguments.items()) {
            const ParamSpec* param = spec->find_param(key);
            if (param && !value.is_null()) {
                if (!value_matches_type(value, param->type)) {
                    findings.push_back(invalid_type(ci, key, type_text(*param)));
                } else if (referenced && matched && param->type.kind == TypeKind::Unknown) {
                    auto it = matched->arguments.find(key);
                    if (it != matched->arguments.end() && !it->is_null() &&
                        value_category(*it) != value_category(value))
                        findings.push_back(invalid_type(ci, key, value_category(*it)));
                }
            }
            if (is_empty_value(value)) {
                findings.push_back(make_finding(ErrorCode::EmptyParameterValue,
                                                "The " + squote(key) + " parameter cannot be empty.",
                                                "Parameter " + squote(key) +
                                                    " has an empty value. It should not be empty as specified by "
                                                    "the tool's requirements.",
                                                ci, key));
            }
            if (!param) {
                findings.push_back(redundant_param(ci, key));
            } else if (matched && !matched->arguments.contains(key)) {
                findings.push_back(redundant_param(ci, key));
            }
        }
    }

    if (referenced && calls.size() != gold->size()) {
        findings.push_back(make_finding(
            ErrorCode::WrongNumberOfTools,
            "The output makes " + std::to_string(calls.size()) + " tool call(s) but the query requires " +
                std::to_string(gold->size()) + ".",
            "The number of tool calls does not match the query. Make exactly one call for each action the query "
            "asks for, without repeating or omitting calls."));
    }
    return findings;
}

std::string render_global_checklist() {
    std::string out = "Global Error Checklist: before answering, make sure your function calling output avoids "
                      "each of the following errors.\n";
    for (auto code : kAllErrorCodes) {
        out += "Error " + std::to_string(static_cast<int>(code)) + ": " + std::string(info(code).title) + " - " +
               std::string(info(code).summary) + "\n";
    }
    return out;
}

ErrorHistogram error_histogram(const std::vector<std::vector<ErrorFinding>>& findings_per_case) {
    ErrorHistogram hist;
    for (auto code : kAllErrorCodes) hist[code] = 0;
    for (const auto& findings : findings_per_case)
        for (const auto& f : findings) ++hist[f.code];
    return hist;
}

bool has_code(const std::vector<ErrorFinding>& findings, ErrorCode code) {
    for (const auto& f : findings)
        if (f.code == code) return true;
    return false;
}

}  // namespace toolcheck
