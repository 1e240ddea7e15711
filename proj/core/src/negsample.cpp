#include "toolcheck/negsample.hpp"

#include "toolcheck/error.hpp"
#include "toolcheck/localgen.hpp"
#include "toolcheck/prompts.hpp"
#include "toolcheck/rng.hpp"

#include <algorithm>
#include <cctype>
#include <future>
#include <optional>
#include <thread>

namespace toolcheck {

namespace {

const ToolSpec* find_tool(const std::vector<ToolSpec>& tools, const std::string& name) {
    for (const auto& t : tools)
        if (t.name == name) return &t;
    return nullptr;
}

bool is_integer_text(const std::string& s) {
    if (s.empty() || s.size() > 18) return false;
    std::size_t i = (s[0] == '-') ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

// A value of a different JSON category than `v`.
Value retype(const Value& v) {
    if (v.is_number_integer() || v.is_number_float()) return Value(v.dump());
    if (v.is_boolean()) return Value(v.get<bool>() ? "true" : "false");
    if (v.is_string()) {
        const auto& s = v.get_ref<const std::string&>();
        if (is_integer_text(s)) return Value(std::stoll(s));
        return Value::array({v});
    }
    return Value(render_compact(v));
}

Value blank(const Value& v) {
    if (v.is_string()) return Value("");
    if (v.is_array()) return Value::array();
    return Value(nullptr);
}

// The declaration of `key`, from the called tool when it declares it.
const ParamSpec* declaring_param(const std::vector<ToolSpec>& tools, const std::string& key,
                                 const std::string& tool_name = {}) {
    for (const auto& t : tools)
        if (t.name == tool_name)
            if (auto p = t.find_param(key)) return p;
    for (const auto& t : tools)
        if (auto p = t.find_param(key)) return p;
    return nullptr;
}

// Value for an injected redundant key: a non-empty value of the declared type,
// preferring one gold already uses for that key, then any gold value of that
// type, then a synthesized sample. Anything else would add a second error.
Value redundant_value(const std::vector<ToolCall>& gold, const std::vector<ToolSpec>& tools, const std::string& key,
                      const std::string& tool_name) {
    const ParamSpec* p = declaring_param(tools, key, tool_name);
    if (!p) return Value("");
    auto fits = [&](const Value& v) {
        return !is_empty_value(v) && (p->type.kind == TypeKind::Unknown || value_matches_type(v, p->type));
    };
    for (const auto& c : gold)
        if (auto it = c.arguments.find(key); it != c.arguments.end() && fits(*it)) return *it;
    if (p->type.kind != TypeKind::Unknown)
        for (const auto& c : gold)
            for (const auto& [_, v] : c.arguments.items())
                if (fits(v)) return v;
    return sample_value(p->type, key, 0);
}

std::string mutate_name(const std::string& name, const std::vector<ToolSpec>& tools) {
    std::vector<std::string> candidates;
    if (!name.empty() && std::isalpha(static_cast<unsigned char>(name[0]))) {
        std::string toggled = name;
        auto c = static_cast<unsigned char>(toggled[0]);
        toggled[0] = static_cast<char>(std::isupper(c) ? std::tolower(c) : std::toupper(c));
        candidates.push_back(toggled);
    }
    candidates.push_back(name + "_tool");
    for (int i = 2; i < 100; ++i) candidates.push_back(name + "_v" + std::to_string(i));
    for (const auto& c : candidates)
        if (!find_tool(tools, c)) return c;
    return name + "_unlisted";
}

std::string wrong_key_rendering(const std::vector<ToolCall>& gold) {
    Value arr = Value::array();
    for (const auto& c : gold) {
        Value el = Value::object();
        el["Name"] = c.name;
        el["Parameter"] = c.arguments;
        arr.push_back(std::move(el));
    }
    return render_compact(arr.size() == 1 ? arr[0] : arr);
}

std::string prose_wrapping(const std::vector<ToolCall>& gold) {
    if (gold.empty())
        return "Based on the query, no function call is needed. Here is the output in the required JSON format:\n[]";
    std::vector<std::string> names;
    for (const auto& c : gold)
        if (std::find(names.begin(), names.end(), c.name) == names.end()) names.push_back(c.name);
    std::string list;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) list += (i + 1 == names.size()) ? " and " : ", ";
        list += "'" + names[i] + "'";
    }
    return "Based on the query, I will make a function call to the " + list +
           (names.size() == 1 ? " tool" : " tools") +
           " to get the query answered. Here is the output in the required JSON format:\n" + render_calls(gold);
}

}  // namespace

PerturbPolicy PerturbPolicy::uniform(std::uint64_t seed) {
    PerturbPolicy p;
    p.allowed_codes.insert(kAllErrorCodes.begin(), kAllErrorCodes.end());
    p.seed = seed;
    return p;
}

double PerturbPolicy::weight(ErrorCode code) const {
    if (!allowed_codes.count(code)) return 0;
    auto it = weights.find(code);
    return it == weights.end() ? 1.0 : std::max(0.0, it->second);
}

std::vector<PerturbSite> perturb_sites(const std::vector<ToolCall>& gold, const std::vector<ToolSpec>& tools,
                                       ErrorCode code) {
    std::vector<PerturbSite> sites;
    switch (code) {
        case ErrorCode::WrongToolName:
            for (std::size_t c = 0; c < gold.size(); ++c) sites.push_back({c, "", 0});
            break;
        case ErrorCode::MissingRequiredParameter:
        case ErrorCode::InvalidParameterType:
        case ErrorCode::EmptyParameterValue:
            for (std::size_t c = 0; c < gold.size(); ++c) {
                const ToolSpec* spec = find_tool(tools, gold[c].name);
                if (!spec) continue;
                for (const auto& [key, value] : gold[c].arguments.items()) {
                    const ParamSpec* p = spec->find_param(key);
                    if (!p) continue;
                    bool ok = false;
                    if (code == ErrorCode::MissingRequiredParameter) ok = p->required;
                    if (code == ErrorCode::InvalidParameterType)
                        ok = !value.is_null() &&
                             (p->type.kind == TypeKind::Unknown || !value_matches_type(retype(value), p->type));
                    if (code == ErrorCode::EmptyParameterValue) ok = !is_empty_value(value);
                    if (ok) sites.push_back({c, key, 0});
                }
            }
            break;
        case ErrorCode::RedundantParameter:
            for (std::size_t c = 0; c < gold.size(); ++c) {
                std::vector<std::string> seen;
                for (const auto& t : tools)
                    for (const auto& p : t.params) {
                        if (gold[c].arguments.contains(p.name)) continue;
                        if (std::find(seen.begin(), seen.end(), p.name) != seen.end()) continue;
                        seen.push_back(p.name);
                        sites.push_back({c, p.name, 0});
                    }
            }
            break;
        case ErrorCode::InvalidFormat:
            if (!gold.empty()) sites.push_back({0, "", 0});
            break;
        case ErrorCode::RedundantInformation:
            sites.push_back({0, "", 0});
            break;
        case ErrorCode::WrongNumberOfTools:
            for (std::size_t c = 0; c < gold.size(); ++c) {
                sites.push_back({c, "", 0});
                sites.push_back({c, "", 1});
            }
            break;
    }
    return sites;
}

std::string perturb_at(const std::vector<ToolCall>& gold, const std::vector<ToolSpec>& tools, ErrorCode code,
                       const PerturbSite& site) {
    if (code != ErrorCode::RedundantInformation && site.call >= gold.size())
        throw Error(ErrorKind::Inapplicable, "site call index out of range");
    auto calls = gold;
    switch (code) {
        case ErrorCode::WrongToolName:
            calls[site.call].name = mutate_name(calls[site.call].name, tools);
            break;
        case ErrorCode::MissingRequiredParameter:
            calls[site.call].arguments.erase(site.key);
            break;
        case ErrorCode::InvalidParameterType:
            calls[site.call].arguments[site.key] = retype(calls[site.call].arguments.at(site.key));
            break;
        case ErrorCode::EmptyParameterValue:
            calls[site.call].arguments[site.key] = blank(calls[site.call].arguments.at(site.key));
            break;
        case ErrorCode::RedundantParameter:
            if (calls[site.call].arguments.contains(site.key))
                throw Error(ErrorKind::Inapplicable, "'" + site.key + "' is already an argument");
            calls[site.call].arguments[site.key] = redundant_value(gold, tools, site.key, calls[site.call].name);
            break;
        case ErrorCode::InvalidFormat:
            return wrong_key_rendering(gold);
        case ErrorCode::RedundantInformation:
            return prose_wrapping(gold);
        case ErrorCode::WrongNumberOfTools:
            if (site.variant == 0)
                calls.insert(calls.begin() + static_cast<std::ptrdiff_t>(site.call) + 1, calls[site.call]);
            else
                calls.erase(calls.begin() + static_cast<std::ptrdiff_t>(site.call));
            break;
    }
    return render_calls(calls);
}

std::string perturb(const std::vector<ToolCall>& gold, const std::vector<ToolSpec>& tools, ErrorCode code,
                    std::uint64_t seed) {
    auto sites = perturb_sites(gold, tools, code);
    if (sites.empty())
        throw Error(ErrorKind::Inapplicable, "no site for " + code_label(code) + " (" +
                                                 std::string(error_title(code)) + ")");
    Rng rng(seed);
    return perturb_at(gold, tools, code, sites[pick_index(rng, sites.size())]);
}

std::uint64_t case_seed(std::uint64_t policy_seed, const std::string& case_id) {
    return mix_seed(policy_seed, stable_hash(case_id));
}

namespace {

// Outcome for one case: a pair with its injected code, or a skip reason.
struct CaseResult {
    std::optional<PreferencePair> pair;
    ErrorCode code = ErrorCode::WrongToolName;
    std::string skip_reason;
};

CaseResult build_case(const EvalCase& c, const PerturbPolicy& policy) {
    CaseResult r;
    const auto registry = c.registry();
    const auto chosen = render_calls(c.gold);
    auto gold_findings = check(parse_strict(chosen), registry, &c.gold, CheckMode::Referenced);
    if (!gold_findings.empty()) {
        r.skip_reason = "gold is not clean (" + code_label(gold_findings.front().code) + ")";
        return r;
    }

    std::vector<ErrorCode> applicable;
    std::vector<double> weights;
    for (auto code : kAllErrorCodes) {
        double w = policy.weight(code);
        if (w <= 0 || perturb_sites(c.gold, c.tools, code).empty()) continue;
        applicable.push_back(code);
        weights.push_back(w);
    }
    if (applicable.empty()) {
        r.skip_reason = "no allowed error code applies";
        return r;
    }

    const auto seed = case_seed(policy.seed, c.id);
    Rng rng(seed);
    const auto code = applicable[weighted_index(rng, weights)];
    PreferencePair pair;
    pair.prompt = prompts::render_case_prompt(c);
    pair.chosen = chosen;
    pair.rejected = perturb(c.gold, c.tools, code, mix_seed(seed, static_cast<std::uint64_t>(code)));
    pair.injected_error = code;
    if (!validate_pair(pair, registry, c.gold)) {
        r.skip_reason = "rejected answer does not trigger " + code_label(code);
        return r;
    }
    r.pair = std::move(pair);
    r.code = code;
    return r;
}

}  // namespace

PtcBuild build_ptc(const std::vector<EvalCase>& cases, const PerturbPolicy& policy) {
    // Each case depends only on its own id and the policy, so cases are built
    // in parallel chunks and merged back in input order.
    std::vector<CaseResult> results(cases.size());
    std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
    if (cases.size() < 128) workers = 1;
    const std::size_t chunk = (cases.size() + workers - 1) / workers;
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk, hi = std::min(cases.size(), lo + chunk);
        if (lo >= hi) break;
        jobs.push_back(std::async(std::launch::async, [&, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) results[i] = build_case(cases[i], policy);
        }));
    }
    for (auto& j : jobs) j.get();

    PtcBuild out;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        auto& r = results[i];
        if (!r.pair) {
            out.skipped.push_back({cases[i].id, std::move(r.skip_reason)});
            continue;
        }
        out.pairs.push_back(std::move(*r.pair));
        out.plan.push_back({cases[i].id, r.code});
    }
    return out;
}

bool validate_pair(const PreferencePair& pair, const ToolRegistry& registry, const std::vector<ToolCall>& gold) {
    if (pair.chosen == pair.rejected || !pair.injected_error) return false;
    ParseOutcome chosen;
    try {
        chosen = parse_strict(pair.chosen);
    } catch (const Error&) {
        return false;
    }
    if (!check(chosen, registry, &gold, CheckMode::Referenced).empty()) return false;
    auto findings = check(parse_lenient(pair.rejected), registry, &gold, CheckMode::Referenced);
    return has_code(findings, *pair.injected_error);
}

std::vector<ChatMessage> build_negative_prompt(const EvalCase& c, const std::string& checklist_text) {
    auto system = prompts::replace_all(std::string(prompts::kNegativeSystemPrompt), "<checklist>", checklist_text);
    auto user = prompts::replace_all(std::string(prompts::kNegativeUserPrompt), "<user_query>", c.query);
    user = prompts::replace_all(user, "<groundtruth>", render_calls(c.gold));
    return {{Role::System, system}, {Role::User, user}};
}

std::optional<PreferencePair> perturb_with_client(const EvalCase& c, ChatClient& client,
                                                  const std::string& checklist_text) {
    auto completion = client.complete(build_negative_prompt(c, checklist_text), {0.2, 512, c.id + "/negative"});
    const auto registry = c.registry();
    auto findings = check(parse_lenient(completion.text), registry, &c.gold, CheckMode::Referenced);
    if (findings.empty()) return std::nullopt;
    PreferencePair pair;
    pair.prompt = prompts::render_case_prompt(c);
    pair.chosen = render_calls(c.gold);
    pair.rejected = completion.text;
    pair.injected_error = findings.front().code;
    if (!validate_pair(pair, registry, c.gold)) return std::nullopt;
    return pair;
}

}  // namespace toolcheck
