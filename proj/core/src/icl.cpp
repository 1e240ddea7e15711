#include "toolcheck/icl.hpp"

#include "toolcheck/error.hpp"
#include "toolcheck/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <atomic>
#include <exception>
#include <future>
#include <set>

namespace toolcheck {

std::size_t estimate_tokens(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (char ch : text) {
        bool space = std::isspace(static_cast<unsigned char>(ch)) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

std::vector<ChatMessage> build_round1(const EvalCase& c, const std::string& global_text) {
    std::vector<ChatMessage> out;
    out.push_back({Role::System, prompts::render_instruction(c.tools)});
    out.insert(out.end(), c.context.begin(), c.context.end());
    std::string user = c.query;
    if (!global_text.empty()) user += "\n\n" + global_text;
    out.push_back({Role::User, std::move(user)});
    return out;
}

Round2Build build_round2(const std::vector<ChatMessage>& round1_messages, const std::string& round1_output,
                         const std::vector<LocalChecklist>& checklists, const ToolRegistry& registry) {
    Round2Build b;
    b.messages = round1_messages;
    b.messages.push_back({Role::Assistant, round1_output});

    ParseOutcome parsed = parse_lenient(round1_output);
    b.findings = check(parsed, registry);

    std::string user(prompts::kRoundTwoInstruction);
    if (!b.findings.empty()) {
        user += "\n\nChecker findings for your previous output:";
        for (const auto& f : b.findings) user += "\n- " + f.message;
    }
    std::vector<std::string> invoked;
    for (const auto& call : parsed.calls)
        if (std::find(invoked.begin(), invoked.end(), call.name) == invoked.end()) invoked.push_back(call.name);
    for (const auto& name : invoked) {
        auto it = std::find_if(checklists.begin(), checklists.end(),
                               [&](const LocalChecklist& cl) { return cl.tool.name == name; });
        if (it == checklists.end()) {
            b.missing_checklists.push_back(name);
            continue;
        }
        user += "\n\n------\n\nError checklist for tool '" + name + "':\n\n" + render_checklist_text(*it);
    }
    b.messages.push_back({Role::User, std::move(user)});
    return b;
}

namespace {

Value messages_json(const std::vector<ChatMessage>& ms) {
    Value out = Value::array();
    for (const auto& m : ms) out.push_back(message_to_json(m));
    return out;
}

Value usage_json(const TokenUsage& u) {
    Value v = Value::object();
    v["prompt_tokens"] = u.prompt_tokens;
    v["generated_tokens"] = u.generated_tokens;
    return v;
}

TokenUsage usage_from_json(const Value& v) {
    return TokenUsage{v.value("prompt_tokens", std::int64_t{0}), v.value("generated_tokens", std::int64_t{0})};
}

Value round_json(const RoundRecord& r) {
    Value v = Value::object();
    v["messages"] = messages_json(r.messages);
    v["output"] = r.output;
    v["usage"] = usage_json(r.usage);
    Value fs = Value::array();
    for (const auto& f : r.findings) fs.push_back(finding_to_json(f));
    v["findings"] = std::move(fs);
    v["skipped"] = r.skipped ? Value(*r.skipped) : Value(nullptr);
    return v;
}

RoundRecord round_from_json(const Value& v) {
    if (!v.is_object()) throw Error(ErrorKind::InvalidArgument, "round record is not an object");
    RoundRecord r;
    for (const auto& m : v.value("messages", Value::array())) r.messages.push_back(message_from_json(m));
    r.output = v.value("output", "");
    if (auto it = v.find("usage"); it != v.end()) r.usage = usage_from_json(*it);
    for (const auto& f : v.value("findings", Value::array())) r.findings.push_back(finding_from_json(f));
    if (auto it = v.find("skipped"); it != v.end() && it->is_string()) r.skipped = it->get<std::string>();
    return r;
}

void check_budget(const IclOptions& options, const TokenUsage& total, const std::string& id, int round) {
    if (options.max_tokens_per_case <= 0) return;
    if (total.prompt_tokens + total.generated_tokens > options.max_tokens_per_case)
        throw Error(ErrorKind::BudgetExceeded, "case '" + id + "' exceeded " +
                                                   std::to_string(options.max_tokens_per_case) +
                                                   " tokens after round " + std::to_string(round));
}

Completion call_round(ChatClient& client, const std::vector<ChatMessage>& messages, const IclOptions& options,
                      const std::string& id, int round) {
    CompletionParams params = options.params;
    params.tag = id + "/round" + std::to_string(round);
    try {
        Completion c = client.complete(messages, params);
        if (c.usage.prompt_tokens < 0 || c.usage.generated_tokens < 0)
            throw Error(ErrorKind::ClientError, "negative usage counts");
        return c;
    } catch (const Error& e) {
        throw Error(ErrorKind::ClientError, "case '" + id + "' round " + std::to_string(round) + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error(ErrorKind::ClientError, "case '" + id + "' round " + std::to_string(round) + ": " + e.what());
    }
}

}  // namespace

Value run_record_to_json(const IclRunRecord& r) {
    Value v = Value::object();
    v["id"] = r.id;
    v["round1"] = round_json(r.round1);
    v["round2"] = r.round2 ? round_json(*r.round2) : Value(nullptr);
    v["missing_checklists"] = r.missing_checklists;
    v["final_calls"] = calls_to_json(r.final_calls);
    v["usage"] = usage_json(r.usage);
    return v;
}

IclRunRecord run_record_from_json(const Value& v) {
    if (!v.is_object() || !v.contains("id") || !v.contains("round1"))
        throw Error(ErrorKind::InvalidArgument, "run record needs id and round1");
    IclRunRecord r;
    r.id = v["id"].is_string() ? v["id"].get<std::string>() : v["id"].dump();
    r.round1 = round_from_json(v["round1"]);
    if (auto it = v.find("round2"); it != v.end() && !it->is_null()) r.round2 = round_from_json(*it);
    for (const auto& n : v.value("missing_checklists", Value::array())) r.missing_checklists.push_back(n.get<std::string>());
    r.final_calls = calls_from_json(v.value("final_calls", Value::array()));
    if (auto it = v.find("usage"); it != v.end()) r.usage = usage_from_json(*it);
    return r;
}

IclRunRecord run_icl(const EvalCase& c, ChatClient& client, const IclOptions& options) {
    IclRunRecord rec;
    rec.id = c.id;
    const ToolRegistry registry = c.registry();

    rec.round1.messages = build_round1(c, options.vanilla ? std::string() : render_global_checklist());
    Completion first = call_round(client, rec.round1.messages, options, c.id, 1);
    rec.round1.output = first.text;
    rec.round1.usage = first.usage;
    ParseOutcome parsed1 = parse_lenient(first.text);
    rec.round1.findings = check(parsed1, registry);
    rec.usage += first.usage;
    rec.final_calls = parsed1.calls;
    check_budget(options, rec.usage, c.id, 1);

    if (!options.two_round) return rec;

    RoundRecord r2;
    if (parsed1.strict && parsed1.calls.empty()) {
        // Nothing was called, so there is nothing to correct.
        r2.skipped = "round 1 output was an empty call list";
        rec.round2 = std::move(r2);
        return rec;
    }
    Round2Build b = build_round2(rec.round1.messages, first.text, options.checklists, registry);
    rec.missing_checklists = b.missing_checklists;
    r2.messages = std::move(b.messages);
    Completion second = call_round(client, r2.messages, options, c.id, 2);
    r2.output = second.text;
    r2.usage = second.usage;
    ParseOutcome parsed2 = parse_lenient(second.text);
    r2.findings = check(parsed2, registry);
    rec.usage += second.usage;
    rec.final_calls = parsed2.calls;
    rec.round2 = std::move(r2);
    check_budget(options, rec.usage, c.id, 2);
    return rec;
}

std::vector<IclRunRecord> run_icl_batch(const std::vector<EvalCase>& cases, ChatClient& client,
                                        const IclOptions& options, std::size_t in_flight) {
    in_flight = std::max<std::size_t>(in_flight, 1);
    std::vector<IclRunRecord> out(cases.size());
    std::vector<std::exception_ptr> errors(cases.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cases.size(); i = next++) {
            try {
                out[i] = run_icl(cases[i], client, options);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::future<void>> jobs;
    std::size_t workers = std::min(in_flight, cases.size());
    for (std::size_t w = 0; w < workers; ++w) jobs.push_back(std::async(std::launch::async, worker));
    for (auto& j : jobs) j.get();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

CostSummary cost_summary(const std::vector<IclRunRecord>& records, std::optional<double> price_in_per_mtok,
                         std::optional<double> price_out_per_mtok) {
    CostSummary s;
    s.cases = records.size();
    for (const auto& r : records) s.usage += r.usage;
    if (price_in_per_mtok && price_out_per_mtok && s.cases > 0) {
        double total = (static_cast<double>(s.usage.prompt_tokens) * *price_in_per_mtok +
                        static_cast<double>(s.usage.generated_tokens) * *price_out_per_mtok) /
                       1e6;
        s.cost_per_case = total / static_cast<double>(s.cases);
    }
    return s;
}

void ScriptedChatClient::add(const std::string& tag, Completion completion) { script_[tag] = std::move(completion); }

ScriptedChatClient::ScriptedChatClient(const Value& script) {
    if (!script.is_object()) throw Error(ErrorKind::InvalidArgument, "script must be an object keyed by tag");
    for (const auto& [tag, entry] : script.items()) {
        Completion c;
        if (entry.is_string()) {
            c.text = entry.get<std::string>();
        } else {
            c.text = entry.value("text", "");
            c.usage = usage_from_json(entry);
        }
        add(tag, std::move(c));
    }
}

Completion ScriptedChatClient::complete(const std::vector<ChatMessage>&, const CompletionParams& params) {
    auto it = script_.find(params.tag);
    if (it == script_.end()) throw Error(ErrorKind::ClientError, "no scripted completion for '" + params.tag + "'");
    std::lock_guard<std::mutex> lock(mu_);
    ++calls_;
    served_ += it->second.usage;
    return it->second;
}

std::size_t ScriptedChatClient::calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return calls_;
}

TokenUsage ScriptedChatClient::served_usage() const {
    std::lock_guard<std::mutex> lock(mu_);
    return served_;
}

}  // namespace toolcheck
