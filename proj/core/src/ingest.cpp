#include "toolcheck/ingest.hpp"

#include "toolcheck/error.hpp"

#include <fstream>
#include <map>
#include <mutex>
#include <set>

namespace toolcheck {

std::string_view role_name(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

std::optional<Role> parse_role(std::string_view name) {
    if (name == "system") return Role::System;
    if (name == "user") return Role::User;
    if (name == "assistant") return Role::Assistant;
    return std::nullopt;
}

Value message_to_json(const ChatMessage& m) {
    Value out = Value::object();
    out["role"] = std::string(role_name(m.role));
    out["content"] = m.content;
    return out;
}

ChatMessage message_from_json(const Value& v) {
    if (!v.is_object()) throw Error(ErrorKind::InvalidArgument, "message is not an object");
    auto role = parse_role(v.value("role", ""));
    if (!role) throw Error(ErrorKind::InvalidArgument, "message has an unknown role");
    auto content = v.find("content");
    if (content == v.end() || !content->is_string())
        throw Error(ErrorKind::InvalidArgument, "message has no text content");
    return ChatMessage{*role, content->get<std::string>()};
}

namespace {

void require_gold_coverage(const EvalCase& c) {
    std::set<std::string> names;
    for (const auto& t : c.tools) names.insert(t.name);
    for (const auto& g : c.gold)
        if (!names.count(g.name))
            throw Error(ErrorKind::InvariantViolation, "gold call '" + g.name + "' is not among the case's tools");
}

// Some datasets store nested JSON as a string.
Value maybe_embedded(const Value& v) {
    if (v.is_string()) return parse_json_unique_keys(v.get<std::string>());
    return v;
}

EvalCase xlam_adapter(const Value& j, std::size_t line) {
    EvalCase c;
    if (auto id = j.find("id"); id != j.end()) c.id = id->is_string() ? id->get<std::string>() : id->dump();
    else c.id = "line-" + std::to_string(line);
    c.query = j.at("query").get<std::string>();
    for (const auto& t : maybe_embedded(j.at("tools"))) c.tools.push_back(parse_tool_spec(t));
    c.gold = calls_from_json(maybe_embedded(j.at("answers")));
    require_gold_coverage(c);
    return c;
}

struct AdapterTable {
    std::mutex mu;
    std::map<std::string, CaseAdapter> adapters{{"xlam", xlam_adapter}};
};

AdapterTable& adapter_table() {
    static AdapterTable table;
    return table;
}

}  // namespace

void write_json_lines(const std::vector<Value>& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::UnreadableFile, path.string());
    for (const auto& r : rows) out << r.dump() << '\n';
    if (!out) throw Error(ErrorKind::UnreadableFile, path.string());
}

Value case_to_json(const EvalCase& c) {
    Value out = Value::object();
    out["id"] = c.id;
    out["query"] = c.query;
    out["tools"] = Value::array();
    for (const auto& t : c.tools) out["tools"].push_back(tool_spec_to_json(t));
    out["gold"] = calls_to_json(c.gold);
    if (!c.context.empty()) {
        out["context"] = Value::array();
        for (const auto& m : c.context) out["context"].push_back(message_to_json(m));
    }
    return out;
}

EvalCase case_from_json(const Value& v) {
    if (!v.is_object()) throw Error(ErrorKind::InvalidArgument, "case is not an object");
    EvalCase c;
    auto id = v.find("id");
    if (id == v.end()) throw Error(ErrorKind::InvalidArgument, "case has no id");
    c.id = id->is_string() ? id->get<std::string>() : id->dump();
    auto query = v.find("query");
    if (query == v.end() || !query->is_string()) throw Error(ErrorKind::InvalidArgument, "case has no query");
    c.query = *query;
    auto tools = v.find("tools");
    if (tools == v.end() || !tools->is_array()) throw Error(ErrorKind::InvalidArgument, "case has no tools list");
    for (const auto& t : *tools) c.tools.push_back(parse_tool_spec(t));
    auto gold = v.find("gold");
    if (gold != v.end() && !gold->is_null()) c.gold = calls_from_json(*gold);
    if (auto ctx = v.find("context"); ctx != v.end() && ctx->is_array())
        for (const auto& m : *ctx) c.context.push_back(message_from_json(m));
    require_gold_coverage(c);
    return c;
}

void register_case_adapter(const std::string& name, CaseAdapter adapter) {
    auto& table = adapter_table();
    std::lock_guard lock(table.mu);
    table.adapters[name] = std::move(adapter);
}

std::vector<std::string> case_adapter_names() {
    auto& table = adapter_table();
    std::lock_guard lock(table.mu);
    std::vector<std::string> names;
    for (const auto& [k, _] : table.adapters) names.push_back(k);
    return names;
}

LoadResult load_cases(const std::filesystem::path& path, const std::string& format) {
    CaseAdapter convert;
    if (format == "unified") {
        convert = [](const Value& j, std::size_t) { return case_from_json(j); };
    } else if (format.starts_with("adapter:")) {
        auto name = format.substr(8);
        auto& table = adapter_table();
        std::lock_guard lock(table.mu);
        auto it = table.adapters.find(name);
        if (it == table.adapters.end()) throw Error(ErrorKind::InvalidArgument, "unknown adapter '" + name + "'");
        convert = it->second;
    } else {
        throw Error(ErrorKind::InvalidArgument, "unknown case format '" + format + "'");
    }

    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::UnreadableFile, path.string());

    LoadResult result;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        try {
            result.cases.push_back(convert(parse_json_unique_keys(line), lineno));
        } catch (const std::exception& e) {
            result.skipped.push_back({lineno, e.what()});
        }
    }
    if (result.cases.empty())
        throw Error(ErrorKind::EmptyDataset, path.string() + ": no valid cases (" +
                                                 std::to_string(result.skipped.size()) + " skipped lines)");
    return result;
}

void write_cases(const std::vector<EvalCase>& cases, const std::filesystem::path& path) {
    std::vector<Value> rows;
    rows.reserve(cases.size());
    for (const auto& c : cases) rows.push_back(case_to_json(c));
    write_json_lines(rows, path);
}

Value pair_to_json(const PreferencePair& p) {
    Value out = Value::object();
    out["prompt"] = p.prompt;
    out["chosen"] = p.chosen;
    out["rejected"] = p.rejected;
    out["injected_error"] = p.injected_error ? Value(code_label(*p.injected_error)) : Value(nullptr);
    Value labels = Value::object();
    labels["chosen"] = p.label_chosen;
    labels["rejected"] = p.label_rejected;
    out["labels"] = std::move(labels);
    return out;
}

PreferencePair pair_from_json(const Value& v) {
    PreferencePair p;
    p.prompt = v.at("prompt").get<std::string>();
    p.chosen = v.at("chosen").get<std::string>();
    p.rejected = v.at("rejected").get<std::string>();
    if (auto e = v.find("injected_error"); e != v.end() && !e->is_null()) {
        auto code = e->is_number_integer() ? parse_code_label(std::to_string(e->get<int>()))
                                           : parse_code_label(e->get<std::string>());
        if (!code) throw Error(ErrorKind::InvalidArgument, "unknown injected_error " + e->dump());
        p.injected_error = code;
    }
    if (auto l = v.find("labels"); l != v.end() && l->is_object()) {
        p.label_chosen = l->value("chosen", true);
        p.label_rejected = l->value("rejected", false);
    }
    return p;
}

void write_ptc(const std::vector<PreferencePair>& pairs, const std::filesystem::path& path) {
    std::vector<Value> rows;
    rows.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        if (p.chosen == p.rejected)
            throw Error(ErrorKind::InvariantViolation, "pair " + std::to_string(i) + ": chosen equals rejected");
        try {
            parse_strict(p.chosen);
        } catch (const Error& e) {
            throw Error(ErrorKind::InvariantViolation,
                        "pair " + std::to_string(i) + ": chosen is not a clean call list (" + e.what() + ")");
        }
        rows.push_back(pair_to_json(p));
    }
    write_json_lines(rows, path);
}

std::vector<PreferencePair> read_ptc(const std::filesystem::path& path) {
    std::vector<PreferencePair> pairs;
    for (const auto& v : read_json_lines(path)) pairs.push_back(pair_from_json(v));
    return pairs;
}

std::vector<Value> read_json_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::UnreadableFile, path.string());
    std::vector<Value> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        try {
            rows.push_back(Value::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorKind::InvalidArgument, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

}  // namespace toolcheck
