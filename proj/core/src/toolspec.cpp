#include "toolcheck/toolspec.hpp"

#include "toolcheck/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

namespace toolcheck {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Splits "A, B[C, D]" on top-level commas. Returns nullopt on unbalanced brackets.
std::optional<std::vector<std::string_view>> split_args(std::string_view s) {
    std::vector<std::string_view> parts;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '[') ++depth;
        else if (c == ']') {
            if (--depth < 0) return std::nullopt;
        } else if (c == ',' && depth == 0) {
            parts.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    if (depth != 0) return std::nullopt;
    parts.push_back(trim(s.substr(start)));
    return parts;
}

const ParamType kUnknown{TypeKind::Unknown, {}};

}  // namespace

ParamType parse_param_type(std::string_view text) {
    auto s = trim(text);
    auto open = s.find('[');
    std::string head = lower(trim(s.substr(0, open)));

    if (open == std::string_view::npos) {
        if (head == "str" || head == "string") return {TypeKind::String, {}};
        if (head == "int" || head == "integer") return {TypeKind::Integer, {}};
        if (head == "float" || head == "number" || head == "double") return {TypeKind::Number, {}};
        if (head == "bool" || head == "boolean") return {TypeKind::Boolean, {}};
        if (head == "list" || head == "array") return {TypeKind::List, {}};
        if (head == "tuple") return {TypeKind::Tuple, {}};
        if (head == "dict" || head == "object") return {TypeKind::Object, {}};
        return kUnknown;
    }

    if (s.back() != ']') return kUnknown;
    auto args = split_args(s.substr(open + 1, s.size() - open - 2));
    if (!args) return kUnknown;
    std::vector<ParamType> elements;
    for (auto a : *args) {
        if (a.empty()) return kUnknown;
        elements.push_back(parse_param_type(a));
    }

    if (head == "list" || head == "array") {
        if (elements.size() != 1) return kUnknown;
        return {TypeKind::List, std::move(elements)};
    }
    if (head == "tuple") return {TypeKind::Tuple, std::move(elements)};
    if (head == "dict") {
        if (elements.size() != 2) return kUnknown;
        return {TypeKind::Object, std::move(elements)};
    }
    return kUnknown;
}

std::string param_type_to_string(const ParamType& type) {
    auto join = [&](std::string head) {
        if (type.elements.empty()) return head;
        head += '[';
        for (std::size_t i = 0; i < type.elements.size(); ++i) {
            if (i) head += ", ";
            head += param_type_to_string(type.elements[i]);
        }
        return head + ']';
    };
    switch (type.kind) {
        case TypeKind::String: return "str";
        case TypeKind::Integer: return "int";
        case TypeKind::Number: return "float";
        case TypeKind::Boolean: return "bool";
        case TypeKind::List: return join("List");
        case TypeKind::Tuple: return join("Tuple");
        case TypeKind::Object: return type.elements.empty() ? "dict" : join("Dict");
        case TypeKind::Unknown: return "unknown";
    }
    return "unknown";
}

bool value_matches_type(const Value& v, const ParamType& type) {
    switch (type.kind) {
        case TypeKind::Unknown: return true;
        case TypeKind::String: return v.is_string();
        case TypeKind::Integer: return v.is_number_integer();
        case TypeKind::Number: return v.is_number();
        case TypeKind::Boolean: return v.is_boolean();
        case TypeKind::List:
            if (!v.is_array()) return false;
            if (type.elements.empty()) return true;
            return std::all_of(v.begin(), v.end(),
                               [&](const Value& e) { return value_matches_type(e, type.elements[0]); });
        case TypeKind::Tuple:
            if (!v.is_array()) return false;
            if (type.elements.empty()) return true;
            if (v.size() != type.elements.size()) return false;
            for (std::size_t i = 0; i < v.size(); ++i)
                if (!value_matches_type(v[i], type.elements[i])) return false;
            return true;
        case TypeKind::Object:
            if (!v.is_object()) return false;
            if (type.elements.size() != 2) return true;
            for (const auto& [k, e] : v.items())
                if (!value_matches_type(e, type.elements[1])) return false;
            return true;
    }
    return false;
}

const ParamSpec* ToolSpec::find_param(std::string_view param) const {
    for (const auto& p : params)
        if (p.name == param) return &p;
    return nullptr;
}

std::vector<std::string> ToolSpec::required_names() const {
    std::vector<std::string> out;
    for (const auto& p : params)
        if (p.required) out.push_back(p.name);
    return out;
}

ToolSpec parse_tool_spec(const Value& raw) {
    if (!raw.is_object()) throw Error(ErrorKind::MalformedSpec, "tool spec is not an object");
    auto name_it = raw.find("name");
    if (name_it == raw.end() || !name_it->is_string() || name_it->get<std::string>().empty())
        throw Error(ErrorKind::MalformedSpec, "tool spec has no name");

    ToolSpec spec;
    spec.name = name_it->get<std::string>();
    if (auto d = raw.find("description"); d != raw.end() && d->is_string()) spec.description = *d;

    const Value empty = Value::object();
    const Value* props = &empty;
    const Value* required = nullptr;
    if (auto r = raw.find("required"); r != raw.end() && r->is_array()) required = &*r;

    if (auto p = raw.find("parameters"); p != raw.end() && !p->is_null()) {
        if (p->is_array()) {
            props = &*p;
        } else if (!p->is_object()) {
            throw Error(ErrorKind::MalformedSpec, "parameters of '" + spec.name + "' is not an object");
        } else if (auto pp = p->find("properties");
                   pp != p->end() && pp->is_object() && p->value("type", "") == "object") {
            props = &*pp;
            if (auto r = p->find("required"); r != p->end() && r->is_array()) required = &*r;
        } else {
            props = &*p;
        }
    }

    std::set<std::string> required_set;
    if (required)
        for (const auto& r : *required)
            if (r.is_string()) required_set.insert(r.get<std::string>());

    // The list form `[{"name": ..., "type": ...}]` is normalized to (name, info) pairs
    // so duplicate names stay visible; an object cannot carry them once parsed.
    std::vector<std::pair<std::string, Value>> entries;
    if (props->is_array()) {
        for (const auto& item : *props) {
            if (!item.is_object() || !item.contains("name") || !item["name"].is_string())
                throw Error(ErrorKind::MalformedSpec, "parameter without a name in '" + spec.name + "'");
            entries.emplace_back(item["name"].get<std::string>(), item);
        }
    } else {
        for (const auto& [pname, pinfo] : props->items()) entries.emplace_back(pname, pinfo);
    }

    std::set<std::string> seen;
    for (const auto& [pname, pinfo] : entries) {
        if (pname.empty()) throw Error(ErrorKind::MalformedSpec, "empty parameter name in '" + spec.name + "'");
        if (!seen.insert(pname).second)
            throw Error(ErrorKind::MalformedSpec, "duplicate parameter '" + pname + "' in '" + spec.name + "'");
        ParamSpec param;
        param.name = pname;
        bool marked_optional = false;
        if (pinfo.is_object()) {
            if (auto t = pinfo.find("type"); t != pinfo.end() && t->is_string()) param.type_text = *t;
            if (auto d = pinfo.find("description"); d != pinfo.end() && d->is_string()) param.description = *d;
            if (auto r = pinfo.find("required"); r != pinfo.end() && r->is_boolean())
                marked_optional = !r->get<bool>();
            if (auto o = pinfo.find("optional"); o != pinfo.end() && o->is_boolean())
                marked_optional = o->get<bool>();
        } else if (pinfo.is_string()) {
            param.type_text = pinfo.get<std::string>();
        }
        std::string_view type_view = param.type_text;
        constexpr std::string_view kOptional = ", optional";
        if (type_view.size() > kOptional.size() && type_view.ends_with(kOptional)) {
            marked_optional = true;
            type_view.remove_suffix(kOptional.size());
        }
        param.type = parse_param_type(type_view);
        if (required) param.required = required_set.count(pname) > 0;
        else param.required = !marked_optional;
        spec.params.push_back(std::move(param));
    }

    for (const auto& r : required_set)
        if (!seen.count(r))
            throw Error(ErrorKind::MalformedSpec,
                        "required parameter '" + r + "' is not declared in '" + spec.name + "'");
    return spec;
}

Value tool_spec_to_json(const ToolSpec& spec) {
    Value params = Value::object();
    for (const auto& p : spec.params) {
        Value info = Value::object();
        info["description"] = p.description;
        if (!p.type_text.empty()) info["type"] = p.type_text;
        params[p.name] = std::move(info);
    }
    Value out = Value::object();
    out["name"] = spec.name;
    out["description"] = spec.description;
    out["parameters"] = std::move(params);
    out["required"] = spec.required_names();
    return out;
}

ToolRegistry ToolRegistry::from_specs(const std::vector<ToolSpec>& specs) {
    ToolRegistry reg;
    for (const auto& s : specs) {
        auto [it, inserted] = reg.tools_.insert_or_assign(s.name, s);
        if (!inserted) reg.warnings_.push_back("duplicate tool '" + s.name + "': later definition wins");
    }
    return reg;
}

const ToolSpec* ToolRegistry::find(std::string_view name) const {
    auto it = tools_.find(name);
    return it == tools_.end() ? nullptr : &it->second;
}

std::optional<std::string> ToolRegistry::suggest(std::string_view name) const {
    auto needle = lower(name);
    for (const auto& [key, spec] : tools_)
        if (key != name && lower(key) == needle) return key;
    return std::nullopt;
}

std::vector<ToolSpec> ToolRegistry::specs() const {
    std::vector<ToolSpec> out;
    out.reserve(tools_.size());
    for (const auto& [_, s] : tools_) out.push_back(s);
    return out;
}

std::vector<ToolSpec> read_tool_specs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::UnreadableFile, path.string());
    std::vector<ToolSpec> specs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        Value raw;
        try {
            raw = parse_json_unique_keys(line);
        } catch (const Error& e) {
            throw Error(ErrorKind::MalformedSpec, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        specs.push_back(parse_tool_spec(raw));
    }
    return specs;
}

void write_tool_specs(const std::vector<ToolSpec>& specs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::UnreadableFile, path.string());
    for (const auto& s : specs) out << tool_spec_to_json(s).dump() << '\n';
}

}  // namespace toolcheck
