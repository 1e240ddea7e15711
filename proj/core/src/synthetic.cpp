#include "toolcheck/synthetic.hpp"

#include "toolcheck/rng.hpp"

#include <array>
#include <string_view>

namespace toolcheck {

namespace {

constexpr std::array<std::string_view, 12> kVerbs{"get",    "find",  "search", "compute", "convert", "list",
                                                  "create", "fetch", "update", "check",   "count",   "rank"};
constexpr std::array<std::string_view, 12> kNouns{"weather", "stock",   "recipe", "flight", "movie", "route",
                                                  "invoice", "account", "song",   "hotel",  "order", "polygon"};
constexpr std::array<std::string_view, 10> kParamNames{"city",  "limit", "query",   "units",  "ticker",
                                                       "start", "tags",  "verbose", "radius", "filters"};
constexpr std::array<std::string_view, 6> kTypeTexts{"str", "int", "float", "bool", "List[str]", "dict"};
constexpr std::array<std::string_view, 10> kWords{"paris", "tokyo",  "lima",   "oslo", "cairo",
                                                  "delta", "violet", "quartz", "amber", "nimbus"};

template <std::size_t N>
std::string_view pick(Rng& rng, const std::array<std::string_view, N>& xs) {
    return xs[pick_index(rng, N)];
}

Value random_value(Rng& rng, const ParamType& type) {
    switch (type.kind) {
        case TypeKind::String: return Value(std::string(pick(rng, kWords)));
        case TypeKind::Integer: return Value(static_cast<std::int64_t>(1 + pick_index(rng, 500)));
        case TypeKind::Number: return Value(static_cast<double>(1 + pick_index(rng, 400)) / 4.0 + 0.125);
        case TypeKind::Boolean: return Value(pick_index(rng, 2) == 1);
        case TypeKind::List: {
            Value arr = Value::array();
            std::size_t n = 1 + pick_index(rng, 3);
            for (std::size_t i = 0; i < n; ++i) arr.push_back(std::string(pick(rng, kWords)));
            return arr;
        }
        case TypeKind::Object: {
            Value obj = Value::object();
            obj[std::string(pick(rng, kParamNames))] = std::string(pick(rng, kWords));
            return obj;
        }
        default: return Value(std::string(pick(rng, kWords)));
    }
}

ToolSpec random_tool(Rng& rng, std::size_t serial) {
    ToolSpec t;
    t.name = std::string(pick(rng, kVerbs)) + "_" + std::string(pick(rng, kNouns)) + "_" + std::to_string(serial);
    t.description = "Synthetic tool " + t.name + ".";
    // Distinct parameter names: walk the name list from a random offset.
    std::size_t n = 3 + pick_index(rng, 2);
    std::size_t offset = pick_index(rng, kParamNames.size());
    for (std::size_t i = 0; i < n; ++i) {
        ParamSpec p;
        p.name = std::string(kParamNames[(offset + i) % kParamNames.size()]);
        std::string_view text = pick(rng, kTypeTexts);
        // The first parameter is a required scalar with a checkable type.
        if (i == 0) text = pick_index(rng, 2) == 0 ? "str" : "int";
        p.type_text = std::string(text);
        p.type = parse_param_type(text);
        p.description = "The " + p.name + " value.";
        // The last parameter is always optional and never set by the gold call.
        p.required = i == 0 || (i + 1 < n && pick_index(rng, 2) == 0);
        t.params.push_back(std::move(p));
    }
    return t;
}

ToolCall gold_call(Rng& rng, const ToolSpec& tool) {
    ToolCall c{tool.name, Value::object()};
    for (std::size_t i = 0; i + 1 < tool.params.size(); ++i) {
        const auto& p = tool.params[i];
        if (p.required || pick_index(rng, 2) == 0) c.arguments[p.name] = random_value(rng, p.type);
    }
    return c;
}

}  // namespace

std::vector<EvalCase> make_synthetic_cases(const SyntheticConfig& cfg) {
    std::vector<EvalCase> out;
    out.reserve(cfg.count);
    for (std::size_t n = 0; n < cfg.count; ++n) {
        Rng rng(mix_seed(cfg.seed, n));
        EvalCase c;
        c.id = "syn-" + std::to_string(n);
        std::size_t tools = 1 + pick_index(rng, 3);
        for (std::size_t k = 0; k < tools; ++k) c.tools.push_back(random_tool(rng, n * 10 + k));
        std::size_t calls = 1 + pick_index(rng, 2);
        std::string query = "Please";
        for (std::size_t k = 0; k < calls; ++k) {
            const ToolSpec& tool = c.tools[pick_index(rng, tools)];
            ToolCall call = gold_call(rng, tool);
            query += std::string(k ? " and then" : "") + " use " + tool.name + " with " + render_compact(call.arguments);
            c.gold.push_back(std::move(call));
        }
        c.query = query + ".";
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace toolcheck
