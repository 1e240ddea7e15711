#include "toolcheck/value.hpp"

#include "toolcheck/error.hpp"

#include <cmath>
#include <set>
#include <vector>

namespace toolcheck {

std::string_view error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MalformedSpec: return "MalformedSpec";
        case ErrorKind::UnreadableFile: return "UnreadableFile";
        case ErrorKind::EmptyDataset: return "EmptyDataset";
        case ErrorKind::InvariantViolation: return "InvariantViolation";
        case ErrorKind::FormatError: return "FormatError";
        case ErrorKind::MissingReference: return "MissingReference";
        case ErrorKind::NoEntriesParsed: return "NoEntriesParsed";
        case ErrorKind::Inapplicable: return "Inapplicable";
        case ErrorKind::TokenOutOfRange: return "TokenOutOfRange";
        case ErrorKind::PairNotMinimal: return "PairNotMinimal";
        case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorKind::ClientError: return "ClientError";
        case ErrorKind::BudgetExceeded: return "BudgetExceeded";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Error";
}

namespace {

void render_into(const Value& v, std::string& out) {
    if (v.is_array()) {
        out += '[';
        bool first = true;
        for (const auto& e : v) {
            if (!first) out += ", ";
            first = false;
            render_into(e, out);
        }
        out += ']';
    } else if (v.is_object()) {
        out += '{';
        bool first = true;
        for (const auto& [k, e] : v.items()) {
            if (!first) out += ", ";
            first = false;
            out += Value(k).dump();
            out += ": ";
            render_into(e, out);
        }
        out += '}';
    } else {
        out += v.dump();
    }
}

bool as_integer(const Value& v, double& out) {
    if (v.is_number_integer()) {
        out = v.is_number_unsigned() ? static_cast<double>(v.get<std::uint64_t>())
                                     : static_cast<double>(v.get<std::int64_t>());
        return true;
    }
    if (v.is_number_float()) {
        double d = v.get<double>();
        if (std::isfinite(d) && std::floor(d) == d) {
            out = d;
            return true;
        }
    }
    return false;
}

}  // namespace

std::string render_compact(const Value& v) {
    std::string out;
    render_into(v, out);
    return out;
}

std::string value_category(const Value& v) {
    if (v.is_null()) return "null";
    if (v.is_boolean()) return "boolean";
    if (v.is_number()) return "number";
    if (v.is_string()) return "string";
    if (v.is_array()) return "list";
    return "object";
}

bool values_equal(const Value& a, const Value& b) {
    if (a.is_number() && b.is_number()) {
        double x = 0, y = 0;
        bool ia = as_integer(a, x), ib = as_integer(b, y);
        if (ia && ib) return x == y;
        if (ia != ib) return false;
        return a.get<double>() == b.get<double>();
    }
    if (a.type() != b.type()) return false;
    if (a.is_array()) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (!values_equal(a[i], b[i])) return false;
        return true;
    }
    if (a.is_object()) {
        if (a.size() != b.size()) return false;
        for (const auto& [k, e] : a.items()) {
            auto it = b.find(k);
            if (it == b.end() || !values_equal(e, *it)) return false;
        }
        return true;
    }
    return a == b;
}

bool is_empty_value(const Value& v) {
    return v.is_null() || (v.is_string() && v.get_ref<const std::string&>().empty()) ||
           (v.is_array() && v.empty());
}

Value parse_json_unique_keys(std::string_view text) {
    std::vector<std::set<std::string>> open_objects;
    std::string duplicate;
    Value::parser_callback_t cb = [&](int, nlohmann::json::parse_event_t event, Value& parsed) {
        using E = nlohmann::json::parse_event_t;
        if (event == E::object_start) open_objects.emplace_back();
        else if (event == E::object_end) open_objects.pop_back();
        else if (event == E::key && !open_objects.empty()) {
            auto key = parsed.get<std::string>();
            if (!open_objects.back().insert(key).second && duplicate.empty()) duplicate = key;
        }
        return true;
    };
    Value v;
    try {
        v = Value::parse(text.begin(), text.end(), cb);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::InvalidArgument, e.what());
    }
    if (!duplicate.empty()) throw Error(ErrorKind::InvalidArgument, "duplicate key '" + duplicate + "'");
    return v;
}

std::uint64_t stable_hash(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace toolcheck
