#include "support.hpp"

#include "toolcheck/callparse.hpp"
#include "toolcheck/error.hpp"
#include "toolcheck/rng.hpp"
#include "toolcheck/synthetic.hpp"

#include <doctest.h>

#include <cctype>

using namespace toolcheck;

namespace {

// Independent salvage oracle: try every '[' ... ']' substring, keep the
// longest that parses as a call list (earliest on ties), never an empty list
// sitting in a value slot.
ParseOutcome brute_force_lenient(const std::string& raw) {
    try {
        return parse_strict(raw);
    } catch (const Error&) {
    }
    ParseOutcome best;
    best.raw = raw;
    std::size_t best_len = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '[') continue;
        for (std::size_t j = i + 1; j < raw.size(); ++j) {
            if (raw[j] != ']') continue;
            std::string inner = raw.substr(i + 1, j - i - 1);
            bool blank = inner.find_first_not_of(" \t\r\n") == std::string::npos;
            if (blank && empty_array_in_value_slot(raw, i)) continue;
            std::size_t len = j - i + 1;
            if (best.salvage && len <= best_len) continue;
            try {
                auto calls = parse_strict(normalize_quotes(raw.substr(i, len))).calls;
                best.calls = calls;
                best.salvage = true;
                best_len = len;
            } catch (const Error&) {
            }
        }
    }
    return best;
}

std::string random_noisy_text(Rng& rng) {
    static const std::vector<std::string> pieces = {
        "Based on the query,",
        "I will call",
        "[",
        "]",
        "[]",
        "{\"k\": []}",
        "[{\"name\": \"a\", \"arguments\": {\"x\": 1}}]",
        "[{'name': 'b', 'arguments': {'y': 'two'}}]",
        "[{\"name\": \"c\", \"arguments\": {}}, {\"name\": \"d\", \"arguments\": {\"z\": [1, 2]}}]",
        "[1, 2, 3]",
        ",",
        ":",
        "```json",
        "```",
        "\"quoted [text]\"",
        "{\"Name\": \"t\", \"Parameter\": {}}",
    };
    std::string out;
    std::size_t n = 1 + pick_index(rng, 6);
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += pick_index(rng, 3) == 0 ? "\n" : " ";
        out += pieces[pick_index(rng, pieces.size())];
    }
    return out;
}

const char* kChosen =
    R"([{"name": "polygon_area_shoelace", "arguments": {"vertices": [[1, 1], [5, 1], [7, 5], [5, 9], [1, 9], [0, 5]]}}, {"name": "find_n_largest_numbers", "arguments": {"nums": [120, 130, 140, 150, 160], "n": 4}}])";

}  // namespace

TEST_CASE("parse_strict: the hexagon chosen answer, the empty list and wrong keys") {
    auto chosen = parse_strict(kChosen);
    CHECK(chosen.strict);
    CHECK_FALSE(chosen.salvage);
    REQUIRE(chosen.calls.size() == 2);
    CHECK(chosen.calls[0].name == "polygon_area_shoelace");
    CHECK(chosen.calls[1].arguments.dump() == R"({"nums":[120,130,140,150,160],"n":4})");

    auto empty = parse_strict("  []\n");
    CHECK(empty.strict);
    CHECK(empty.calls.empty());

    const char* wrong_keys[] = {
        R"({"Name": "t", "Parameter": {"a": 1}})",
        R"([{"Name": "t", "Parameter": {"a": 1}}])",
        R"([{"name": "t"}])",
        R"([{"name": "t", "arguments": []}])",
        R"([{"name": "", "arguments": {}}])",
        R"([{"name": "t", "arguments": {}, "extra": 1}])",
        R"([3])",
        R"([{"name": "t", "arguments": {"a": 1, "a": 2}}])",
        "Sure! []",
        "",
    };
    for (auto text : wrong_keys) {
        try {
            parse_strict(text);
            FAIL("accepted " << text);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::FormatError);
        }
    }
}

TEST_CASE("parse_lenient: prose wrapper with single quotes is salvaged") {
    std::string prose =
        "Based on the query, I will make a function call to the 'name_of_the_tool' tool to get the query answered. "
        "Here is the output in the required JSON format:\n[\n  {\n    'name': 'name_of_the_tool',\n    'arguments': {\n"
        "      'parameter_1': 'parameter_value',\n      'parameter_2': 'parameter_value'\n    }\n  }\n]";
    auto out = parse_lenient(prose);
    CHECK(out.salvage);
    CHECK_FALSE(out.strict);
    REQUIRE(out.calls.size() == 1);
    CHECK(out.calls[0].name == "name_of_the_tool");
    CHECK(out.calls[0].arguments["parameter_2"] == "parameter_value");
    CHECK(out.raw == prose);
}

TEST_CASE("parse_lenient: pass-through, prose-only and fenced inputs") {
    auto strict = parse_lenient(kChosen);
    auto direct = parse_strict(kChosen);
    CHECK(strict.strict);
    CHECK(strict.calls == direct.calls);

    auto prose = parse_lenient("I cannot help with that request.");
    CHECK(prose.calls.empty());
    CHECK_FALSE(prose.salvage);
    CHECK_FALSE(prose.strict);

    auto fenced = parse_lenient(std::string("```json\n") + kChosen + "\n```");
    CHECK(fenced.salvage);
    CHECK(fenced.calls.size() == 2);

    // An empty list in a value slot is not a call list.
    auto slot = parse_lenient(R"({"calls": []} done)");
    CHECK_FALSE(slot.salvage);
    // A bare empty list after prose is.
    auto bare = parse_lenient("No call is needed: []");
    CHECK(bare.salvage);
    CHECK(bare.calls.empty());
}

TEST_CASE("parse_lenient: longest candidate wins, earliest on ties") {
    auto two = parse_lenient(
        R"(first [{"name": "a", "arguments": {}}] then [{"name": "b", "arguments": {"k": 1}}])");
    REQUIRE(two.calls.size() == 1);
    CHECK(two.calls[0].name == "b");
    auto tie = parse_lenient(R"(x [{"name": "a", "arguments": {}}] y [{"name": "b", "arguments": {}}])");
    REQUIRE(tie.calls.size() == 1);
    CHECK(tie.calls[0].name == "a");
}

TEST_CASE("parse_lenient agrees with the brute-force substring oracle") {
    Rng rng(2024);
    for (int n = 0; n < 3000; ++n) {
        std::string text = random_noisy_text(rng);
        auto got = parse_lenient(text);
        auto want = brute_force_lenient(text);
        INFO(text);
        CHECK(got.strict == want.strict);
        CHECK(got.salvage == want.salvage);
        CHECK(got.calls == want.calls);
        // Mutual exclusion of strict and salvage.
        CHECK_FALSE((got.strict && got.salvage));
        if (got.salvage) CHECK_THROWS_AS(parse_strict(text), Error);
        // Determinism.
        CHECK(parse_lenient(text).calls == got.calls);
    }
}

TEST_CASE("render then strict parse is the identity") {
    for (const auto& c : make_synthetic_cases({200, 17})) {
        auto rendered = render_calls(c.gold);
        auto back = parse_strict(rendered);
        CHECK(back.calls == c.gold);
        CHECK(render_calls(back.calls) == rendered);
    }
    CHECK(render_calls({}) == "[]");
    ToolCall call{"t", Value::parse(R"({"b": 1.5, "a": [true, null], "c": {"d": "e"}})")};
    CHECK(render_calls({call}) == R"([{"name": "t", "arguments": {"b": 1.5, "a": [true, null], "c": {"d": "e"}}}])");
}

TEST_CASE("integer and float forms stay distinct") {
    auto out = parse_strict(R"([{"name": "t", "arguments": {"i": 4, "f": 4.0, "s": "4"}}])");
    const auto& a = out.calls[0].arguments;
    CHECK(a["i"].is_number_integer());
    CHECK(a["f"].is_number_float());
    CHECK(a["s"].is_string());
}

TEST_CASE("normalize_quotes and match_bracket") {
    CHECK(normalize_quotes("{'a': 'b'}") == R"({"a": "b"})");
    CHECK(normalize_quotes(R"({"it's": 'say "hi"'})") == R"({"it's": "say \"hi\""})");
    CHECK(normalize_quotes(R"('don\'t')") == R"("don't")");
    std::string t = R"(x [1, "]", [2]] y)";
    CHECK(match_bracket(t, 2) == t.size() - 3);
    CHECK(match_bracket("[[", 0) == std::string_view::npos);
}
