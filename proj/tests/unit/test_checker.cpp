#include "support.hpp"

#include "toolcheck/checker.hpp"
#include "toolcheck/error.hpp"
#include "toolcheck/negsample.hpp"
#include "toolcheck/synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace toolcheck;

namespace {

std::vector<ErrorFinding> check_text(const std::string& text, const EvalCase& c, CheckMode mode) {
    return check(parse_lenient(text), c.registry(), mode == CheckMode::Referenced ? &c.gold : nullptr, mode);
}

std::vector<ErrorCode> codes_of(const std::vector<ErrorFinding>& fs) {
    std::vector<ErrorCode> out;
    for (const auto& f : fs) out.push_back(f.code);
    return out;
}

}  // namespace

TEST_CASE("hexagon rejected answer: exactly one E4 on call 0, param n") {
    auto c = testing::hexagon_case();
    auto pair = testing::hexagon_pair();
    for (auto mode : {CheckMode::SchemaOnly, CheckMode::Referenced}) {
        auto fs = check_text(pair.rejected, c, mode);
        REQUIRE(fs.size() == 1);
        CHECK(fs[0].code == ErrorCode::RedundantParameter);
        CHECK(fs[0].call_index == std::optional<std::size_t>(0));
        CHECK(fs[0].param == std::optional<std::string>("n"));
        CHECK(fs[0].message ==
              R"({"error": "RedundantParameter", "message": "The parameter 'n' is not indicated by the query and should not be called."})");
    }
}

TEST_CASE("hexagon chosen answer is clean in both modes") {
    auto c = testing::hexagon_case();
    auto pair = testing::hexagon_pair();
    CHECK(check_text(pair.chosen, c, CheckMode::SchemaOnly).empty());
    CHECK(check_text(pair.chosen, c, CheckMode::Referenced).empty());
}

TEST_CASE("template tool: missing parameter_1") {
    EvalCase c;
    c.tools = {testing::template_tool()};
    auto fs = check_text(R"([{"name": "name_of_the_tool", "arguments": {"parameter_2": 3}}])", c,
                         CheckMode::SchemaOnly);
    REQUIRE(fs.size() == 1);
    CHECK(fs[0].code == ErrorCode::MissingRequiredParameter);
    CHECK(fs[0].param == std::optional<std::string>("parameter_1"));
    CHECK(fs[0].message.find("The 'parameter_1' parameter is required.") != std::string::npos);
    CHECK(fs[0].thought ==
          "Parameter 'parameter_1' is missing. Ensure all required parameters ('parameter_1') are included in the "
          "function call.");
}

TEST_CASE("each rule in isolation") {
    EvalCase c;
    c.tools = {testing::template_tool()};
    c.gold = {ToolCall{"name_of_the_tool", Value::parse(R"({"parameter_1": "v"})")}};
    auto only = [&](const std::string& text, CheckMode mode) { return codes_of(check_text(text, c, mode)); };
    using V = std::vector<ErrorCode>;

    CHECK(only(R"([{"name": "Name_of_the_tool", "arguments": {"parameter_1": "v"}}])", CheckMode::SchemaOnly) ==
          V{ErrorCode::WrongToolName});
    CHECK(only(R"([{"name": "name_of_the_tool", "arguments": {"parameter_1": 4}}])", CheckMode::SchemaOnly) ==
          V{ErrorCode::InvalidParameterType});
    CHECK(only(R"([{"name": "name_of_the_tool", "arguments": {"parameter_1": ""}}])", CheckMode::SchemaOnly) ==
          V{ErrorCode::EmptyParameterValue});
    CHECK(only(R"([{"name": "name_of_the_tool", "arguments": {"parameter_1": "v", "parameter_3": 1}}])",
               CheckMode::SchemaOnly) == V{ErrorCode::RedundantParameter});
    CHECK(only(R"({"Name": "name_of_the_tool", "Parameter": {"parameter_1": "v"}})", CheckMode::SchemaOnly) ==
          V{ErrorCode::InvalidFormat});
    CHECK(only(R"(Here you go: [{"name": "name_of_the_tool", "arguments": {"parameter_1": "v"}}])",
               CheckMode::SchemaOnly) == V{ErrorCode::RedundantInformation});
    // Declared but not asked for: only the referenced mode can tell.
    CHECK(only(R"([{"name": "name_of_the_tool", "arguments": {"parameter_1": "v", "parameter_2": 2}}])",
               CheckMode::SchemaOnly)
              .empty());
    CHECK(only(R"([{"name": "name_of_the_tool", "arguments": {"parameter_1": "v", "parameter_2": 2}}])",
               CheckMode::Referenced) == V{ErrorCode::RedundantParameter});

    auto wrong_name = check_text(R"([{"name": "Name_of_the_tool", "arguments": {}}])", c, CheckMode::SchemaOnly);
    CHECK(wrong_name[0].message.find("Did you mean 'name_of_the_tool'?") != std::string::npos);
    CHECK(wrong_name[0].call_index == std::optional<std::size_t>(0));
    CHECK_FALSE(wrong_name[0].param);
}

TEST_CASE("empty means empty text, empty list or null; zero and false are values") {
    ToolSpec t = parse_tool_spec(Value::parse(R"({"name": "t", "parameters": {
        "a": {"type": "int"}, "b": {"type": "bool"}, "c": {"type": "List[int]"}, "d": {"type": "str"}}})"));
    EvalCase c;
    c.tools = {t};
    CHECK(check_text(R"([{"name": "t", "arguments": {"a": 0, "b": false, "c": [0], "d": "0"}}])", c,
                     CheckMode::SchemaOnly)
              .empty());
    auto fs = check_text(R"([{"name": "t", "arguments": {"a": null, "b": true, "c": [], "d": ""}}])", c,
                         CheckMode::SchemaOnly);
    CHECK(codes_of(fs) == std::vector<ErrorCode>(3, ErrorCode::EmptyParameterValue));
}

TEST_CASE("string four versus integer four") {
    auto c = testing::hexagon_case();
    auto fs = check_text(
        R"([{"name": "find_n_largest_numbers", "arguments": {"nums": [120, 130, 140, 150, 160], "n": "4"}}, {"name": "polygon_area_shoelace", "arguments": {"vertices": [[1, 1], [5, 1], [7, 5], [5, 9], [1, 9], [0, 5]]}}])",
        c, CheckMode::Referenced);
    REQUIRE(fs.size() == 1);
    CHECK(fs[0].code == ErrorCode::InvalidParameterType);
    CHECK(fs[0].message.find("The 'n' is not of 'int'.") != std::string::npos);
}

TEST_CASE("E7: one gold call, two valid predicted calls") {
    EvalCase c;
    c.tools = {testing::template_tool()};
    c.gold = {ToolCall{"name_of_the_tool", Value::parse(R"({"parameter_1": "v"})")}};
    auto text = R"([{"name": "name_of_the_tool", "arguments": {"parameter_1": "v"}}, {"name": "name_of_the_tool", "arguments": {"parameter_1": "w"}}])";
    CHECK(codes_of(check_text(text, c, CheckMode::Referenced)) == std::vector<ErrorCode>{ErrorCode::WrongNumberOfTools});
    CHECK(check_text(text, c, CheckMode::SchemaOnly).empty());
}

TEST_CASE("referenced mode needs gold") {
    try {
        check(parse_lenient("[]"), ToolRegistry{}, nullptr, CheckMode::Referenced);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingReference);
    }
}

TEST_CASE("alignment prefers exact matches, then overlap, globally") {
    auto call = [](const char* name, const char* args) { return ToolCall{name, Value::parse(args)}; };
    std::vector<ToolCall> gold = {call("a", R"({"x": 1, "y": 2})"), call("a", R"({"x": 3})"), call("b", "{}")};
    // The first prediction overlaps gold 0 partially; the second matches it exactly.
    std::vector<ToolCall> pred = {call("a", R"({"x": 1})"), call("a", R"({"x": 1, "y": 2})"), call("c", "{}")};
    auto a = align_to_gold(pred, gold);
    CHECK(a[0] == std::optional<std::size_t>(1));
    CHECK(a[1] == std::optional<std::size_t>(0));
    CHECK_FALSE(a[2]);
    // A duplicated call leaves its twin the exact partner.
    auto dup = align_to_gold({gold[0], gold[0]}, {gold[0]});
    CHECK(dup[0] == std::optional<std::size_t>(0));
    CHECK_FALSE(dup[1]);
}

TEST_CASE("global checklist text") {
    auto text = render_global_checklist();
    CHECK(text == render_global_checklist());
    CHECK(text.find("Wrong Tool Name") != std::string::npos);
    std::istringstream in(text);
    std::string line;
    std::size_t items = 0, lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        if (line.starts_with("Error ")) ++items;
    }
    CHECK(items == 8);
    CHECK(lines == 8 + 1);
    for (int i = 0; i < 8; ++i) CHECK(text.find("Error " + std::to_string(i) + ": ") != std::string::npos);
}

TEST_CASE("histogram counts every occurrence") {
    auto f = [](ErrorCode c) { return ErrorFinding{c, "", "", std::nullopt, std::nullopt}; };
    auto h = error_histogram({{f(ErrorCode::RedundantParameter)},
                              {f(ErrorCode::RedundantParameter), f(ErrorCode::InvalidFormat)}});
    CHECK(h.size() == 8);
    CHECK(h[ErrorCode::RedundantParameter] == 2);
    CHECK(h[ErrorCode::InvalidFormat] == 1);
    CHECK(h[ErrorCode::WrongToolName] == 0);
    auto empty = error_histogram({});
    CHECK(empty.size() == 8);
    for (const auto& [_, n] : empty) CHECK(n == 0);
}

TEST_CASE("code labels, titles and finding JSON") {
    for (auto code : kAllErrorCodes) {
        CHECK(parse_code_label(code_label(code)) == code);
        CHECK(code_from_title(error_title(code)) == code);
        ErrorFinding f{code, "m", "t", std::size_t{1}, std::string("p")};
        CHECK(finding_from_json(finding_to_json(f)) == f);
        ErrorFinding bare{code, "m", "t", std::nullopt, std::nullopt};
        CHECK(finding_from_json(finding_to_json(bare)) == bare);
    }
    CHECK(error_identifier(ErrorCode::RedundantInformation) == "RedundantInformationError");
    CHECK(code_from_title("Invalid Function Calling Output Format Error") == ErrorCode::InvalidFormat);
    CHECK_FALSE(parse_code_label("E8"));
    CHECK_FALSE(code_from_title("Made Up Error"));
    CHECK_THROWS_AS(finding_from_json(Value::parse(R"({"code": "E9"})")), Error);
}

TEST_CASE("properties over synthetic cases: cleanliness, soundness, monotonicity, finding shape") {
    auto cases = make_synthetic_cases({300, 31});
    std::size_t injected = 0;
    for (const auto& c : cases) {
        INFO(c.id);
        auto reg = c.registry();
        // Gold that satisfies its own schemas is clean.
        CHECK(check(parse_strict(render_calls(c.gold)), reg, &c.gold, CheckMode::Referenced).empty());

        for (auto code : kAllErrorCodes) {
            for (const auto& site : perturb_sites(c.gold, c.tools, code)) {
                auto text = perturb_at(c.gold, c.tools, code, site);
                CHECK(text != render_calls(c.gold));
                auto outcome = parse_lenient(text);
                auto referenced = check(outcome, reg, &c.gold, CheckMode::Referenced);
                auto schema = check(outcome, reg);
                ++injected;
                CHECK(has_code(referenced, code));
                for (const auto& f : schema)
                    CHECK(std::find(referenced.begin(), referenced.end(), f) != referenced.end());
                for (const auto& f : referenced) {
                    auto n = static_cast<int>(f.code);
                    if (n >= 1 && n <= 4) CHECK(f.param.has_value());
                    if (n == 5 || n == 6) {
                        CHECK_FALSE(f.param);
                        CHECK_FALSE(f.call_index);
                    }
                    if (n == 0 || n == 7) CHECK_FALSE(f.param);
                }
            }
        }
    }
    CHECK(injected > 1000);
}
