#include "support.hpp"

#include "toolcheck/error.hpp"
#include "toolcheck/ingest.hpp"
#include "toolcheck/negsample.hpp"
#include "toolcheck/synthetic.hpp"

#include <doctest.h>

#include <fstream>

using namespace toolcheck;

TEST_CASE("unified case: the hexagon query with two tools and two gold calls") {
    auto loaded = load_cases(testing::fixture("hexagon_case.jsonl"));
    REQUIRE(loaded.cases.size() == 1);
    CHECK(loaded.skipped.empty());
    const auto& c = loaded.cases[0];
    CHECK(c.query.starts_with("What is the area of a hexagon"));
    CHECK(c.tools.size() == 2);
    REQUIRE(c.gold.size() == 2);
    CHECK(c.gold[0].name == "polygon_area_shoelace");
    CHECK(c.gold[1].arguments["n"] == 4);
    CHECK(c.context.empty());
}

TEST_CASE("load_cases: empty and unreadable inputs") {
    testing::TempDir dir("ingest");
    { std::ofstream(dir / "empty.jsonl"); }
    try {
        load_cases(dir / "empty.jsonl");
        FAIL("empty file accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyDataset);
    }
    try {
        load_cases(dir / "absent.jsonl");
        FAIL("missing file accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnreadableFile);
    }
    CHECK_THROWS_AS(load_cases(testing::fixture("hexagon_case.jsonl"), "csv"), Error);
}

TEST_CASE("load_cases: malformed lines are collected, not fatal") {
    testing::TempDir dir("ingest");
    auto good = case_to_json(testing::hexagon_case()).dump();
    {
        std::ofstream out(dir / "mixed.jsonl");
        out << good << '\n'
            << "{not json\n"
            << good << '\n'
            << R"({"id": "x", "query": "q", "tools": [], "gold": [{"name": "ghost", "arguments": {}}]})" << '\n'
            << good << '\n';
    }
    auto loaded = load_cases(dir / "mixed.jsonl");
    CHECK(loaded.cases.size() == 3);
    REQUIRE(loaded.skipped.size() == 2);
    CHECK(loaded.skipped[0].line == 2);
    CHECK(loaded.skipped[1].line == 4);
    CHECK(loaded.skipped[1].reason.find("ghost") != std::string::npos);
}

TEST_CASE("case JSON round trip keeps order, empty gold and context") {
    auto cases = make_synthetic_cases({50, 9});
    EvalCase no_call = testing::hexagon_case();
    no_call.id = "no-call";
    no_call.gold.clear();
    no_call.context = {{Role::User, "earlier question"}, {Role::Assistant, "earlier answer"}};
    cases.push_back(no_call);

    testing::TempDir dir("ingest");
    write_cases(cases, dir / "cases.jsonl");
    auto back = load_cases(dir / "cases.jsonl").cases;
    REQUIRE(back.size() == cases.size());
    for (std::size_t i = 0; i < cases.size(); ++i) {
        CHECK(back[i].id == cases[i].id);
        CHECK(back[i].query == cases[i].query);
        CHECK(back[i].tools == cases[i].tools);
        CHECK(back[i].gold == cases[i].gold);
        CHECK(back[i].context == cases[i].context);
    }
    write_cases(back, dir / "again.jsonl");
    CHECK(testing::slurp(dir / "cases.jsonl") == testing::slurp(dir / "again.jsonl"));
}

TEST_CASE("adapter format") {
    CHECK(case_adapter_names().size() >= 1);
    testing::TempDir dir("ingest");
    {
        std::ofstream out(dir / "xlam.jsonl");
        out << R"({"id": 7, "query": "q", "tools": "[{\"name\": \"t\", \"parameters\": {\"a\": {\"type\": \"int\"}}}]", "answers": "[{\"name\": \"t\", \"arguments\": {\"a\": 1}}]"})"
            << '\n';
    }
    auto c = load_cases(dir / "xlam.jsonl", "adapter:xlam").cases.at(0);
    CHECK(c.id == "7");
    CHECK(c.gold.at(0).arguments["a"] == 1);

    register_case_adapter("plain", [](const Value& j, std::size_t line) {
        EvalCase e;
        e.id = "p" + std::to_string(line);
        e.query = j.at("q").get<std::string>();
        return e;
    });
    { std::ofstream(dir / "plain.jsonl") << R"({"q": "hello"})" << '\n'; }
    auto p = load_cases(dir / "plain.jsonl", "adapter:plain").cases.at(0);
    CHECK(p.id == "p1");
    CHECK(p.query == "hello");
    CHECK_THROWS_AS(load_cases(dir / "plain.jsonl", "adapter:nope"), Error);
}

TEST_CASE("PTC: the hexagon pair is one record with injected error E4") {
    auto pairs = read_ptc(testing::fixture("hexagon_pair.jsonl"));
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].injected_error == ErrorCode::RedundantParameter);
    CHECK(pairs[0].label_chosen);
    CHECK_FALSE(pairs[0].label_rejected);
    auto j = pair_to_json(pairs[0]);
    CHECK(j["injected_error"] == "E4");
    CHECK(j["labels"]["chosen"] == true);
    CHECK(j["labels"]["rejected"] == false);
    // Integer codes are accepted on read.
    j["injected_error"] = 4;
    CHECK(pair_from_json(j).injected_error == ErrorCode::RedundantParameter);
}

TEST_CASE("PTC round trips") {
    testing::TempDir dir("ptc");
    write_ptc({}, dir / "none.jsonl");
    CHECK(read_ptc(dir / "none.jsonl").empty());

    auto build = build_ptc(make_synthetic_cases({100, 4}), PerturbPolicy::uniform(4));
    REQUIRE(build.pairs.size() == 100);
    write_ptc(build.pairs, dir / "a.jsonl");
    auto back = read_ptc(dir / "a.jsonl");
    CHECK(back == build.pairs);
    write_ptc(back, dir / "b.jsonl");
    CHECK(testing::slurp(dir / "a.jsonl") == testing::slurp(dir / "b.jsonl"));
}

TEST_CASE("write_ptc enforces the pair invariants") {
    testing::TempDir dir("ptc");
    auto p = testing::hexagon_pair();
    auto same = p;
    same.rejected = same.chosen;
    auto dirty = p;
    dirty.chosen = "Sure: " + p.chosen;
    for (const auto& bad : {same, dirty}) {
        try {
            write_ptc({p, bad}, dir / "bad.jsonl");
            FAIL("invalid pair written");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::InvariantViolation);
        }
    }
    try {
        read_ptc(dir / "absent.jsonl");
        FAIL("missing file accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnreadableFile);
    }
}

TEST_CASE("chat messages serialize by role name") {
    for (auto r : {Role::System, Role::User, Role::Assistant}) {
        ChatMessage m{r, "text"};
        CHECK(message_from_json(message_to_json(m)) == m);
        CHECK(parse_role(role_name(r)) == r);
    }
    CHECK_FALSE(parse_role("tool"));
    CHECK_THROWS_AS(message_from_json(Value::parse(R"({"role": "user"})")), Error);
}
