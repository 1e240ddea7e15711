#include "toolcheck/checker.hpp"
#include "toolcheck/metrics.hpp"
#include "toolcheck/negsample.hpp"
#include "toolcheck/prefopt.hpp"
#include "toolcheck/synthetic.hpp"

#include <benchmark/benchmark.h>

using namespace toolcheck;

namespace {

const PtcBuild& corpus() {
    static const auto cases = make_synthetic_cases({1000, 1});
    static const PtcBuild build = build_ptc(cases, PerturbPolicy::uniform(1));
    return build;
}

const std::vector<EvalCase>& corpus_cases() {
    static const auto cases = make_synthetic_cases({1000, 1});
    return cases;
}

void BM_check_referenced(benchmark::State& state) {
    const auto& cases = corpus_cases();
    const auto& pairs = corpus().pairs;
    std::vector<ToolRegistry> regs;
    for (const auto& c : cases) regs.push_back(c.registry());
    std::size_t i = 0;
    for (auto _ : state) {
        auto parsed = parse_lenient(pairs[i].rejected);
        benchmark::DoNotOptimize(check(parsed, regs[i], &cases[i].gold, CheckMode::Referenced));
        i = (i + 1) % pairs.size();
    }
}
BENCHMARK(BM_check_referenced);

void BM_parse_lenient_prose(benchmark::State& state) {
    std::string text = "Based on the query, I will make a function call. Here is the output:\n" +
                       render_calls(corpus_cases()[0].gold) + "\nLet me know if you need anything else.";
    for (auto _ : state) benchmark::DoNotOptimize(parse_lenient(text));
}
BENCHMARK(BM_parse_lenient_prose);

void BM_build_ptc(benchmark::State& state) {
    const auto& cases = corpus_cases();
    for (auto _ : state) benchmark::DoNotOptimize(build_ptc(cases, PerturbPolicy::uniform(2)));
}
BENCHMARK(BM_build_ptc)->Unit(benchmark::kMillisecond);

void BM_score_corpus(benchmark::State& state) {
    const auto& cases = corpus_cases();
    const auto& pairs = corpus().pairs;
    std::vector<std::string> ids;
    std::vector<std::vector<ToolCall>> preds, golds;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        ids.push_back(cases[i].id);
        preds.push_back(parse_lenient(pairs[i].rejected).calls);
        golds.push_back(cases[i].gold);
    }
    for (auto _ : state) benchmark::DoNotOptimize(aggregate(score_corpus(ids, preds, golds)));
}
BENCHMARK(BM_score_corpus)->Unit(benchmark::kMillisecond);

void BM_kto_token_gradient(benchmark::State& state) {
    prefopt::PairSetConfig pc;
    auto pairs = prefopt::make_minimal_pairs(pc);
    auto model = prefopt::init_model(pairs, pc.vocab_size, pc.answer_len, 1, 0.5);
    auto ref = prefopt::init_model(pairs, pc.vocab_size, pc.answer_len, 2, 0.5);
    prefopt::KtoConfig cfg;
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(prefopt::kto_token_gradient(model, ref, pairs[i], cfg));
        i = (i + 1) % pairs.size();
    }
}
BENCHMARK(BM_kto_token_gradient);

void BM_train_step_batch(benchmark::State& state) {
    prefopt::PairSetConfig pc;
    auto pairs = prefopt::make_minimal_pairs(pc);
    auto model = prefopt::init_model(pairs, pc.vocab_size, pc.answer_len, 1, 0.5);
    prefopt::KtoConfig cfg;
    for (auto _ : state)
        benchmark::DoNotOptimize(prefopt::batch_loss_grad(model, model, pairs, prefopt::Method::Kto, cfg));
}
BENCHMARK(BM_train_step_batch);

}  // namespace
BENCHMARK_MAIN();
