#include "commands.hpp"

#include "toolcheck/error.hpp"
#include "toolcheck/synthetic.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace toolcheck;
namespace cli = toolcheck::cli;

namespace {

void add_client_flags(CLI::App* cmd, cli::ClientOptions& c) {
    cmd->add_option("--script", c.script, "Scripted completions (JSON keyed by request tag)");
    cmd->add_option("--base-url", c.base_url, "Chat-completions base URL")->capture_default_str();
    cmd->add_option("--model", c.model, "Model id for the HTTP client");
    cmd->add_option("--api-key-env", c.api_key_env, "Environment variable holding the API key")->capture_default_str();
    cmd->add_option("--temperature", c.temperature)->capture_default_str();
    cmd->add_option("--max-tokens", c.max_tokens, "Generated-token limit per request")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Validate, repair and score LLM tool-calling outputs"};
    app.require_subcommand(1);

    cli::CheckOptions check;
    auto* c = app.add_subcommand("check", "Run the error checklist over gold, predictions or a PTC file");
    c->add_option("--cases", check.cases, "Cases (JSON lines)")->required();
    c->add_option("--format", check.format, "unified or adapter:<name>")->capture_default_str();
    c->add_option("--ptc", check.ptc, "Preference pairs to check");
    c->add_option("--predictions", check.predictions, "Predictions {id, output|calls}");
    c->add_option("--mode", check.mode, "auto, schema or referenced")->capture_default_str();
    c->add_option("--findings", check.findings_out, "Write findings (JSON lines)");
    c->add_option("--histogram", check.histogram_out, "Write the code histogram (JSON)");
    c->add_flag("--strict", check.strict, "Exit 1 when anything is found");

    cli::GenLocalOptions local;
    auto* gl = app.add_subcommand("gen-local", "Generate local error checklists for tools");
    gl->add_option("--tools", local.tools, "Tool specs (JSON lines)")->required();
    gl->add_option("--out", local.out, "Output checklists (JSON lines)")->required();
    bool use_client = false;
    gl->add_flag("--client", use_client, "Generate with a chat model instead of offline synthesis");
    gl->add_option("--seed", local.seed)->capture_default_str();
    gl->add_flag("--wrong-name", local.include_wrong_name, "Also emit a wrong-tool-name entry (offline)");
    add_client_flags(gl, local.client);

    cli::GenNegOptions neg;
    auto* gn = app.add_subcommand("gen-neg", "Build a pairwise tool-calling (PTC) preference dataset");
    gn->add_option("--cases", neg.cases, "Cases (JSON lines)")->required();
    gn->add_option("--format", neg.format)->capture_default_str();
    gn->add_option("--out", neg.out, "Output pairs (JSON lines)")->required();
    gn->add_option("--plan", neg.plan_out, "Write the injection plan (JSON lines)");
    gn->add_option("--seed", neg.seed)->capture_default_str();
    gn->add_option("--codes", neg.codes, "Allowed codes, e.g. E1 E4")->delimiter(',');
    gn->add_option("--weight", neg.weights, "Relative weight, e.g. E4=2")->delimiter(',');
    gn->add_option("--limit", neg.limit, "Use only the first N cases (0 = all)")->capture_default_str();

    cli::EvalOptions ev;
    auto* e = app.add_subcommand("eval", "Score predictions or run records with F1 Name and F1 Name + Parameter");
    e->add_option("--cases", ev.cases, "Gold cases (JSON lines)")->required();
    e->add_option("--format", ev.format)->capture_default_str();
    e->add_option("--predictions", ev.predictions, "Predictions {id, output|calls}");
    e->add_option("--records", ev.records, "Run records written by icl");
    e->add_option("--report", ev.report_out, "Write the JSON report");
    e->add_option("--csv", ev.csv_out, "Write per-case rows (CSV)");

    cli::IclCliOptions icl;
    auto* ic = app.add_subcommand("icl", "Run checklist-guided in-context tool calling");
    ic->add_option("--cases", icl.cases, "Cases (JSON lines)")->required();
    ic->add_option("--format", icl.format)->capture_default_str();
    ic->add_option("--checklists", icl.checklists, "Local checklists from gen-local");
    bool two_round = false, no_local = false;
    ic->add_flag("--two-round", two_round, "Global checklist, then a local-checklist round (default)");
    ic->add_flag("--no-local", no_local, "Single round with the global checklist only");
    ic->add_flag("--vanilla", icl.vanilla, "Single round without any checklist");
    ic->add_option("--concurrency", icl.concurrency, "Cases in flight")->capture_default_str();
    ic->add_option("--seed", icl.seed, "Seed for synthesized local checklists")->capture_default_str();
    ic->add_option("--max-tokens-per-case", icl.max_tokens_per_case, "Token cap per case (0 = none)");
    ic->add_option("--price-in", icl.price_in, "Price per million prompt tokens");
    ic->add_option("--price-out", icl.price_out, "Price per million generated tokens");
    ic->add_option("--records", icl.records_out, "Output run records (JSON lines)")->required();
    ic->add_option("--report", icl.report_out, "Write the JSON score and cost report");
    add_client_flags(ic, icl.client);

    cli::KtoDemoOptions demo;
    auto* kd = app.add_subcommand("kto-demo", "Toy-model DPO vs KTO training on near-identical pairs");
    kd->add_option("--method", demo.method, "dpo, kto or both")->capture_default_str();
    kd->add_option("--pairs", demo.pairs)->capture_default_str();
    kd->add_option("--steps", demo.steps)->capture_default_str();
    kd->add_option("--seed", demo.seed)->capture_default_str();
    kd->add_option("--lr", demo.learning_rate)->capture_default_str();
    kd->add_option("--beta", demo.beta)->capture_default_str();
    kd->add_option("--out-dir", demo.out_dir, "Write trajectory CSVs here");

    std::size_t synth_count = 1000;
    std::uint64_t synth_seed = 0;
    std::filesystem::path synth_out;
    auto* sy = app.add_subcommand("synth", "Write seeded synthetic cases (for smoke tests and benchmarks)");
    sy->add_option("--count", synth_count)->capture_default_str();
    sy->add_option("--seed", synth_seed)->capture_default_str();
    sy->add_option("--out", synth_out, "Output cases (JSON lines)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        int code = app.exit(err);
        return code == 0 ? 0 : cli::kExitValidation;
    }

    try {
        if (*c) return cli::cmd_check(check, std::cout);
        if (*gl) {
            local.offline = !use_client;
            return cli::cmd_gen_local(local, std::cout);
        }
        if (*gn) return cli::cmd_gen_neg(neg, std::cout);
        if (*e) return cli::cmd_eval(ev, std::cout);
        if (*ic) {
            if (no_local && two_round) throw Error(ErrorKind::InvalidArgument, "--two-round and --no-local conflict");
            icl.two_round = !(no_local || icl.vanilla);
            return cli::cmd_icl(icl, std::cout);
        }
        if (*kd) return cli::cmd_kto_demo(demo, std::cout);
        if (*sy) {
            std::cout << "seed " << synth_seed << '\n';
            write_cases(make_synthetic_cases({synth_count, synth_seed}), synth_out);
            std::cout << "wrote " << synth_count << " cases to " << synth_out.string() << '\n';
            return cli::kExitOk;
        }
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << '\n';
        return cli::exit_code_for(err);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return cli::kExitIo;
    }
    return cli::kExitOk;
}
