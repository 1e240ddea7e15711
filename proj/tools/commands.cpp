#include "commands.hpp"

#include "toolcheck/error.hpp"
#include "toolcheck/localgen.hpp"
#include "toolcheck/prompts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace toolcheck::cli {

namespace {

bool file_is_blank(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::UnreadableFile, "cannot open " + path.string());
    std::string line;
    while (std::getline(in, line))
        if (line.find_first_not_of(" \t\r\n") != std::string::npos) return false;
    return true;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::UnreadableFile, "cannot write " + path.string());
    out << text;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

Value histogram_json(const ErrorHistogram& h) {
    Value v = Value::object();
    for (const auto& [code, n] : h) v[code_label(code)] = n;
    return v;
}

void print_histogram(std::ostream& out, const ErrorHistogram& h) {
    out << "code  count  title\n";
    for (const auto& [code, n] : h)
        out << std::left << std::setw(6) << code_label(code) << std::setw(7) << n << error_title(code) << '\n';
}

std::string fmt_f1(double f) {
    if (std::isnan(f)) return "n/a";
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << f;
    return os.str();
}

// Locates the case a PTC prompt was rendered from: exact rendering first, else
// the unique case whose query ends the prompt.
class PromptIndex {
public:
    explicit PromptIndex(const std::vector<EvalCase>& cases) : cases_(cases) {
        for (const auto& c : cases) exact_.emplace(prompts::render_case_prompt(c), &c);
    }

    const EvalCase* find(const std::string& prompt) const {
        if (auto it = exact_.find(prompt); it != exact_.end()) return it->second;
        const std::string p = trim(prompt);
        const EvalCase* hit = nullptr;
        for (const auto& c : cases_) {
            std::string q = trim(c.query);
            if (!q.empty() && p.size() >= q.size() && p.compare(p.size() - q.size(), q.size(), q) == 0) {
                if (hit) return nullptr;
                hit = &c;
            }
        }
        return hit;
    }

private:
    const std::vector<EvalCase>& cases_;
    std::unordered_map<std::string, const EvalCase*> exact_;
};

Value findings_array(const std::vector<ErrorFinding>& fs) {
    Value arr = Value::array();
    for (const auto& f : fs) arr.push_back(finding_to_json(f));
    return arr;
}

std::vector<ToolCall> prediction_calls(const Value& row) {
    if (auto it = row.find("calls"); it != row.end()) return calls_from_json(*it);
    if (auto it = row.find("output"); it != row.end() && it->is_string())
        return parse_lenient(it->get<std::string>()).calls;
    throw Error(ErrorKind::InvalidArgument, "prediction needs \"calls\" or \"output\"");
}

std::string row_id(const Value& row) {
    auto it = row.find("id");
    if (it == row.end()) throw Error(ErrorKind::InvalidArgument, "row has no id");
    return it->is_string() ? it->get<std::string>() : it->dump();
}

std::vector<LocalChecklist> read_checklists(const fs::path& path) {
    std::vector<LocalChecklist> out;
    for (const auto& v : read_json_lines(path)) out.push_back(checklist_from_json(v));
    return out;
}

std::optional<ErrorCode> code_arg(const std::string& text) {
    if (auto c = parse_code_label(text)) return c;
    return code_from_title(text);
}

}  // namespace

int exit_code_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::UnreadableFile:
        case ErrorKind::EmptyDataset: return kExitIo;
        case ErrorKind::ClientError:
        case ErrorKind::BudgetExceeded: return kExitClient;
        default: return kExitValidation;
    }
}

std::vector<EvalCase> load_cases_or_empty(const fs::path& path, const std::string& format, std::ostream& log) {
    if (file_is_blank(path)) return {};
    LoadResult r = load_cases(path, format);
    for (const auto& s : r.skipped) log << "skipped line " << s.line << ": " << s.reason << '\n';
    return std::move(r.cases);
}

std::unique_ptr<ChatClient> make_client(const ClientOptions& options) {
    if (options.script) {
        std::ifstream in(*options.script, std::ios::binary);
        if (!in) throw Error(ErrorKind::UnreadableFile, "cannot open " + options.script->string());
        std::stringstream text;
        text << in.rdbuf();
        Value script;
        try {
            script = Value::parse(text.str());
        } catch (const std::exception& e) {
            throw Error(ErrorKind::InvalidArgument, options.script->string() + ": " + e.what());
        }
        return std::make_unique<ScriptedChatClient>(script);
    }
    if (options.model.empty()) return nullptr;
    return std::make_unique<HttpChatClient>(
        HttpClientConfig{options.base_url, options.model, options.api_key_env, 120, 2});
}

int cmd_check(const CheckOptions& options, std::ostream& out, CheckSummary* summary) {
    if (options.ptc && options.predictions)
        throw Error(ErrorKind::InvalidArgument, "check takes either a PTC file or predictions, not both");
    if (options.mode != "auto" && options.mode != "schema" && options.mode != "referenced")
        throw Error(ErrorKind::InvalidArgument, "mode must be auto, schema or referenced");
    const bool schema_only = options.mode == "schema";

    auto cases = load_cases_or_empty(options.cases, options.format, out);
    std::map<std::string, const EvalCase*> by_id;
    for (const auto& c : cases) by_id[c.id] = &c;

    CheckSummary s;
    std::vector<std::vector<ErrorFinding>> counted;
    std::vector<Value> rows;

    auto run = [&](const EvalCase& c, const std::string& text, const std::string& source) {
        ParseOutcome parsed = parse_lenient(text);
        auto findings = check(parsed, c.registry(), schema_only ? nullptr : &c.gold,
                              schema_only ? CheckMode::SchemaOnly : CheckMode::Referenced);
        Value row = Value::object();
        row["id"] = c.id;
        row["source"] = source;
        row["strict"] = parsed.strict;
        row["salvage"] = parsed.salvage;
        row["findings"] = findings_array(findings);
        rows.push_back(std::move(row));
        return findings;
    };

    if (options.ptc) {
        auto pairs = file_is_blank(*options.ptc) ? std::vector<PreferencePair>{} : read_ptc(*options.ptc);
        const PromptIndex index(cases);
        for (const auto& p : pairs) {
            const EvalCase* c = index.find(p.prompt);
            if (!c) {
                ++s.unmatched;
                continue;
            }
            if (!run(*c, p.chosen, "chosen").empty()) ++s.chosen_flagged;
            auto f = run(*c, p.rejected, "rejected");
            ++s.checked;
            if (!f.empty()) ++s.flagged;
            counted.push_back(std::move(f));
        }
    } else if (options.predictions) {
        auto preds = file_is_blank(*options.predictions) ? std::vector<Value>{} : read_json_lines(*options.predictions);
        for (const auto& row : preds) {
            auto it = by_id.find(row_id(row));
            if (it == by_id.end()) {
                ++s.unmatched;
                continue;
            }
            std::string text = row.contains("output") && row["output"].is_string()
                                   ? row["output"].get<std::string>()
                                   : render_calls(prediction_calls(row));
            auto f = run(*it->second, text, "prediction");
            ++s.checked;
            if (!f.empty()) ++s.flagged;
            counted.push_back(std::move(f));
        }
    } else {
        for (const auto& c : cases) {
            auto f = run(c, render_calls(c.gold), "gold");
            ++s.checked;
            if (!f.empty()) ++s.flagged;
            counted.push_back(std::move(f));
        }
    }
    s.histogram = error_histogram(counted);

    if (options.findings_out) write_json_lines(rows, *options.findings_out);
    if (options.histogram_out) write_text(*options.histogram_out, histogram_json(s.histogram).dump(2) + "\n");

    out << "checked " << s.checked << " answers, " << s.flagged << " with findings";
    if (options.ptc) out << ", " << s.chosen_flagged << " chosen answers not clean";
    if (s.unmatched) out << ", " << s.unmatched << " without a matching case";
    out << '\n';
    print_histogram(out, s.histogram);
    if (summary) *summary = s;
    bool any = s.flagged > 0 || s.chosen_flagged > 0;
    return options.strict && any ? kExitValidation : kExitOk;
}

int cmd_gen_local(const GenLocalOptions& options, std::ostream& out) {
    std::vector<ToolSpec> tools = file_is_blank(options.tools) ? std::vector<ToolSpec>{} : read_tool_specs(options.tools);
    if (tools.empty()) {
        out << "warning: no tools in " << options.tools.string() << "; nothing written\n";
        return kExitOk;
    }
    std::unique_ptr<ChatClient> client;
    if (!options.offline) {
        client = make_client(options.client);
        if (!client) throw Error(ErrorKind::InvalidArgument, "gen-local without --offline needs --script or --model");
    }
    out << "seed " << options.seed << '\n';
    std::vector<Value> rows;
    std::size_t dropped = 0;
    for (const auto& tool : tools) {
        LocalChecklist cl;
        if (options.offline) {
            cl = synth_checklist_offline(tool, options.seed, OfflineOptions{options.include_wrong_name});
        } else {
            ChecklistParse parsed = generate_checklist_with_client(tool, *client);
            for (const auto& d : parsed.dropped) out << tool.name << ": dropped '" << d.section << "': " << d.reason << '\n';
            dropped += parsed.dropped.size();
            cl = std::move(parsed.checklist);
        }
        out << tool.name << ": " << cl.entries.size() << " entries\n";
        rows.push_back(checklist_to_json(cl));
    }
    write_json_lines(rows, options.out);
    out << "wrote " << rows.size() << " checklists to " << options.out.string();
    if (dropped) out << " (" << dropped << " entries dropped)";
    out << '\n';
    return kExitOk;
}

int cmd_gen_neg(const GenNegOptions& options, std::ostream& out, PtcBuild* result) {
    auto cases = load_cases_or_empty(options.cases, options.format, out);
    if (options.limit > 0 && cases.size() > options.limit) cases.resize(options.limit);

    PerturbPolicy policy = PerturbPolicy::uniform(options.seed);
    if (!options.codes.empty()) {
        policy.allowed_codes.clear();
        for (const auto& text : options.codes) {
            auto code = code_arg(text);
            if (!code) throw Error(ErrorKind::InvalidArgument, "unknown error code '" + text + "'");
            policy.allowed_codes.insert(*code);
        }
    }
    for (const auto& w : options.weights) {
        auto eq = w.find('=');
        auto code = eq == std::string::npos ? std::nullopt : code_arg(w.substr(0, eq));
        if (!code) throw Error(ErrorKind::InvalidArgument, "weight must look like E4=2, got '" + w + "'");
        double value = std::stod(w.substr(eq + 1));
        if (!(value >= 0)) throw Error(ErrorKind::InvalidArgument, "weights must be non-negative");
        policy.weights[*code] = value;
    }

    out << "seed " << options.seed << '\n';
    PtcBuild built = build_ptc(cases, policy);
    write_ptc(built.pairs, options.out);
    if (options.plan_out) {
        std::vector<Value> rows;
        for (const auto& e : built.plan) {
            Value v = Value::object();
            v["id"] = e.case_id;
            v["code"] = code_label(e.code);
            rows.push_back(std::move(v));
        }
        write_json_lines(rows, *options.plan_out);
    }
    std::map<ErrorCode, std::size_t> per_code;
    for (auto code : kAllErrorCodes) per_code[code] = 0;
    for (const auto& e : built.plan) ++per_code[e.code];
    out << "wrote " << built.pairs.size() << " pairs to " << options.out.string() << ", skipped "
        << built.skipped.size() << '\n';
    for (const auto& sk : built.skipped) out << "skipped " << sk.case_id << ": " << sk.reason << '\n';
    print_histogram(out, per_code);
    if (result) *result = std::move(built);
    return kExitOk;
}

Value report_with_cost(const EvalResult& scores, const CostSummary* cost) {
    Value report = eval_report_json(scores);
    if (cost) {
        Value c = Value::object();
        c["cases"] = cost->cases;
        c["prompt_tokens"] = cost->usage.prompt_tokens;
        c["generated_tokens"] = cost->usage.generated_tokens;
        c["prompt_tokens_per_case"] =
            cost->cases ? Value(static_cast<double>(cost->usage.prompt_tokens) / static_cast<double>(cost->cases))
                        : Value(nullptr);
        c["generated_tokens_per_case"] =
            cost->cases ? Value(static_cast<double>(cost->usage.generated_tokens) / static_cast<double>(cost->cases))
                        : Value(nullptr);
        c["cost_per_case"] = cost->cost_per_case ? Value(*cost->cost_per_case) : Value(nullptr);
        report["cost"] = std::move(c);
    }
    return report;
}

int cmd_eval(const EvalOptions& options, std::ostream& out, EvalResult* result) {
    if (options.predictions.has_value() == options.records.has_value())
        throw Error(ErrorKind::InvalidArgument, "eval needs exactly one of --predictions or --records");
    auto cases = load_cases_or_empty(options.cases, options.format, out);

    std::map<std::string, std::vector<ToolCall>> predicted;
    const fs::path& src = options.predictions ? *options.predictions : *options.records;
    if (!file_is_blank(src)) {
        for (const auto& row : read_json_lines(src)) {
            if (options.records) {
                IclRunRecord r = run_record_from_json(row);
                predicted[r.id] = std::move(r.final_calls);
            } else {
                predicted[row_id(row)] = prediction_calls(row);
            }
        }
    }
    std::vector<std::string> ids;
    std::vector<std::vector<ToolCall>> preds, golds;
    std::size_t missing = 0;
    for (const auto& c : cases) {
        ids.push_back(c.id);
        golds.push_back(c.gold);
        auto it = predicted.find(c.id);
        if (it == predicted.end()) ++missing;
        // A case without a prediction scores as an empty call list.
        preds.push_back(it == predicted.end() ? std::vector<ToolCall>{} : it->second);
    }
    EvalResult r = aggregate(score_corpus(ids, preds, golds));
    if (options.report_out) write_text(*options.report_out, report_with_cost(r, nullptr).dump(2) + "\n");
    if (options.csv_out) write_eval_csv(r, *options.csv_out);
    out << "cases " << cases.size();
    if (missing) out << " (" << missing << " without predictions)";
    out << "\nF1 Name              " << fmt_f1(r.f1_name) << "\nF1 Name + Parameter  " << fmt_f1(r.f1_full) << '\n';
    if (result) *result = std::move(r);
    return kExitOk;
}

int cmd_icl(const IclCliOptions& options, std::ostream& out, IclSummary* summary) {
    auto cases = load_cases_or_empty(options.cases, options.format, out);
    auto client = make_client(options.client);
    if (!client && !cases.empty()) throw Error(ErrorKind::InvalidArgument, "icl needs --script or --model");

    IclOptions icl;
    icl.two_round = options.two_round;
    icl.vanilla = options.vanilla;
    icl.params.temperature = options.client.temperature;
    icl.params.max_tokens = options.client.max_tokens;
    icl.max_tokens_per_case = options.max_tokens_per_case;
    if (options.two_round) {
        if (options.checklists) {
            icl.checklists = read_checklists(*options.checklists);
        } else {
            std::map<std::string, ToolSpec> tools;
            for (const auto& c : cases)
                for (const auto& t : c.tools) tools.emplace(t.name, t);
            for (const auto& [_, t] : tools) icl.checklists.push_back(synth_checklist_offline(t, options.seed));
        }
    }

    out << "seed " << options.seed << '\n';
    IclSummary s;
    if (!cases.empty()) s.records = run_icl_batch(cases, *client, icl, options.concurrency);

    std::vector<Value> rows;
    for (const auto& r : s.records) rows.push_back(run_record_to_json(r));
    write_json_lines(rows, options.records_out);

    std::vector<std::string> ids;
    std::vector<std::vector<ToolCall>> preds, golds;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        ids.push_back(cases[i].id);
        preds.push_back(s.records[i].final_calls);
        golds.push_back(cases[i].gold);
    }
    s.scores = aggregate(score_corpus(ids, preds, golds));
    s.cost = cost_summary(s.records, options.price_in, options.price_out);
    if (options.report_out)
        write_text(*options.report_out, report_with_cost(s.scores, &s.cost).dump(2) + "\n");

    std::size_t missing = 0;
    for (const auto& r : s.records) missing += r.missing_checklists.size();
    out << "cases " << s.cost.cases << (options.two_round ? " (two rounds" : " (one round")
        << (options.vanilla ? ", vanilla)" : ")") << '\n';
    out << "F1 Name              " << fmt_f1(s.scores.f1_name) << "\nF1 Name + Parameter  "
        << fmt_f1(s.scores.f1_full) << '\n';
    out << "prompt tokens        " << s.cost.usage.prompt_tokens << "\ngenerated tokens     "
        << s.cost.usage.generated_tokens << '\n';
    if (s.cost.cases) {
        out << std::fixed << std::setprecision(1) << "prompt tokens/case   "
            << static_cast<double>(s.cost.usage.prompt_tokens) / static_cast<double>(s.cost.cases)
            << "\ngenerated tokens/case "
            << static_cast<double>(s.cost.usage.generated_tokens) / static_cast<double>(s.cost.cases) << '\n'
            << std::defaultfloat << std::setprecision(6);
    }
    if (s.cost.cost_per_case) out << "cost/case            " << *s.cost.cost_per_case << '\n';
    if (missing) out << "local checklists missing for " << missing << " invoked tools\n";
    if (summary) *summary = std::move(s);
    return kExitOk;
}

int cmd_kto_demo(const KtoDemoOptions& options, std::ostream& out, prefopt::FailureModeDemo* result) {
    if (options.method != "dpo" && options.method != "kto" && options.method != "both")
        throw Error(ErrorKind::InvalidArgument, "method must be dpo, kto or both");
    if (options.pairs == 0 || options.steps < 0)
        throw Error(ErrorKind::InvalidArgument, "need at least one pair and a non-negative step count");
    prefopt::PairSetConfig pc;
    pc.count = options.pairs;
    pc.seed = options.seed;
    prefopt::TrainConfig tc;
    tc.steps = options.steps;
    tc.learning_rate = options.learning_rate;
    tc.seed = options.seed;
    tc.kto.beta = options.beta;

    out << "seed " << options.seed << '\n';
    prefopt::FailureModeDemo d = prefopt::run_failure_mode_demo(pc, tc);
    if (options.out_dir) {
        fs::create_directories(*options.out_dir);
        if (options.method != "kto") prefopt::write_trajectory_csv(d.dpo, *options.out_dir / "dpo_trajectory.csv");
        if (options.method != "dpo") prefopt::write_trajectory_csv(d.kto, *options.out_dir / "kto_trajectory.csv");
    }
    auto verdict = [](bool b) { return b ? "true" : "false"; };
    const auto& d0 = d.dpo.points.front();
    const auto& d1 = d.dpo.points.back();
    const auto& k0 = d.kto.points.front();
    const auto& k1 = d.kto.points.back();
    out << std::setprecision(6);
    out << "dpo loss " << d0.loss << " -> " << d1.loss << ", chosen logp " << d0.logp_chosen << " -> "
        << d1.logp_chosen << ", rejected logp " << d0.logp_rejected << " -> " << d1.logp_rejected << '\n';
    out << "kto loss " << k0.loss << " -> " << k1.loss << ", correct-token logit " << k0.correct_logit << " -> "
        << k1.correct_logit << '\n';
    out << "initial dpo grad norm: one-token pairs " << d.grad_norm_minimal << ", all-token pairs "
        << d.grad_norm_all_token << '\n';
    out << "verdict dpo_chosen_logp_decreases " << verdict(d.chosen_logp_decreases) << '\n';
    out << "verdict kto_correct_logit_increases " << verdict(d.correct_logit_increases) << '\n';
    out << "verdict dpo_gradient_vanishes " << verdict(d.gradient_vanishes) << '\n';
    if (result) *result = std::move(d);
    return kExitOk;
}

}  // namespace toolcheck::cli
