#pragma once

#include "toolcheck/checker.hpp"
#include "toolcheck/error.hpp"
#include "toolcheck/icl.hpp"
#include "toolcheck/metrics.hpp"
#include "toolcheck/negsample.hpp"
#include "toolcheck/prefopt.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

// Subcommand implementations behind the `toolcheck` executable. Each takes a
// plain options struct, writes files it is asked to write, prints a human
// summary to `out`, and returns the process exit code. Library errors
// propagate as toolcheck::Error; exit_code_for maps them.
namespace toolcheck::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitClient = 3;

int exit_code_for(const Error& e);

// Cases from a JSON-lines file; an empty file yields no cases instead of an error.
std::vector<EvalCase> load_cases_or_empty(const fs::path& path, const std::string& format, std::ostream& log);

struct ClientOptions {
    // Scripted completions (see ScriptedChatClient); takes precedence over HTTP.
    std::optional<fs::path> script;
    std::string base_url = "https://api.openai.com/v1";
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";
    double temperature = 0.2;
    int max_tokens = 512;
};

// Null when neither a script nor a model is configured.
std::unique_ptr<ChatClient> make_client(const ClientOptions& options);

struct CheckOptions {
    fs::path cases;
    std::string format = "unified";
    // At most one of these; with neither, the cases' own gold answers are linted.
    std::optional<fs::path> ptc;
    std::optional<fs::path> predictions;
    // "auto" = referenced whenever gold is available.
    std::string mode = "auto";
    std::optional<fs::path> findings_out;
    std::optional<fs::path> histogram_out;
    // Exit 1 when anything is found.
    bool strict = false;
};

struct CheckSummary {
    std::size_t checked = 0;
    std::size_t flagged = 0;
    // PTC only: chosen answers that were not clean, and pairs with no matching case.
    std::size_t chosen_flagged = 0;
    std::size_t unmatched = 0;
    ErrorHistogram histogram;
};

int cmd_check(const CheckOptions& options, std::ostream& out, CheckSummary* summary = nullptr);

struct GenLocalOptions {
    fs::path tools;
    fs::path out;  // checklists, one JSON object per line
    bool offline = true;
    std::uint64_t seed = 0;
    bool include_wrong_name = false;
    ClientOptions client;
};

int cmd_gen_local(const GenLocalOptions& options, std::ostream& out);

struct GenNegOptions {
    fs::path cases;
    std::string format = "unified";
    fs::path out;
    std::optional<fs::path> plan_out;
    std::uint64_t seed = 0;
    // Empty = all eight codes.
    std::vector<std::string> codes;
    // "E4=2" style relative weights.
    std::vector<std::string> weights;
    // Only the first N cases are considered; 0 = all.
    std::size_t limit = 0;
};

int cmd_gen_neg(const GenNegOptions& options, std::ostream& out, PtcBuild* result = nullptr);

struct EvalOptions {
    fs::path cases;
    std::string format = "unified";
    // JSON lines of {"id", "output"} or {"id", "calls"}.
    std::optional<fs::path> predictions;
    // JSON lines written by `icl`.
    std::optional<fs::path> records;
    std::optional<fs::path> report_out;
    std::optional<fs::path> csv_out;
};

int cmd_eval(const EvalOptions& options, std::ostream& out, EvalResult* result = nullptr);

struct IclCliOptions {
    fs::path cases;
    std::string format = "unified";
    // Checklists from gen-local; without them, offline checklists are
    // synthesized from the cases' tools.
    std::optional<fs::path> checklists;
    bool two_round = true;
    bool vanilla = false;
    std::size_t concurrency = 4;
    std::uint64_t seed = 0;
    std::int64_t max_tokens_per_case = 0;
    std::optional<double> price_in;
    std::optional<double> price_out;
    fs::path records_out;
    std::optional<fs::path> report_out;
    ClientOptions client;
};

struct IclSummary {
    std::vector<IclRunRecord> records;
    EvalResult scores;
    CostSummary cost;
};

int cmd_icl(const IclCliOptions& options, std::ostream& out, IclSummary* summary = nullptr);

struct KtoDemoOptions {
    // "dpo", "kto" or "both".
    std::string method = "both";
    std::size_t pairs = 200;
    int steps = 200;
    std::uint64_t seed = 0;
    double learning_rate = 5.0;
    double beta = 0.1;
    std::optional<fs::path> out_dir;
};

int cmd_kto_demo(const KtoDemoOptions& options, std::ostream& out, prefopt::FailureModeDemo* result = nullptr);

// The full eval report object the eval and icl commands write.
Value report_with_cost(const EvalResult& scores, const CostSummary* cost);

}  // namespace toolcheck::cli
