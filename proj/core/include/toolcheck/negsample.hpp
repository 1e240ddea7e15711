#pragma once

#include "toolcheck/checker.hpp"
#include "toolcheck/ingest.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace toolcheck {

struct PerturbPolicy {
    std::set<ErrorCode> allowed_codes;
    // Missing entries count as weight 1; weights of disallowed codes are ignored.
    std::map<ErrorCode, double> weights;
    std::uint64_t seed = 0;

    static PerturbPolicy uniform(std::uint64_t seed = 0);
    double weight(ErrorCode code) const;
};

// One place where an error can be injected. `key` is empty for call-level
// operators; `variant` distinguishes duplicate (0) from drop (1) for E7.
struct PerturbSite {
    std::size_t call = 0;
    std::string key;
    int variant = 0;

    friend bool operator==(const PerturbSite&, const PerturbSite&) = default;
};

// Every site where `code` can be injected into `gold`, in deterministic order.
std::vector<PerturbSite> perturb_sites(const std::vector<ToolCall>& gold, const std::vector<ToolSpec>& tools,
                                       ErrorCode code);

// Applies the operator for `code` at `site` and returns the rejected text.
std::string perturb_at(const std::vector<ToolCall>& gold, const std::vector<ToolSpec>& tools, ErrorCode code,
                       const PerturbSite& site);

/// Injects one error of kind `code` at a seeded site. Throws Error(Inapplicable)
/// when no legal site exists.
std::string perturb(const std::vector<ToolCall>& gold, const std::vector<ToolSpec>& tools, ErrorCode code,
                    std::uint64_t seed);

struct PlanEntry {
    std::string case_id;
    ErrorCode code;
};

struct PtcSkip {
    std::string case_id;
    std::string reason;
};

struct PtcBuild {
    std::vector<PreferencePair> pairs;
    // Code injected for each emitted pair, aligned with `pairs`.
    std::vector<PlanEntry> plan;
    std::vector<PtcSkip> skipped;
};

// Seed for one case; independent of where the case sits in the input.
std::uint64_t case_seed(std::uint64_t policy_seed, const std::string& case_id);

/// At most one pair per case. Cases whose gold is not clean, or where no allowed
/// code applies, are skipped with a reason.
PtcBuild build_ptc(const std::vector<EvalCase>& cases, const PerturbPolicy& policy);

// True iff chosen is clean against `gold` and rejected triggers the injected code.
bool validate_pair(const PreferencePair& pair, const ToolRegistry& registry, const std::vector<ToolCall>& gold);

// Prompt pair for the model-backed variant of perturbation.
std::vector<ChatMessage> build_negative_prompt(const EvalCase& c, const std::string& checklist_text);

/// Model-backed perturbation: asks `client` for a rejected answer and keeps it
/// only if validate_pair accepts it with some checklist code. Returns nullopt
/// when the model output is unusable.
std::optional<PreferencePair> perturb_with_client(const EvalCase& c, ChatClient& client,
                                                  const std::string& checklist_text);

}  // namespace toolcheck
