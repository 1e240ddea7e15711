#pragma once

#include "toolcheck/callparse.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace toolcheck {

// (pred index, gold index), sorted by pred index.
using Matching = std::vector<std::pair<std::size_t, std::size_t>>;

/// Maximum one-to-one matching on name equality. Among maximum matchings it
/// maximizes pairs with equal arguments; remaining ties go to the lowest
/// (pred, gold) indices.
Matching match_calls(const std::vector<ToolCall>& pred, const std::vector<ToolCall>& gold);

struct CaseCounts {
    std::size_t tp_name = 0, fp_name = 0, fn_name = 0;
    std::size_t tp_full = 0, fp_full = 0, fn_full = 0;

    double f1_name() const;
    double f1_full() const;
    CaseCounts& operator+=(const CaseCounts& o);
    friend bool operator==(const CaseCounts&, const CaseCounts&) = default;
};

// 2PR/(P+R); 1.0 when there is nothing on either side, 0.0 when exactly one
// side is empty or P+R is zero.
double f1_score(std::size_t tp, std::size_t fp, std::size_t fn);

CaseCounts score_case(const std::vector<ToolCall>& pred, const std::vector<ToolCall>& gold);

struct CaseScore {
    std::string id;
    CaseCounts counts;
};

struct EvalResult {
    CaseCounts totals;
    // NaN for an empty corpus (reported as null).
    double f1_name = 0;
    double f1_full = 0;
    std::vector<CaseScore> per_case;
};

/// Micro-averaged: counts are summed before computing F1.
EvalResult aggregate(const std::vector<CaseScore>& cases);

/// Scores aligned (pred, gold) lists in parallel; results keep input order.
std::vector<CaseScore> score_corpus(const std::vector<std::string>& ids,
                                    const std::vector<std::vector<ToolCall>>& preds,
                                    const std::vector<std::vector<ToolCall>>& golds);

// {"f1_name", "f1_name_param", "counts": {...}, "per_case": [...]}
Value eval_report_json(const EvalResult& r);
std::string eval_report_csv(const EvalResult& r);
void write_eval_csv(const EvalResult& r, const std::filesystem::path& path);

}  // namespace toolcheck
