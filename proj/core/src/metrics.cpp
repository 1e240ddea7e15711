#include "toolcheck/metrics.hpp"

#include "toolcheck/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

namespace toolcheck {

namespace {

// Kuhn's augmenting path over the equal-argument edges of one name group.
bool augment(std::size_t u, const std::vector<std::vector<std::size_t>>& adj, std::vector<int>& gold_owner,
             std::vector<char>& seen) {
    for (std::size_t v : adj[u]) {
        if (seen[v]) continue;
        seen[v] = 1;
        if (gold_owner[v] < 0 || augment(static_cast<std::size_t>(gold_owner[v]), adj, gold_owner, seen)) {
            gold_owner[v] = static_cast<int>(u);
            return true;
        }
    }
    return false;
}

Value f1_json(double f) { return std::isnan(f) ? Value(nullptr) : Value(f); }

Value counts_json(const CaseCounts& c) {
    Value v = Value::object();
    v["tp_name"] = c.tp_name;
    v["fp_name"] = c.fp_name;
    v["fn_name"] = c.fn_name;
    v["tp_name_param"] = c.tp_full;
    v["fp_name_param"] = c.fp_full;
    v["fn_name_param"] = c.fn_full;
    return v;
}

}  // namespace

Matching match_calls(const std::vector<ToolCall>& pred, const std::vector<ToolCall>& gold) {
    std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> groups;
    for (std::size_t i = 0; i < pred.size(); ++i) groups[pred[i].name].first.push_back(i);
    for (std::size_t j = 0; j < gold.size(); ++j) groups[gold[j].name].second.push_back(j);

    Matching out;
    for (const auto& [_, g] : groups) {
        const auto& ps = g.first;
        const auto& gs = g.second;
        if (ps.empty() || gs.empty()) continue;
        // Every pairing inside a group is a name match, so cardinality is
        // min(|ps|, |gs|); first maximize exact-argument pairs, then fill.
        std::vector<std::vector<std::size_t>> adj(ps.size());
        for (std::size_t a = 0; a < ps.size(); ++a)
            for (std::size_t b = 0; b < gs.size(); ++b)
                if (values_equal(pred[ps[a]].arguments, gold[gs[b]].arguments)) adj[a].push_back(b);
        std::vector<int> owner(gs.size(), -1);
        for (std::size_t a = 0; a < ps.size(); ++a) {
            std::vector<char> seen(gs.size(), 0);
            augment(a, adj, owner, seen);
        }
        std::vector<int> partner(ps.size(), -1);
        for (std::size_t b = 0; b < gs.size(); ++b)
            if (owner[b] >= 0) partner[static_cast<std::size_t>(owner[b])] = static_cast<int>(b);
        std::size_t next_free = 0;
        for (std::size_t a = 0; a < ps.size(); ++a) {
            if (partner[a] >= 0) continue;
            while (next_free < gs.size() && owner[next_free] >= 0) ++next_free;
            if (next_free == gs.size()) break;
            owner[next_free] = static_cast<int>(a);
            partner[a] = static_cast<int>(next_free);
        }
        for (std::size_t a = 0; a < ps.size(); ++a)
            if (partner[a] >= 0) out.emplace_back(ps[a], gs[static_cast<std::size_t>(partner[a])]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

double f1_score(std::size_t tp, std::size_t fp, std::size_t fn) {
    if (tp + fp == 0 && tp + fn == 0) return 1.0;
    if (tp == 0) return 0.0;
    double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
    double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2 * p * r / (p + r);
}

double CaseCounts::f1_name() const { return f1_score(tp_name, fp_name, fn_name); }
double CaseCounts::f1_full() const { return f1_score(tp_full, fp_full, fn_full); }

CaseCounts& CaseCounts::operator+=(const CaseCounts& o) {
    tp_name += o.tp_name, fp_name += o.fp_name, fn_name += o.fn_name;
    tp_full += o.tp_full, fp_full += o.fp_full, fn_full += o.fn_full;
    return *this;
}

CaseCounts score_case(const std::vector<ToolCall>& pred, const std::vector<ToolCall>& gold) {
    Matching m = match_calls(pred, gold);
    CaseCounts c;
    c.tp_name = m.size();
    for (const auto& [i, j] : m)
        if (values_equal(pred[i].arguments, gold[j].arguments)) ++c.tp_full;
    c.fp_name = pred.size() - c.tp_name;
    c.fn_name = gold.size() - c.tp_name;
    c.fp_full = pred.size() - c.tp_full;
    c.fn_full = gold.size() - c.tp_full;
    return c;
}

EvalResult aggregate(const std::vector<CaseScore>& cases) {
    EvalResult r;
    r.per_case = cases;
    if (cases.empty()) {
        r.f1_name = r.f1_full = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    for (const auto& c : cases) r.totals += c.counts;
    r.f1_name = r.totals.f1_name();
    r.f1_full = r.totals.f1_full();
    return r;
}

std::vector<CaseScore> score_corpus(const std::vector<std::string>& ids,
                                    const std::vector<std::vector<ToolCall>>& preds,
                                    const std::vector<std::vector<ToolCall>>& golds) {
    if (ids.size() != preds.size() || preds.size() != golds.size())
        throw Error(ErrorKind::InvalidArgument, "score_corpus needs aligned ids, predictions and golds");
    std::vector<CaseScore> out(ids.size());
    std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
    if (ids.size() < 256) workers = 1;
    std::size_t chunk = (ids.size() + workers - 1) / std::max<std::size_t>(workers, 1);
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk, hi = std::min(ids.size(), lo + chunk);
        if (lo >= hi) break;
        jobs.push_back(std::async(std::launch::async, [&, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) out[i] = CaseScore{ids[i], score_case(preds[i], golds[i])};
        }));
    }
    for (auto& j : jobs) j.get();
    return out;
}

Value eval_report_json(const EvalResult& r) {
    Value v = Value::object();
    v["f1_name"] = f1_json(r.f1_name);
    v["f1_name_param"] = f1_json(r.f1_full);
    v["cases"] = r.per_case.size();
    v["counts"] = counts_json(r.totals);
    Value rows = Value::array();
    for (const auto& c : r.per_case) {
        Value row = Value::object();
        row["id"] = c.id;
        row["counts"] = counts_json(c.counts);
        row["f1_name"] = c.counts.f1_name();
        row["f1_name_param"] = c.counts.f1_full();
        rows.push_back(std::move(row));
    }
    v["per_case"] = std::move(rows);
    return v;
}

std::string eval_report_csv(const EvalResult& r) {
    std::ostringstream os;
    os << "id,tp_name,fp_name,fn_name,tp_name_param,fp_name_param,fn_name_param,f1_name,f1_name_param\n";
    for (const auto& c : r.per_case) {
        // Ids are quoted so commas inside them survive.
        std::string id = c.id;
        std::string quoted = "\"";
        for (char ch : id) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        quoted += '"';
        const auto& k = c.counts;
        os << quoted << ',' << k.tp_name << ',' << k.fp_name << ',' << k.fn_name << ',' << k.tp_full << ','
           << k.fp_full << ',' << k.fn_full << ',' << k.f1_name() << ',' << k.f1_full() << '\n';
    }
    return os.str();
}

void write_eval_csv(const EvalResult& r, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::UnreadableFile, "cannot write " + path.string());
    out << eval_report_csv(r);
}

}  // namespace toolcheck
