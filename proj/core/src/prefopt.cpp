#include "toolcheck/prefopt.hpp"

#include "toolcheck/error.hpp"
#include "toolcheck/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>
#include <thread>

namespace toolcheck::prefopt {

namespace {

TokenSeq context_of(const TokenSeq& x, const TokenSeq& y, std::size_t k) {
    TokenSeq c = x;
    c.insert(c.end(), y.begin(), y.begin() + static_cast<std::ptrdiff_t>(k));
    return c;
}

void check_tokens(const ToyModel& model, const TokenSeq& y) {
    for (int t : y)
        if (t < 0 || t >= model.vocab_size)
            throw Error(ErrorKind::TokenOutOfRange,
                        "token " + std::to_string(t) + " outside vocabulary of " + std::to_string(model.vocab_size));
}

// Adds scale * (onehot(t) - s) into the row for `context`.
void add_token_grad(LogitTable& grad, const TokenSeq& context, const std::vector<double>& s, int t, double scale) {
    auto& row = grad[context];
    if (row.empty()) row.assign(s.size(), 0.0);
    for (std::size_t j = 0; j < s.size(); ++j) row[j] -= scale * s[j];
    row[static_cast<std::size_t>(t)] += scale;
}

double log_sigmoid(double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

}  // namespace

std::vector<double> ToyModel::logit_row(const TokenSeq& context) const {
    auto it = logits.find(context);
    if (it == logits.end()) return std::vector<double>(static_cast<std::size_t>(vocab_size), 0.0);
    return it->second;
}

std::vector<double>& ToyModel::mutable_row(const TokenSeq& context) {
    auto& row = logits[context];
    if (row.empty()) row.assign(static_cast<std::size_t>(vocab_size), 0.0);
    return row;
}

std::vector<double> ToyModel::probs(const TokenSeq& context) const { return softmax(logit_row(context)); }

std::vector<double> softmax(const std::vector<double>& logits) {
    std::vector<double> out(logits.size());
    if (logits.empty()) return out;
    double m = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    for (std::size_t j = 0; j < logits.size(); ++j) z += out[j] = std::exp(logits[j] - m);
    for (double& p : out) p /= z;
    return out;
}

RefPair RefPair::make(TokenSeq x, TokenSeq y_w, TokenSeq y_l) {
    if (y_w == y_l) throw Error(ErrorKind::InvalidArgument, "chosen and rejected sequences are identical");
    RefPair p{std::move(x), std::move(y_w), std::move(y_l), std::nullopt};
    if (p.y_w.size() == p.y_l.size()) {
        std::size_t diffs = 0, at = 0;
        for (std::size_t k = 0; k < p.y_w.size(); ++k)
            if (p.y_w[k] != p.y_l[k]) ++diffs, at = k;
        if (diffs == 1) p.diff_index = at;
    }
    return p;
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double seq_logprob(const ToyModel& model, const TokenSeq& x, const TokenSeq& y) {
    check_tokens(model, y);
    double total = 0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        auto row = model.logit_row(context_of(x, y, k));
        double m = *std::max_element(row.begin(), row.end());
        double z = 0;
        for (double g : row) z += std::exp(g - m);
        total += row[static_cast<std::size_t>(y[k])] - m - std::log(z);
    }
    return total;
}

void accumulate_logprob_grad(const ToyModel& model, const TokenSeq& x, const TokenSeq& y, double scale,
                             LogitTable& grad) {
    check_tokens(model, y);
    for (std::size_t k = 0; k < y.size(); ++k) {
        TokenSeq c = context_of(x, y, k);
        add_token_grad(grad, c, model.probs(c), y[k], scale);
    }
}

double log_ratio(const ToyModel& model, const ToyModel& ref, const TokenSeq& x, const TokenSeq& y) {
    return seq_logprob(model, x, y) - seq_logprob(ref, x, y);
}

double dpo_loss(const ToyModel& model, const ToyModel& ref, const RefPair& pair, double beta) {
    double z = beta * (log_ratio(model, ref, pair.x, pair.y_w) - log_ratio(model, ref, pair.x, pair.y_l));
    return -log_sigmoid(z);
}

GradientReport dpo_loss_grad(const ToyModel& model, const ToyModel& ref, const RefPair& pair, double beta) {
    GradientReport r;
    double z = beta * (log_ratio(model, ref, pair.x, pair.y_w) - log_ratio(model, ref, pair.x, pair.y_l));
    r.loss = -log_sigmoid(z);
    // d/dz -log sigma(z) = -sigma(-z)
    double w = beta * sigmoid(-z);
    r.weight_w = r.weight_l = w;
    accumulate_logprob_grad(model, pair.x, pair.y_w, -w, r.grad);
    accumulate_logprob_grad(model, pair.x, pair.y_l, w, r.grad);
    return r;
}

GradientReport kto_loss(const ToyModel& model, const ToyModel& ref, const RefPair& pair, const KtoConfig& cfg) {
    GradientReport r;
    r.c_w = cfg.beta * (log_ratio(model, ref, pair.x, pair.y_w) - cfg.z0);
    r.c_l = cfg.beta * (cfg.z0 - log_ratio(model, ref, pair.x, pair.y_l));
    double sw = sigmoid(r.c_w), sl = sigmoid(r.c_l);
    r.loss = cfg.lambda_w - cfg.lambda_w * sw + cfg.lambda_l - cfg.lambda_l * sl;
    r.a_w = cfg.lambda_w * sw * sigmoid(1.0 - r.c_w);
    r.a_l = cfg.lambda_l * sl * sigmoid(1.0 - r.c_l);
    r.weight_w = cfg.beta * cfg.lambda_w * sw * (1.0 - sw);
    r.weight_l = cfg.beta * cfg.lambda_l * sl * (1.0 - sl);
    if (r.weight_w != 0) accumulate_logprob_grad(model, pair.x, pair.y_w, -r.weight_w, r.grad);
    if (r.weight_l != 0) accumulate_logprob_grad(model, pair.x, pair.y_l, r.weight_l, r.grad);
    return r;
}

LogitTable kto_token_gradient(const ToyModel& model, const ToyModel& ref, const RefPair& pair, const KtoConfig& cfg,
                              WeightForm form) {
    if (!pair.diff_index)
        throw Error(ErrorKind::PairNotMinimal, "pair does not differ at exactly one position");
    check_tokens(model, pair.y_w);
    check_tokens(model, pair.y_l);
    GradientReport rep = kto_loss(model, ref, pair, cfg);
    double aw = rep.weight_w, al = rep.weight_l;
    if (form == WeightForm::Printed) aw = cfg.beta * rep.a_w, al = cfg.beta * rep.a_l;

    const std::size_t i = *pair.diff_index;
    const auto V = static_cast<std::size_t>(model.vocab_size);
    LogitTable g;
    for (std::size_t k = 0; k < pair.y_w.size(); ++k) {
        const std::size_t tw = static_cast<std::size_t>(pair.y_w[k]);
        const std::size_t tl = static_cast<std::size_t>(pair.y_l[k]);
        if (k <= i) {
            // Shared context: one row receives both sequences' terms,
            // -a_w [j==t_w] + a_l [j==t_l] + (a_w - a_l) s_j.
            TokenSeq c = context_of(pair.x, pair.y_w, k);
            auto s = model.probs(c);
            auto& row = g[c];
            if (row.empty()) row.assign(V, 0.0);
            for (std::size_t j = 0; j < V; ++j) {
                double v = (aw - al) * s[j];
                if (j == tw) v -= aw;
                if (j == tl) v += al;
                row[j] += v;
            }
        } else {
            // Contexts have diverged: separate rows for chosen and rejected.
            TokenSeq cw = context_of(pair.x, pair.y_w, k);
            TokenSeq cl = context_of(pair.x, pair.y_l, k);
            auto sw = model.probs(cw);
            auto sl = model.probs(cl);
            auto& rw = g[cw];
            if (rw.empty()) rw.assign(V, 0.0);
            for (std::size_t j = 0; j < V; ++j) rw[j] += aw * sw[j] - (j == tw ? aw : 0.0);
            auto& rl = g[cl];
            if (rl.empty()) rl.assign(V, 0.0);
            for (std::size_t j = 0; j < V; ++j) rl[j] += (j == tl ? al : 0.0) - al * sl[j];
        }
    }
    return g;
}

double table_norm(const LogitTable& t) {
    double sq = 0;
    for (const auto& [_, row] : t)
        for (double v : row) sq += v * v;
    return std::sqrt(sq);
}

void add_scaled(LogitTable& into, const LogitTable& from, double scale) {
    for (const auto& [key, row] : from) {
        auto& dst = into[key];
        if (dst.empty()) dst.assign(row.size(), 0.0);
        for (std::size_t j = 0; j < row.size(); ++j) dst[j] += scale * row[j];
    }
}

std::string method_name(Method m) { return m == Method::Dpo ? "dpo" : "kto"; }

ToyModel init_model(const std::vector<RefPair>& pairs, int vocab_size, int max_len, std::uint64_t seed,
                    double scale) {
    ToyModel model(vocab_size, max_len);
    for (const auto& p : pairs)
        for (const TokenSeq* y : {&p.y_w, &p.y_l}) {
            check_tokens(model, *y);
            for (std::size_t k = 0; k < y->size(); ++k) model.logits[context_of(p.x, *y, k)];
        }
    for (auto& [key, row] : model.logits) {
        std::uint64_t h = 0x243f6a8885a308d3ULL;
        for (int t : key) h = mix_seed(h, static_cast<std::uint64_t>(static_cast<std::uint32_t>(t)));
        Rng rng(mix_seed(seed, h));
        row.resize(static_cast<std::size_t>(vocab_size));
        for (double& g : row) g = scale * standard_normal(rng);
    }
    return model;
}

GradientReport batch_loss_grad(const ToyModel& model, const ToyModel& ref, const std::vector<RefPair>& pairs,
                               Method method, const KtoConfig& cfg) {
    if (pairs.empty()) throw Error(ErrorKind::InvalidArgument, "no pairs");
    auto one = [&](const RefPair& p) {
        return method == Method::Dpo ? dpo_loss_grad(model, ref, p, cfg.beta) : kto_loss(model, ref, p, cfg);
    };
    // Per-pair reports are computed in parallel chunks and reduced in input
    // order, so the result does not depend on the thread count.
    std::vector<GradientReport> parts(pairs.size());
    std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
    if (pairs.size() < 64) workers = 1;
    std::size_t chunk = (pairs.size() + workers - 1) / workers;
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk, hi = std::min(pairs.size(), lo + chunk);
        if (lo >= hi) break;
        jobs.push_back(std::async(std::launch::async, [&, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) parts[i] = one(pairs[i]);
        }));
    }
    for (auto& j : jobs) j.get();

    GradientReport total;
    const double inv = 1.0 / static_cast<double>(pairs.size());
    for (const auto& r : parts) {
        total.loss += r.loss * inv;
        add_scaled(total.grad, r.grad, inv);
        total.a_w += r.a_w * inv;
        total.a_l += r.a_l * inv;
        total.c_w += r.c_w * inv;
        total.c_l += r.c_l * inv;
        total.weight_w += r.weight_w * inv;
        total.weight_l += r.weight_l * inv;
    }
    return total;
}

Trajectory train_toy(const std::vector<RefPair>& pairs, int vocab_size, int max_len, const TrainConfig& cfg) {
    if (pairs.empty()) throw Error(ErrorKind::InvalidArgument, "train_toy needs at least one pair");
    ToyModel model = init_model(pairs, vocab_size, max_len, cfg.seed, cfg.init_scale);
    const ToyModel ref = model;
    Trajectory traj;
    traj.method = cfg.method;
    for (int step = 0; step <= cfg.steps; ++step) {
        GradientReport rep = batch_loss_grad(model, ref, pairs, cfg.method, cfg.kto);
        if (!std::isfinite(rep.loss))
            throw Error(ErrorKind::NonFiniteLoss, "loss became non-finite at step " + std::to_string(step));
        TrajectoryPoint pt;
        pt.step = step;
        pt.loss = rep.loss;
        pt.grad_norm = table_norm(rep.grad);
        std::size_t minimal = 0;
        for (const auto& p : pairs) {
            pt.logp_chosen += seq_logprob(model, p.x, p.y_w);
            pt.logp_rejected += seq_logprob(model, p.x, p.y_l);
            if (p.diff_index) {
                std::size_t i = *p.diff_index;
                pt.correct_logit += model.logit_row(context_of(p.x, p.y_w, i))[static_cast<std::size_t>(p.y_w[i])];
                ++minimal;
            }
        }
        pt.logp_chosen /= static_cast<double>(pairs.size());
        pt.logp_rejected /= static_cast<double>(pairs.size());
        pt.correct_logit = minimal ? pt.correct_logit / static_cast<double>(minimal)
                                   : std::numeric_limits<double>::quiet_NaN();
        traj.points.push_back(pt);
        if (step == cfg.steps) break;
        for (const auto& [key, row] : rep.grad) {
            auto& dst = model.mutable_row(key);
            for (std::size_t j = 0; j < row.size(); ++j) dst[j] -= cfg.learning_rate * row[j];
        }
    }
    return traj;
}

std::vector<RefPair> make_minimal_pairs(const PairSetConfig& cfg) {
    if (cfg.vocab_size < 4 || cfg.value_slots < 1 || cfg.value_offset < 0 ||
        cfg.value_offset + cfg.value_slots > cfg.answer_len || cfg.prompts < 1)
        throw Error(ErrorKind::InvalidArgument,
                    "pair set needs vocab_size >= 4 and value slots that fit inside answer_len");
    const int tmpl = cfg.vocab_size - 1;
    const int values = cfg.vocab_size - 1;  // tokens [0, values)
    Rng rng(cfg.seed);
    // Uniform over the non-common values other than `avoid`.
    auto other_value = [&](int avoid) {
        std::size_t n = static_cast<std::size_t>(avoid >= 1 ? values - 2 : values - 1);
        int t = 1 + static_cast<int>(pick_index(rng, n));
        return avoid >= 1 && t >= avoid ? t + 1 : t;
    };
    std::vector<RefPair> out;
    out.reserve(cfg.count);
    for (std::size_t n = 0; n < cfg.count; ++n) {
        // Prompt tokens live above the answer vocabulary so they never alias answers.
        TokenSeq x{cfg.vocab_size + static_cast<int>(pick_index(rng, static_cast<std::size_t>(cfg.prompts)))};
        TokenSeq yw(static_cast<std::size_t>(cfg.value_offset), tmpl);
        for (int s = 0; s < cfg.value_slots; ++s)
            yw.push_back(uniform01(rng) < cfg.common_rate
                             ? 0
                             : 1 + static_cast<int>(pick_index(rng, static_cast<std::size_t>(values - 1))));
        yw.resize(static_cast<std::size_t>(cfg.answer_len), tmpl);
        std::size_t i = static_cast<std::size_t>(cfg.value_offset) +
                        pick_index(rng, static_cast<std::size_t>(cfg.value_slots));
        TokenSeq yl = yw;
        if (yw[i] != 0 && uniform01(rng) < cfg.common_mistake_rate)
            yl[i] = 0;
        else
            yl[i] = other_value(yw[i]);
        out.push_back(RefPair::make(std::move(x), std::move(yw), std::move(yl)));
    }
    return out;
}

std::vector<RefPair> make_all_token_pairs(const std::vector<RefPair>& minimal, int vocab_size) {
    std::vector<RefPair> out;
    out.reserve(minimal.size());
    for (const auto& p : minimal) {
        TokenSeq yl = p.y_w;
        for (int& t : yl) t = (t + 1) % vocab_size;
        out.push_back(RefPair::make(p.x, p.y_w, std::move(yl)));
    }
    return out;
}

FailureModeDemo run_failure_mode_demo(const PairSetConfig& pair_cfg, const TrainConfig& train) {
    FailureModeDemo d;
    auto minimal = make_minimal_pairs(pair_cfg);
    auto all = make_all_token_pairs(minimal, pair_cfg.vocab_size);
    TrainConfig cfg = train;
    cfg.method = Method::Dpo;
    d.dpo = train_toy(minimal, pair_cfg.vocab_size, pair_cfg.answer_len, cfg);
    cfg.method = Method::Kto;
    d.kto = train_toy(minimal, pair_cfg.vocab_size, pair_cfg.answer_len, cfg);

    // One model state covering both pair sets; rows depend only on (seed, context).
    std::vector<RefPair> both = minimal;
    both.insert(both.end(), all.begin(), all.end());
    ToyModel m = init_model(both, pair_cfg.vocab_size, pair_cfg.answer_len, train.seed, train.init_scale);
    d.grad_norm_minimal = table_norm(batch_loss_grad(m, m, minimal, Method::Dpo, train.kto).grad);
    d.grad_norm_all_token = table_norm(batch_loss_grad(m, m, all, Method::Dpo, train.kto).grad);

    d.chosen_logp_decreases = d.dpo.points.back().logp_chosen < d.dpo.points.front().logp_chosen;
    d.correct_logit_increases = d.kto.points.back().correct_logit > d.kto.points.front().correct_logit;
    d.gradient_vanishes = d.grad_norm_minimal < d.grad_norm_all_token;
    return d;
}

std::string trajectory_csv(const Trajectory& t) {
    std::ostringstream os;
    os.precision(17);
    os << "step,loss,grad_norm,logp_chosen,logp_rejected\n";
    for (const auto& p : t.points)
        os << p.step << ',' << p.loss << ',' << p.grad_norm << ',' << p.logp_chosen << ',' << p.logp_rejected << '\n';
    return os.str();
}

void write_trajectory_csv(const Trajectory& t, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::UnreadableFile, "cannot write " + path.string());
    out << trajectory_csv(t);
}

}  // namespace toolcheck::prefopt
