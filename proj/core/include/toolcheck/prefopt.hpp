#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace toolcheck::prefopt {

using TokenSeq = std::vector<int>;

// Per-context logit rows keyed by the exact prefix (prompt followed by the
// answer tokens emitted so far). Absent rows are all-zero logits, i.e. uniform.
using LogitTable = std::map<TokenSeq, std::vector<double>>;

// Tabular autoregressive policy: pi(t | context) = softmax(logits[context])[t].
struct ToyModel {
    int vocab_size = 0;
    int max_len = 0;
    LogitTable logits;

    ToyModel() = default;
    ToyModel(int vocab, int max_length) : vocab_size(vocab), max_len(max_length) {}

    std::vector<double> logit_row(const TokenSeq& context) const;
    std::vector<double>& mutable_row(const TokenSeq& context);
    std::vector<double> probs(const TokenSeq& context) const;
};

std::vector<double> softmax(const std::vector<double>& logits);

struct RefPair {
    TokenSeq x;
    TokenSeq y_w;
    TokenSeq y_l;
    // Set when y_w and y_l have equal length and differ at exactly one index.
    std::optional<std::size_t> diff_index;

    // Fills diff_index; throws Error(InvalidArgument) when y_w == y_l.
    static RefPair make(TokenSeq x, TokenSeq y_w, TokenSeq y_l);
};

struct KtoConfig {
    double beta = 0.1;
    double lambda_w = 1.0;
    double lambda_l = 1.0;
    // Reference point; a constant with respect to the parameters.
    double z0 = 0.0;
};

struct GradientReport {
    double loss = 0;
    LogitTable grad;
    // Asymmetric weights as written in the derivation: lambda * sigma(c) * sigma(1 - c).
    double a_w = 0, a_l = 0;
    double c_w = 0, c_l = 0;
    // Weights that make `grad` the exact derivative of the loss:
    // beta * lambda * sigma(c) * (1 - sigma(c)).
    double weight_w = 0, weight_l = 0;
};

double sigmoid(double z);

/// Sum over positions of log pi(y_k | x, y_<k). Throws Error(TokenOutOfRange).
double seq_logprob(const ToyModel& model, const TokenSeq& x, const TokenSeq& y);

// Adds scale * d/dlogits log pi(y | x) into `grad`.
void accumulate_logprob_grad(const ToyModel& model, const TokenSeq& x, const TokenSeq& y, double scale,
                             LogitTable& grad);

// Log-ratio log pi_theta(y|x) - log pi_ref(y|x).
double log_ratio(const ToyModel& model, const ToyModel& ref, const TokenSeq& x, const TokenSeq& y);

double dpo_loss(const ToyModel& model, const ToyModel& ref, const RefPair& pair, double beta);
GradientReport dpo_loss_grad(const ToyModel& model, const ToyModel& ref, const RefPair& pair, double beta);

/// Paired KTO loss and its exact gradient; z0 contributes no gradient.
GradientReport kto_loss(const ToyModel& model, const ToyModel& ref, const RefPair& pair, const KtoConfig& cfg);

enum class WeightForm {
    // beta * lambda * sigma(c) * (1 - sigma(c)): matches the loss derivative.
    Exact,
    // lambda * sigma(c) * sigma(1 - c), as printed in the derivation.
    Printed,
};

/// Closed-form per-logit gradient for a pair differing at one position,
/// assembled position by position from the shared-context case split.
/// Throws Error(PairNotMinimal) otherwise.
LogitTable kto_token_gradient(const ToyModel& model, const ToyModel& ref, const RefPair& pair, const KtoConfig& cfg,
                              WeightForm form = WeightForm::Exact);

double table_norm(const LogitTable& t);
void add_scaled(LogitTable& into, const LogitTable& from, double scale);

enum class Method { Dpo, Kto };

std::string method_name(Method m);

struct TrainConfig {
    Method method = Method::Kto;
    KtoConfig kto;  // beta is shared with DPO
    int steps = 200;
    double learning_rate = 5.0;
    std::uint64_t seed = 0;
    double init_scale = 0.5;
};

struct TrajectoryPoint {
    int step = 0;
    double loss = 0;
    double grad_norm = 0;
    double logp_chosen = 0;
    double logp_rejected = 0;
    // Mean logit of the chosen token at the differing position (minimal pairs only).
    double correct_logit = 0;
};

struct Trajectory {
    Method method = Method::Kto;
    std::vector<TrajectoryPoint> points;  // steps + 1 entries; entry t is the state after t updates
};

// Random initial policy with a row for every context the pairs visit. Each
// row is a function of (seed, context) only, so two pair sets that share a
// context start from the same logits there.
ToyModel init_model(const std::vector<RefPair>& pairs, int vocab_size, int max_len, std::uint64_t seed,
                    double scale);

// Mean loss and mean gradient over the pairs, reduced in input order.
GradientReport batch_loss_grad(const ToyModel& model, const ToyModel& ref, const std::vector<RefPair>& pairs,
                               Method method, const KtoConfig& cfg);

/// Plain gradient descent from init_model(pairs, ..., cfg.seed); the reference
/// policy is the frozen initial model. Throws Error(NonFiniteLoss).
Trajectory train_toy(const std::vector<RefPair>& pairs, int vocab_size, int max_len, const TrainConfig& cfg);

// Answers are `value_offset` template tokens (the opening structure of a
// call), then `value_slots` argument-value tokens, then template tokens up to
// `answer_len` (the closing structure). Value tokens come from
// [0, vocab_size - 1); the last vocabulary entry is the template token.
struct PairSetConfig {
    std::size_t count = 200;
    int vocab_size = 8;
    int answer_len = 5;
    int value_offset = 2;
    int value_slots = 2;
    // Distinct one-token prompts; small values make pairs share contexts.
    int prompts = 1;
    // Probability that a correct value is the common value (token 0).
    double common_rate = 0.1;
    // Probability that a corrupted slot takes the common value rather than a
    // uniformly drawn wrong one.
    double common_mistake_rate = 0.8;
    std::uint64_t seed = 0;
};

// Pairs whose answers differ at exactly one value slot.
std::vector<RefPair> make_minimal_pairs(const PairSetConfig& cfg);

// Same prompts and chosen answers, with every rejected token different.
std::vector<RefPair> make_all_token_pairs(const std::vector<RefPair>& minimal, int vocab_size);

// Both methods trained on the same minimal pairs, plus the initial DPO gradient
// norm on those pairs versus their all-token counterparts.
struct FailureModeDemo {
    Trajectory dpo;
    Trajectory kto;
    double grad_norm_minimal = 0;
    double grad_norm_all_token = 0;
    // DPO: mean chosen log-prob at the last step is below the first.
    bool chosen_logp_decreases = false;
    // KTO: mean logit of the correct token at the differing position rises.
    bool correct_logit_increases = false;
    // DPO: initial gradient norm is smaller on minimal pairs.
    bool gradient_vanishes = false;
};

// `train.method` is ignored; `train.seed` seeds the initial model.
FailureModeDemo run_failure_mode_demo(const PairSetConfig& pairs, const TrainConfig& train);

void write_trajectory_csv(const Trajectory& t, const std::filesystem::path& path);
std::string trajectory_csv(const Trajectory& t);

}  // namespace toolcheck::prefopt
