#include "oracles.hpp"
#include "support.hpp"

#include "toolcheck/error.hpp"
#include "toolcheck/prefopt.hpp"
#include "toolcheck/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

using namespace toolcheck;
using namespace toolcheck::prefopt;

namespace {

using testing::finite_difference;
using testing::max_abs_diff;
using testing::relative_error;
using Instance = testing::PrefInstance;

Instance random_instance(std::uint64_t seed, bool force_minimal = false) {
    return testing::random_pref_instance(seed, force_minimal);
}

double entry(const LogitTable& t, const TokenSeq& key, std::size_t j) { return testing::table_entry(t, key, j); }

double ref_log_softmax(const std::vector<double>& row, int t) {
    double m = *std::max_element(row.begin(), row.end());
    double z = 0;
    for (double v : row) z += std::exp(v - m);
    return row[static_cast<std::size_t>(t)] - m - std::log(z);
}

}  // namespace

TEST_CASE("softmax is a point of the simplex") {
    Rng rng(3);
    for (int n = 0; n < 200; ++n) {
        std::vector<double> logits(1 + pick_index(rng, 8));
        for (auto& v : logits) v = 40 * (uniform01(rng) - 0.5);
        auto s = softmax(logits);
        CHECK(std::abs(std::accumulate(s.begin(), s.end(), 0.0) - 1.0) < 1e-9);
        for (double p : s) CHECK(p >= 0);
    }
}

TEST_CASE("seq_logprob") {
    ToyModel uniform(4, 4);
    CHECK(seq_logprob(uniform, {0}, {1, 2}) == doctest::Approx(std::log(1.0 / 16)).epsilon(1e-14));
    CHECK(seq_logprob(uniform, {0}, {}) == 0.0);
    try {
        seq_logprob(uniform, {0}, {4});
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TokenOutOfRange);
    }
    CHECK_THROWS_AS(seq_logprob(uniform, {0}, {-1}), Error);

    for (std::uint64_t s = 0; s < 100; ++s) {
        auto in = random_instance(s);
        double direct = 0;
        TokenSeq ctx = in.pair.x;
        for (int t : in.pair.y_w) {
            direct += ref_log_softmax(in.model.logit_row(ctx), t);
            ctx.push_back(t);
        }
        CHECK(std::abs(seq_logprob(in.model, in.pair.x, in.pair.y_w) - direct) <= 1e-12);
    }
}

TEST_CASE("RefPair records the single differing index") {
    CHECK(RefPair::make({0}, {1, 2, 3}, {1, 0, 3}).diff_index == std::optional<std::size_t>(1));
    CHECK_FALSE(RefPair::make({0}, {1, 2, 3}, {1, 0, 0}).diff_index);
    CHECK_FALSE(RefPair::make({0}, {1, 2}, {1, 2, 3}).diff_index);
    CHECK_THROWS_AS(RefPair::make({0}, {1, 2}, {1, 2}), Error);
}

TEST_CASE("losses at model == ref with z0 = 0") {
    for (std::uint64_t s = 0; s < 50; ++s) {
        auto in = random_instance(s);
        in.cfg.z0 = 0;
        CHECK(std::abs(dpo_loss(in.model, in.model, in.pair, in.cfg.beta) - std::log(2.0)) <= 1e-12);
        auto k = kto_loss(in.model, in.model, in.pair, in.cfg);
        CHECK(std::abs(k.loss - 0.5 * (in.cfg.lambda_w + in.cfg.lambda_l)) <= 1e-12);
    }
    auto in = random_instance(1);
    CHECK(kto_loss(in.model, in.model, in.pair, KtoConfig{}).loss == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("DPO: beta zero and hand recomputation") {
    for (std::uint64_t s = 0; s < 50; ++s) {
        auto in = random_instance(s);
        CHECK(std::abs(dpo_loss(in.model, in.ref, in.pair, 0.0) - std::log(2.0)) <= 1e-12);
        double rw = seq_logprob(in.model, in.pair.x, in.pair.y_w) - seq_logprob(in.ref, in.pair.x, in.pair.y_w);
        double rl = seq_logprob(in.model, in.pair.x, in.pair.y_l) - seq_logprob(in.ref, in.pair.x, in.pair.y_l);
        double want = std::log1p(std::exp(-0.5 * (rw - rl)));
        CHECK(std::abs(dpo_loss(in.model, in.ref, in.pair, 0.5) - want) <= 1e-12);
    }
}

TEST_CASE("KTO: zero lambdas give zero loss and gradient; printed weights as written") {
    auto in = random_instance(4);
    KtoConfig zero{0.1, 0.0, 0.0, 0.3};
    auto r = kto_loss(in.model, in.ref, in.pair, zero);
    CHECK(r.loss == 0.0);
    CHECK(table_norm(r.grad) == 0.0);

    auto k = kto_loss(in.model, in.ref, in.pair, in.cfg);
    double rw = log_ratio(in.model, in.ref, in.pair.x, in.pair.y_w);
    double rl = log_ratio(in.model, in.ref, in.pair.x, in.pair.y_l);
    CHECK(k.c_w == doctest::Approx(in.cfg.beta * (rw - in.cfg.z0)));
    CHECK(k.c_l == doctest::Approx(in.cfg.beta * (in.cfg.z0 - rl)));
    CHECK(k.a_w == in.cfg.lambda_w * sigmoid(k.c_w) * sigmoid(1 - k.c_w));
    CHECK(k.a_l == in.cfg.lambda_l * sigmoid(k.c_l) * sigmoid(1 - k.c_l));
}

TEST_CASE("analytic gradients match central finite differences") {
    double worst_dpo = 0, worst_kto = 0;
    for (std::uint64_t s = 0; s < 150; ++s) {
        auto in = random_instance(1000 + s);
        const auto V = static_cast<std::size_t>(in.model.vocab_size);
        auto dpo = dpo_loss_grad(in.model, in.ref, in.pair, in.cfg.beta);
        CHECK(dpo.loss == doctest::Approx(dpo_loss(in.model, in.ref, in.pair, in.cfg.beta)).epsilon(1e-14));
        auto fd_dpo = finite_difference(
            in.model, [&](const ToyModel& m) { return dpo_loss(m, in.ref, in.pair, in.cfg.beta); });
        auto kto = kto_loss(in.model, in.ref, in.pair, in.cfg);
        auto fd_kto =
            finite_difference(in.model, [&](const ToyModel& m) { return kto_loss(m, in.ref, in.pair, in.cfg).loss; });
        worst_dpo = std::max(worst_dpo, relative_error(dpo.grad, fd_dpo, V));
        worst_kto = std::max(worst_kto, relative_error(kto.grad, fd_kto, V));
    }
    CHECK(worst_dpo <= 1e-4);
    CHECK(worst_kto <= 1e-4);
}

TEST_CASE("closed-form token gradient equals the generic gradient") {
    double worst = 0, worst_fd = 0;
    for (std::uint64_t s = 0; s < 150; ++s) {
        auto in = random_instance(5000 + s, true);
        const auto V = static_cast<std::size_t>(in.model.vocab_size);
        auto closed = kto_token_gradient(in.model, in.ref, in.pair, in.cfg);
        worst = std::max(worst, max_abs_diff(closed, kto_loss(in.model, in.ref, in.pair, in.cfg).grad, V));
        auto fd =
            finite_difference(in.model, [&](const ToyModel& m) { return kto_loss(m, in.ref, in.pair, in.cfg).loss; });
        worst_fd = std::max(worst_fd, relative_error(closed, fd, V));
    }
    CHECK(worst <= 1e-8);
    CHECK(worst_fd <= 1e-4);
}

TEST_CASE("token gradient: non-minimal pairs are rejected") {
    auto in = random_instance(9);
    auto two = RefPair::make({0}, {1, 2, 3}, {0, 0, 3});
    auto longer = RefPair::make({0}, {1, 2}, {1, 2, 0});
    for (const auto& p : {two, longer}) {
        try {
            kto_token_gradient(in.model, in.ref, p, in.cfg);
            FAIL("no error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::PairNotMinimal);
        }
    }
}

TEST_CASE("token gradient at model == ref cancels on shared prefix rows") {
    for (std::uint64_t s = 0; s < 50; ++s) {
        auto in = random_instance(300 + s, true);
        in.cfg.lambda_l = in.cfg.lambda_w;
        auto g = kto_token_gradient(in.model, in.model, in.pair, in.cfg);
        const auto i = *in.pair.diff_index;
        for (std::size_t k = 0; k < i; ++k) {
            TokenSeq ctx = in.pair.x;
            ctx.insert(ctx.end(), in.pair.y_w.begin(), in.pair.y_w.begin() + static_cast<std::ptrdiff_t>(k));
            for (std::size_t j = 0; j < static_cast<std::size_t>(in.model.vocab_size); ++j)
                CHECK(std::abs(entry(g, ctx, j)) <= 1e-15);
        }
    }
}

TEST_CASE("sign claim: a_w > a_l makes the correct token's gradient negative under both weight forms") {
    std::size_t seen = 0;
    for (std::uint64_t s = 0; s < 400; ++s) {
        auto in = random_instance(9000 + s, true);
        auto rep = kto_loss(in.model, in.ref, in.pair, in.cfg);
        if (!(rep.a_w > rep.a_l)) continue;
        ++seen;
        const auto i = *in.pair.diff_index;
        TokenSeq ctx = in.pair.x;
        ctx.insert(ctx.end(), in.pair.y_w.begin(), in.pair.y_w.begin() + static_cast<std::ptrdiff_t>(i));
        const auto tw = static_cast<std::size_t>(in.pair.y_w[i]);
        for (auto form : {WeightForm::Exact, WeightForm::Printed})
            CHECK(entry(kto_token_gradient(in.model, in.ref, in.pair, in.cfg, form), ctx, tw) < 0);
    }
    CHECK(seen > 50);
}

TEST_CASE("losses are invariant under vocabulary relabeling") {
    for (std::uint64_t s = 0; s < 100; ++s) {
        auto in = random_instance(700 + s);
        const int V = in.model.vocab_size;
        std::vector<int> perm(static_cast<std::size_t>(V));
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(s);
        for (std::size_t k = perm.size(); k > 1; --k) std::swap(perm[k - 1], perm[pick_index(rng, k)]);
        auto map_seq = [&](const TokenSeq& q) {
            TokenSeq out;
            for (int t : q) out.push_back(perm[static_cast<std::size_t>(t)]);
            return out;
        };
        auto map_model = [&](const ToyModel& m) {
            ToyModel out(m.vocab_size, m.max_len);
            for (const auto& [key, row] : m.logits) {
                std::vector<double> r(row.size());
                for (std::size_t j = 0; j < row.size(); ++j) r[static_cast<std::size_t>(perm[j])] = row[j];
                out.logits[map_seq(key)] = r;
            }
            return out;
        };
        auto pm = map_model(in.model), pr = map_model(in.ref);
        auto pp = RefPair::make(map_seq(in.pair.x), map_seq(in.pair.y_w), map_seq(in.pair.y_l));
        CHECK(std::abs(dpo_loss(pm, pr, pp, in.cfg.beta) - dpo_loss(in.model, in.ref, in.pair, in.cfg.beta)) <= 1e-12);
        CHECK(std::abs(kto_loss(pm, pr, pp, in.cfg).loss - kto_loss(in.model, in.ref, in.pair, in.cfg).loss) <= 1e-12);
    }
}

TEST_CASE("init_model rows depend only on seed and context") {
    auto a = RefPair::make({9}, {1, 2}, {1, 3});
    auto b = RefPair::make({9}, {1, 4}, {2, 4});
    auto only_a = init_model({a}, 8, 5, 42, 0.5);
    auto both = init_model({a, b}, 8, 5, 42, 0.5);
    for (const auto& [key, row] : only_a.logits) CHECK(both.logits.at(key) == row);
    CHECK(init_model({a}, 8, 5, 43, 0.5).logits != only_a.logits);
}

TEST_CASE("batch gradient is the mean of per-pair gradients") {
    PairSetConfig pc;
    pc.count = 40;
    auto pairs = make_minimal_pairs(pc);
    auto model = init_model(pairs, pc.vocab_size, pc.answer_len, 1, 0.5);
    auto ref = init_model(pairs, pc.vocab_size, pc.answer_len, 2, 0.5);
    for (auto method : {Method::Dpo, Method::Kto}) {
        KtoConfig cfg;
        auto batch = batch_loss_grad(model, ref, pairs, method, cfg);
        LogitTable sum;
        double loss = 0;
        for (const auto& p : pairs) {
            auto r = method == Method::Dpo ? dpo_loss_grad(model, ref, p, cfg.beta) : kto_loss(model, ref, p, cfg);
            loss += r.loss;
            add_scaled(sum, r.grad, 1.0 / static_cast<double>(pairs.size()));
        }
        CHECK(batch.loss == doctest::Approx(loss / static_cast<double>(pairs.size())).epsilon(1e-12));
        CHECK(max_abs_diff(batch.grad, sum, static_cast<std::size_t>(pc.vocab_size)) <= 1e-12);
    }
}

TEST_CASE("pair generators") {
    PairSetConfig pc;
    pc.count = 200;
    auto minimal = make_minimal_pairs(pc);
    REQUIRE(minimal.size() == 200);
    for (const auto& p : minimal) {
        REQUIRE(p.diff_index);
        CHECK(*p.diff_index >= static_cast<std::size_t>(pc.value_offset));
        CHECK(*p.diff_index < static_cast<std::size_t>(pc.value_offset + pc.value_slots));
        CHECK(p.y_w.size() == static_cast<std::size_t>(pc.answer_len));
        for (int t : p.y_w) CHECK((t >= 0 && t < pc.vocab_size));
    }
    CHECK(make_minimal_pairs(pc).size() == minimal.size());
    for (std::size_t i = 0; i < minimal.size(); ++i) CHECK(make_minimal_pairs(pc)[i].y_l == minimal[i].y_l);

    auto all = make_all_token_pairs(minimal, pc.vocab_size);
    REQUIRE(all.size() == minimal.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        CHECK(all[i].x == minimal[i].x);
        CHECK(all[i].y_w == minimal[i].y_w);
        for (std::size_t k = 0; k < all[i].y_w.size(); ++k) CHECK(all[i].y_w[k] != all[i].y_l[k]);
    }
}

TEST_CASE("train_toy: trajectory shape, determinism, divergence guard") {
    PairSetConfig pc;
    pc.count = 30;
    auto pairs = make_minimal_pairs(pc);
    TrainConfig tc;
    tc.steps = 15;
    tc.method = Method::Dpo;
    auto a = train_toy(pairs, pc.vocab_size, pc.answer_len, tc);
    auto b = train_toy(pairs, pc.vocab_size, pc.answer_len, tc);
    REQUIRE(a.points.size() == 16);
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].step == static_cast<int>(i));
        CHECK(a.points[i].loss == b.points[i].loss);
        CHECK(a.points[i].logp_chosen == b.points[i].logp_chosen);
    }
    // Step 0 is the reference itself.
    CHECK(a.points[0].loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(a.points.back().loss < a.points[0].loss);

    auto csv = trajectory_csv(a);
    CHECK(csv.starts_with("step,loss,grad_norm,logp_chosen,logp_rejected\n"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);

    tc.learning_rate = std::numeric_limits<double>::infinity();
    try {
        train_toy(pairs, pc.vocab_size, pc.answer_len, tc);
        FAIL("no divergence detected");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonFiniteLoss);
    }
    CHECK_THROWS_AS(train_toy({}, pc.vocab_size, pc.answer_len, TrainConfig{}), Error);
}
