#include <cmath>

#include <gtest/gtest.h>

#include "forgescore/fusion.hpp"
#include "test_util.hpp"

using namespace forgescore;
using forgescore::testing::random_samples;
using forgescore::testing::random_tensor;
using forgescore::testing::TempDir;

namespace {

FusionConfig small_config(Rng& rng)
{
    FusionConfig c;
    c.token_dim = 2 + rng.below(4);
    c.token_count = 2 + rng.below(3);
    c.frames = 1 + rng.below(3);
    c.fused_dim = 2 + rng.below(5);
    c.depth_feat_shape = {1, c.fused_dim, 2, 2};
    return c;
}

std::vector<double> matvec(const Tensor& m, const std::vector<double>& x)
{
    std::vector<double> y(m.dim(0), 0.0);
    for (std::size_t r = 0; r < m.dim(0); ++r)
        for (std::size_t c = 0; c < m.dim(1); ++c) y[r] += m[r * m.dim(1) + c] * x[c];
    return y;
}

// Straightforward re-evaluation of the fusion head.
std::vector<double> oracle_logits(const FusionSample& s, const FusionParams& p)
{
    const auto& t = s.tokens;
    const std::size_t C = t.channels();
    std::vector<double> avg(C, 0.0), mean(C, 0.0);
    double patch_count = 0.0, all_count = 0.0;
    for (std::size_t f = 0; f < t.frames(); ++f) {
        for (std::size_t l = 0; l < t.tokens(); ++l) {
            for (std::size_t c = 0; c < C; ++c) {
                mean[c] += t.token(f, l)[c];
                if (l > 0) avg[c] += t.token(f, l)[c];
            }
            all_count += 1.0;
            if (l > 0) patch_count += 1.0;
        }
    }
    for (auto& v : avg) v /= patch_count;
    for (auto& v : mean) v /= all_count;
    auto q = matvec(p.wq, mean);
    std::vector<double> scores;
    std::vector<std::vector<double>> values;
    for (std::size_t f = 0; f < t.frames(); ++f) {
        for (std::size_t l = 0; l < t.tokens(); ++l) {
            std::vector<double> tok(t.token(f, l).begin(), t.token(f, l).end());
            auto k = matvec(p.wk, tok);
            double d = 0.0;
            for (std::size_t c = 0; c < C; ++c) d += q[c] * k[c];
            scores.push_back(d / std::sqrt(static_cast<double>(C)));
            values.push_back(matvec(p.wv, tok));
        }
    }
    double mx = *std::max_element(scores.begin(), scores.end()), z = 0.0;
    for (auto& s2 : scores) z += std::exp(s2 - mx);
    std::vector<double> attn(C, 0.0);
    for (std::size_t j = 0; j < scores.size(); ++j)
        for (std::size_t c = 0; c < C; ++c) attn[c] += std::exp(scores[j] - mx) / z * values[j][c];
    std::vector<double> fx = avg;
    fx.insert(fx.end(), attn.begin(), attn.end());
    auto x = matvec(p.proj, fx);
    double a = 1.0 / (1.0 + std::exp(-p.alpha_raw[0]));
    std::vector<double> h(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) h[i] = a * (x[i] + p.proj_bias[i]) + (1.0 - a) * s.f_y[i];
    auto logits = matvec(p.head, h);
    for (std::size_t k = 0; k < logits.size(); ++k) logits[k] += p.head_bias[k];
    return logits;
}

}  // namespace

TEST(Pooling, ClsExcluded)
{
    TokenFeatures t(Tensor({1, 2, 2}, {9, 9, 1, 3}));
    EXPECT_EQ(pool_tokens(t), (std::vector<double>{1, 3}));
}

TEST(Pooling, ConstantTokensAndRandomOracle)
{
    TokenFeatures c(Tensor::filled({3, 4, 5}, 0.7));
    for (double v : pool_tokens(c)) EXPECT_DOUBLE_EQ(v, 0.7);

    Rng rng(1);
    TokenFeatures r(random_tensor(rng, {3, 4, 2}));
    std::vector<double> expected(2, 0.0);
    for (std::size_t f = 0; f < 3; ++f)
        for (std::size_t l = 1; l < 4; ++l)
            for (std::size_t k = 0; k < 2; ++k) expected[k] += r.token(f, l)[k] / 9.0;
    auto got = pool_tokens(r);
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(got[k], expected[k], 1e-12);
}

TEST(Attention, IdenticalTokensWithIdentityWeights)
{
    FusionConfig c;
    c.token_dim = 3;
    auto p = FusionParams::zeros(c);
    for (std::size_t i = 0; i < 3; ++i) p.wq[i * 4] = p.wk[i * 4] = p.wv[i * 4] = 1.0;
    Tensor t = Tensor::zeros({2, 4, 3});
    for (std::size_t j = 0; j < 8; ++j) {
        t[j * 3] = 0.5;
        t[j * 3 + 1] = -1.0;
        t[j * 3 + 2] = 2.0;
    }
    FusionOutput internals;
    auto out = attention_pool(TokenFeatures(t), p, &internals);
    for (double w : internals.attn_weights) EXPECT_NEAR(w, 1.0 / 8.0, 1e-15);
    EXPECT_NEAR(out[0], 0.5, 1e-15);
    EXPECT_NEAR(out[1], -1.0, 1e-15);
    EXPECT_NEAR(out[2], 2.0, 1e-15);
}

TEST(Attention, SoftmaxSaturates)
{
    FusionConfig c;
    c.token_dim = 2;
    auto p = FusionParams::zeros(c);
    // Token 1 aligns with the query far more strongly than token 0.
    TokenFeatures t(Tensor({1, 2, 2}, {0.1, 0.0, 1.0, 0.0}));
    double previous = 0.0;
    for (double scale : {1.0, 10.0, 100.0, 1000.0}) {
        p.wq[0] = p.wk[0] = scale;
        p.wv[0] = p.wv[3] = 1.0;
        auto out = attention_pool(t, p);
        EXPECT_GE(out[0], previous);
        previous = out[0];
    }
    EXPECT_NEAR(previous, 1.0, 1e-12);
}

TEST(DepthPool, HandComputed)
{
    EXPECT_EQ(depth_pool(Tensor::filled({2, 3, 2, 2}, 4.0)), (std::vector<double>{4, 4, 4}));
    std::vector<double> v(24);
    for (std::size_t i = 0; i < 24; ++i) v[i] = static_cast<double>(i);
    // Channel c averages indices {4c..4c+3} and {12+4c..12+4c+3}.
    auto got = depth_pool(Tensor({2, 3, 2, 2}, v));
    EXPECT_DOUBLE_EQ(got[0], (0 + 1 + 2 + 3 + 12 + 13 + 14 + 15) / 8.0);
    EXPECT_DOUBLE_EQ(got[1], (4 + 5 + 6 + 7 + 16 + 17 + 18 + 19) / 8.0);
    EXPECT_DOUBLE_EQ(got[2], (8 + 9 + 10 + 11 + 20 + 21 + 22 + 23) / 8.0);
}

TEST(Forward, MatchesOracle)
{
    Rng rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        auto c = small_config(rng);
        auto p = FusionParams::init(c, 100 + trial);
        p.alpha_raw[0] = rng.normal();
        for (auto& s : random_samples(c, 3, rng)) {
            auto out = forward(s.tokens, s.f_y, p);
            auto expected = oracle_logits(s, p);
            for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(out.logits[k], expected[k], 1e-10);
        }
    }
}

TEST(Forward, AlphaEndpoints)
{
    Rng rng(3);
    FusionConfig c;
    auto p = FusionParams::init(c, 1);
    auto s = random_samples(c, 1, rng)[0];
    p.alpha_raw[0] = 800.0;
    auto hi = forward(s.tokens, s.f_y, p);
    EXPECT_EQ(hi.alpha, 1.0);
    EXPECT_EQ(hi.f_hfr, hi.x_proj);
    p.alpha_raw[0] = -800.0;
    auto lo = forward(s.tokens, s.f_y, p);
    EXPECT_EQ(lo.alpha, 0.0);
    EXPECT_EQ(lo.f_hfr, s.f_y);
    p.alpha_raw[0] = 0.0;
    EXPECT_EQ(p.alpha(), 0.5);
}

TEST(Loss, Oracles)
{
    std::vector<int> label0{0};
    std::vector<double> w1{1.0}, w13{1.3};
    auto perfect = rank_weighted_loss({{1000, 0, 0, 0}}, label0, w13);
    EXPECT_EQ(perfect.per_sample[0], 0.0);
    EXPECT_EQ(perfect.total, 0.0);
    auto uniform = rank_weighted_loss({{0, 0, 0, 0}}, label0, w1);
    EXPECT_NEAR(uniform.total, 1.386294, 1e-6);
    EXPECT_NEAR(uniform.total, std::log(4.0), 1e-15);

    // Logits with per-sample losses 0.5 and 1.0: L = log(1 + 3 e^-a) for logits (a, 0, 0, 0).
    auto a_for = [](double L) { return -std::log((std::exp(L) - 1.0) / 3.0); };
    std::vector<int> labels{0, 0};
    std::vector<double> weights{1.0, 1.3};
    auto r = rank_weighted_loss({{a_for(0.5), 0, 0, 0}, {a_for(1.0), 0, 0, 0}}, labels, weights);
    EXPECT_NEAR(r.per_sample[0], 0.5, 1e-12);
    EXPECT_NEAR(r.per_sample[1], 1.0, 1e-12);
    EXPECT_NEAR(r.total, 0.9, 1e-9);
}

TEST(Loss, StableForLargeLogits)
{
    std::vector<int> label{1};
    std::vector<double> w{1.0};
    auto r = rank_weighted_loss({{1e4, -1e4, 0, 0}}, label, w);
    EXPECT_TRUE(std::isfinite(r.total));
    EXPECT_NEAR(r.total, 2e4, 1e-6);
}

TEST(Gradcheck, TwentyRandomConfigs)
{
    Rng rng(4);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        auto c = small_config(rng);
        auto p = FusionParams::init(c, 1000 + trial);
        p.alpha_raw[0] = rng.normal();
        p.for_each([&](const std::string&, Tensor& t) {
            for (std::size_t i = 0; i < t.size(); ++i) t[i] += 0.1 * rng.normal();
        });
        auto batch = random_samples(c, 1 + rng.below(4), rng);
        auto r = gradcheck(p, batch);
        worst = std::max(worst, r.max_rel_error);
        EXPECT_LT(r.max_rel_error, 1e-4) << "config " << trial << " worst " << r.worst_param << "[" << r.worst_index << "]";
    }
    RecordProperty("max_rel_error", std::to_string(worst));
}

TEST(Gradcheck, ZeroHeadOnlyHeadGradientsFlow)
{
    Rng rng(5);
    FusionConfig c;
    c.token_dim = 3;
    c.fused_dim = 4;
    c.depth_feat_shape = {1, 4, 1, 1};
    auto p = FusionParams::init(c, 9);
    p.head = Tensor::zeros(p.head.shape());
    auto batch = random_samples(c, 3, rng);
    FusionParams grad = p;
    grad.for_each([](const std::string&, Tensor& t) { t = Tensor::zeros(t.shape()); });
    loss_and_gradient(p, batch, &grad);

    double head_norm = 0.0;
    for (double g : grad.head.data()) head_norm += std::abs(g);
    EXPECT_GT(head_norm, 0.0);
    for (const Tensor* t : {&grad.wq, &grad.wk, &grad.wv, &grad.proj, &grad.proj_bias, &grad.alpha_raw}) {
        for (double g : t->data()) EXPECT_EQ(g, 0.0);
    }
    // dL/dH = mean_i w_i (p_i - y_i) f_hfr_i^T with uniform p_i = 1/4.
    std::vector<double> expected(p.head.size(), 0.0);
    for (const auto& s : batch) {
        auto out = forward(s.tokens, s.f_y, p);
        for (std::size_t k = 0; k < 4; ++k) {
            double delta = 0.25 - (static_cast<int>(k) == s.label ? 1.0 : 0.0);
            for (std::size_t d = 0; d < 4; ++d) expected[k * 4 + d] += s.weight * delta * out.f_hfr[d] / 3.0;
        }
    }
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(grad.head[i], expected[i], 1e-12);
    EXPECT_LT(gradcheck(p, batch).max_rel_error, 1e-4);
}

TEST(Gradcheck, AlphaAtMidpoint)
{
    Rng rng(6);
    FusionConfig c;
    c.token_dim = 4;
    c.fused_dim = 3;
    c.depth_feat_shape = {1, 3, 1, 1};
    auto p = FusionParams::init(c, 2);
    p.alpha_raw[0] = 0.0;
    auto batch = random_samples(c, 4, rng);
    FusionParams grad = p;
    grad.for_each([](const std::string&, Tensor& t) { t = Tensor::zeros(t.shape()); });
    loss_and_gradient(p, batch, &grad);
    const double h = 1e-5;
    auto plus = p, minus = p;
    plus.alpha_raw[0] += h;
    minus.alpha_raw[0] -= h;
    double numeric = (loss_and_gradient(plus, batch, nullptr) - loss_and_gradient(minus, batch, nullptr)) / (2 * h);
    EXPECT_NEAR(grad.alpha_raw[0], numeric, 1e-5);
}

TEST(AdamW, FirstStepClosedForm)
{
    FusionConfig c;
    c.lr = 0.1;
    c.weight_decay = 0.01;
    auto p = FusionParams::init(c, 3);
    auto grad = p;
    grad.for_each([](const std::string&, Tensor& t) {
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = (i % 2 ? 0.5 : -2.0);
    });
    auto before = p;
    AdamW opt(c, p);
    opt.step(p, grad);
    // Bias-corrected first step: m_hat/sqrt(v_hat) = sign(g).
    for (std::size_t i = 0; i < p.wq.size(); ++i) {
        double g = grad.wq[i];
        double expected = before.wq[i] - 0.1 * (g / (std::abs(g) + c.eps) + 0.01 * before.wq[i]);
        EXPECT_NEAR(p.wq[i], expected, 1e-15);
    }
    EXPECT_EQ(opt.steps(), 1u);
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged)
{
    Rng rng(7);
    FusionConfig c;
    c.lr = 0.0;
    c.epochs = 5;
    auto data = random_samples(c, 20, rng);
    auto result = train(data, {}, c);
    EXPECT_EQ(result.params, FusionParams::init(c, c.seed));
}

TEST(Train, DeterministicForSeed)
{
    Rng rng(8);
    FusionConfig c;
    c.epochs = 5;
    c.seed = 17;
    auto data = random_samples(c, 30, rng);
    std::span<const FusionSample> all(data);
    auto a = train(all.subspan(0, 24), all.subspan(24), c);
    auto b = train(all.subspan(0, 24), all.subspan(24), c);
    EXPECT_EQ(a.params, b.params);
    ASSERT_EQ(a.curve.size(), b.curve.size());
    for (std::size_t i = 0; i < a.curve.size(); ++i) EXPECT_EQ(a.curve[i].train_loss, b.curve[i].train_loss);
    c.seed = 18;
    EXPECT_FALSE(train(all.subspan(0, 24), all.subspan(24), c).params == a.params);
}

TEST(Train, NonFiniteLossIsNumericError)
{
    Rng rng(9);
    FusionConfig c;
    c.epochs = 2;
    c.lr = 1e300;
    auto data = random_samples(c, 8, rng);
    try {
        train(data, {}, c);
        FAIL() << "expected a numeric error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::numeric);
        EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
    }
}

TEST(Checkpoint, RoundTrip)
{
    TempDir dir;
    FusionConfig c;
    c.epochs = 7;
    auto p = FusionParams::init(c, 5);
    p.alpha_raw[0] = 0.3;
    save_checkpoint(dir / "ck", p, c, {{"note", "x"}});
    FusionConfig back;
    auto q = load_checkpoint(dir / "ck", &back);
    EXPECT_EQ(q, p);
    EXPECT_EQ(to_json(back), to_json(c));
    EXPECT_THROW(load_checkpoint(dir / "missing"), Error);
}

TEST(Config, PaperScaleDimensions)
{
    auto c = FusionConfig::paper_scale();
    EXPECT_EQ(c.token_dim, 1408u);
    EXPECT_EQ(c.fused_dim, 1024u);
    EXPECT_EQ(c.frames, 8u);
    EXPECT_EQ(c.lr, 2e-5);
    EXPECT_EQ(c.epochs, 100u);
    EXPECT_NO_THROW(c.validate());
    FusionConfig bad;
    bad.depth_feat_shape = {2, 31, 4, 4};
    EXPECT_THROW(bad.validate(), Error);
}
