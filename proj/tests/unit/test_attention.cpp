#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "crepe/attention.hpp"
#include "crepe/errors.hpp"
#include "crepe/random.hpp"

using namespace crepe;

namespace {

TokenBatch random_batch(int frames, int patches, int d, std::uint64_t seed) {
    Rng rng(seed);
    TokenBatch b(frames, patches, d);
    for (int f = 0; f < frames; ++f) {
        for (int p = 0; p < patches; ++p) {
            Eigen::VectorXd x(d);
            for (int i = 0; i < d; ++i) x(i) = rng.normal();
            b.at(f, p) = x;
        }
    }
    return b;
}

KeyCoefficientTable random_table(int frames, int patches, int pairs, std::uint64_t seed) {
    Rng rng(seed);
    KeyCoefficientTable t(frames, patches);
    for (int q = 0; q < frames; ++q) {
        for (int s = 0; s < frames; ++s) {
            for (int p = 0; p < patches; ++p) {
                ModulationCoefficients m;
                for (int i = 0; i < pairs; ++i) {
                    const double a = rng.uniform(0, 6.3);
                    const double r = rng.uniform();
                    m.pairs.push_back({r * std::cos(a), r * std::sin(a)});
                }
                t.set(q, s, p, m);
            }
        }
    }
    return t;
}

KeyCoefficientTable identity_table(int frames, int patches, int pairs) {
    KeyCoefficientTable t(frames, patches);
    for (int q = 0; q < frames; ++q)
        for (int s = 0; s < frames; ++s)
            for (int p = 0; p < patches; ++p) t.set(q, s, p, ModulationCoefficients{std::vector<Phasor>(pairs), 0});
    return t;
}

}  // namespace

TEST(Attention, ZeroInitResidualIsExact) {
    const FrequencyPlan plan = make_crepe_plan(4);
    const AttentionParams params = attention_init(24, plan.total_dim(), 3);
    EXPECT_EQ(params.wo.norm(), 0.0);
    const TokenBatch batch = random_batch(3, 4, 24, 5);
    const TokenBatch out = attention_forward(params, batch, random_table(3, 4, plan.num_pairs(), 9), plan);
    for (int i = 0; i < batch.size(); ++i) EXPECT_EQ(out.at(i), batch.at(i));
}

TEST(Attention, UniformWeightsForEqualKeys) {
    const FrequencyPlan plan = make_crepe_plan(4);
    const AttentionParams params = attention_init(16, plan.total_dim(), 3);
    TokenBatch batch(2, 3, 16);
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(16, -1, 2);
    for (int f = 0; f < 2; ++f)
        for (int p = 0; p < 3; ++p) batch.at(f, p) = x;
    const auto table = identity_table(2, 3, plan.num_pairs());
    const Eigen::VectorXd a = softmax(attention_logits(params, batch, table, plan, 1, 2));
    for (int j = 0; j < a.size(); ++j) EXPECT_NEAR(a(j), 1.0 / 6.0, 1e-15);
}

TEST(Attention, SingleToken) {
    const FrequencyPlan plan = make_crepe_plan(2, 1);
    AttentionParams params = attention_init(8, plan.total_dim(), 4);
    Rng rng(2);
    for (int i = 0; i < params.wo.rows(); ++i)
        for (int j = 0; j < params.wo.cols(); ++j) params.wo(i, j) = rng.normal();
    const TokenBatch batch = random_batch(1, 1, 8, 3);
    const TokenBatch out = attention_forward(params, batch, random_table(1, 1, plan.num_pairs(), 1), plan);
    const Eigen::VectorXd expected = batch.at(0) + params.wo.transpose() * (params.wv.transpose() * batch.at(0));
    EXPECT_NEAR((out.at(0) - expected).norm(), 0.0, 1e-12);
}

TEST(Attention, SoftmaxRowsSumToOne) {
    Rng rng(6);
    for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd l(10);
        for (int j = 0; j < 10; ++j) l(j) = rng.uniform(-500, 500);
        const Eigen::VectorXd a = softmax(l);
        EXPECT_NEAR(a.sum(), 1.0, 1e-9);
        EXPECT_TRUE(a.allFinite());
    }
}

TEST(Attention, ModulateKey) {
    const FrequencyPlan plan = make_crepe_plan(4);
    Rng rng(8);
    Eigen::VectorXd k(plan.total_dim());
    for (int i = 0; i < k.size(); ++i) k(i) = rng.normal();
    const std::vector<Phasor> id(static_cast<std::size_t>(plan.num_pairs()));
    EXPECT_EQ(modulate_key(k, id, plan), k);

    std::vector<Phasor> unit(id.size());
    for (auto& p : unit) {
        const double a = rng.uniform(0, 6.3);
        p = {std::cos(a), std::sin(a)};
    }
    EXPECT_NEAR(modulate_key(k, unit, plan).norm(), k.norm(), 1e-12);

    std::vector<Phasor> zeroed = id;
    const std::vector<double> ends{0.0, 2.0 * std::numbers::pi};
    zeroed[3] = expected_phasor(ends);
    const Eigen::VectorXd z = modulate_key(k, zeroed, plan);
    EXPECT_NEAR(z(6), 0.0, 1e-15);
    EXPECT_NEAR(z(7), 0.0, 1e-15);
    EXPECT_THROW(modulate_key(k.head(4), id, plan), InputError);
}

TEST(Attention, MissingCoefficients) {
    const FrequencyPlan plan = make_crepe_plan(4);
    const AttentionParams params = attention_init(16, plan.total_dim(), 3);
    KeyCoefficientTable table = identity_table(2, 2, plan.num_pairs());
    KeyCoefficientTable partial(2, 2);
    partial.set(0, 0, 0, table.get(0, 0, 0));
    EXPECT_FALSE(partial.has(1, 1, 1));
    EXPECT_THROW(partial.get(1, 1, 1), InputError);
    EXPECT_THROW(attention_forward(params, random_batch(2, 2, 16, 1), partial, plan), InputError);
}

TEST(Attention, RelativePoseShiftsLogits) {
    // Coefficients change the logits only through the modulated keys.
    const FrequencyPlan plan = make_crepe_plan(4);
    const AttentionParams params = attention_init(16, plan.total_dim(), 3);
    const TokenBatch batch = random_batch(2, 2, 16, 4);
    const Eigen::VectorXd base = attention_logits(params, batch, identity_table(2, 2, plan.num_pairs()), plan, 0, 0);
    const Eigen::VectorXd mod = attention_logits(params, batch, random_table(2, 2, plan.num_pairs(), 3), plan, 0, 0);
    EXPECT_GT((base - mod).norm(), 1e-6);
}
