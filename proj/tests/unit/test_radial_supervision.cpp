#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "crepe/errors.hpp"
#include "crepe/harness/gradcheck.hpp"
#include "crepe/radial_supervision.hpp"
#include "crepe/random.hpp"

using namespace crepe;

namespace {

RadialMap constant_map(int frames, int h, int w, float value) {
    RadialMap m(frames, h, w);
    std::fill(m.values.begin(), m.values.end(), value);
    return m;
}

TokenTargets single_target(double r) {
    TokenTargets t;
    t.frames = t.rows = t.cols = 1;
    t.targets = {r};
    t.mask = {1};
    return t;
}

}  // namespace

TEST(RadialSupervision, ValidityExamples) {
    RadialMap m(1, 1, 6);
    const float vals[] = {25.0f, std::numeric_limits<float>::quiet_NaN(), 5.0f, 0.0f, -1.0f, 20.0f};
    for (int i = 0; i < 6; ++i) m.values[i] = vals[i];
    const Mask mask = validity_mask(m, 20.0);
    const Mask expected = {0, 0, 1, 0, 0, 1};
    EXPECT_EQ(mask, expected);
    m.source_valid[2] = 0;
    EXPECT_EQ(validity_mask(m, 20.0)[2], 0);
}

TEST(RadialSupervision, NearStat) {
    RadialMap bad(1, 1, 3);
    std::fill(bad.values.begin(), bad.values.end(), std::numeric_limits<float>::quiet_NaN());
    EXPECT_EQ(near_distance_stat(bad, validity_mask(bad, 20)), 0.1);

    RadialMap hundred(1, 10, 10);
    for (int i = 0; i < 100; ++i) hundred.values[i] = static_cast<float>(100 - i);
    EXPECT_EQ(near_distance_stat(hundred, Mask(100, 1)), 5.0);

    const RadialMap four = constant_map(2, 4, 4, 4.0f);
    EXPECT_EQ(near_distance_stat(four, validity_mask(four, 20)), 4.0);

    const RadialMap tiny = constant_map(1, 2, 2, 0.01f);
    EXPECT_EQ(near_distance_stat(tiny, validity_mask(tiny, 20)), 0.1);
}

TEST(RadialSupervision, PoolConstant) {
    const RadialMap m = constant_map(2, 8, 8, 8.0f);
    const TokenTargets t = normalize_and_pool(m, validity_mask(m, 20), 2.0, 4);
    EXPECT_EQ(t.rows, 2);
    EXPECT_EQ(t.cols, 2);
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_EQ(t.targets[i], 4.0);
        EXPECT_EQ(t.mask[i], 1);
    }
}

TEST(RadialSupervision, PoolThreshold) {
    const RadialMap m = constant_map(1, 5, 2, 6.0f);
    EXPECT_THROW(normalize_and_pool(m, Mask(10, 1), 3.0, 5), ConfigError);

    RadialMap sq = constant_map(1, 10, 10, 6.0f);
    Mask forty(100, 0);
    for (int i = 0; i < 40; ++i) forty[i] = 1;
    EXPECT_EQ(normalize_and_pool(sq, forty, 3.0, 10).mask[0], 0);

    RadialMap cb = constant_map(1, 4, 4, 6.0f);
    Mask checker(16, 0);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            checker[r * 4 + c] = (r + c) % 2 == 0 ? 1 : 0;
            if (checker[r * 4 + c] == 0) cb.values[r * 4 + c] = 1000.0f;
        }
    const TokenTargets t = normalize_and_pool(cb, checker, 3.0, 4);
    EXPECT_EQ(t.mask[0], 1);
    EXPECT_EQ(t.targets[0], 2.0);
}

TEST(RadialSupervision, AdversarialValuesNeverEnterTargets) {
    const float bad[] = {std::numeric_limits<float>::quiet_NaN(), std::numeric_limits<float>::infinity(), 0.0f, -1.0f,
                         20.0001f, 25.0f};
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        RadialMap m(2, 8, 8);
        for (std::size_t i = 0; i < m.size(); ++i) {
            m.values[i] = rng.bernoulli(0.5) ? bad[static_cast<int>(rng.uniform() * 6) % 6]
                                             : static_cast<float>(rng.uniform(0.5, 20.0));
        }
        const Mask mask = validity_mask(m, 20.0);
        const double near = near_distance_stat(m, mask);
        const TokenTargets t = normalize_and_pool(m, mask, near, 4);
        double max_valid = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (mask[i]) max_valid = std::max(max_valid, static_cast<double>(m.values[i]));
            EXPECT_EQ(mask[i] != 0, std::isfinite(m.values[i]) && m.values[i] > 0.0f && m.values[i] <= 20.0f);
        }
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (!t.mask[i]) continue;
            EXPECT_TRUE(std::isfinite(t.targets[i]));
            EXPECT_GT(t.targets[i], 0.0);
            EXPECT_LE(t.targets[i] * near, max_valid * (1 + 1e-12));
        }
    }
}

TEST(RadialSupervision, UncertaintyScale) {
    EXPECT_EQ(uncertainty_scale({0.0, 0.0}), 1e-3);
    EXPECT_NEAR(uncertainty_scale({0.0, 3.0}), std::sinh(3.0) / std::sqrt(3.0), 1e-9);
    EXPECT_NEAR(uncertainty_scale({0.0, 3.0}), 5.784, 1e-3);
    // Clamped intervals stay below the ceiling; wider raw intervals hit it.
    EXPECT_EQ(uncertainty_scale({3.0, 2.0}), 10.0);
    Rng rng(5);
    for (int i = 0; i < 10000; ++i) {
        const RadialInterval iv = clamp_interval(rng.uniform(-4, 4), rng.uniform(-4, 4));
        const double s = uncertainty_scale(iv);
        EXPECT_LE(s, 10.0);
        EXPECT_GE(s, 1e-3);
    }
}

TEST(RadialSupervision, LossExamples) {
    const RadialLoss perfect = radial_loss({{0.0, 0.0}}, single_target(1.0));
    EXPECT_NEAR(perfect.loss, std::log(1e-3), 1e-12);
    EXPECT_NEAR(perfect.loss, -6.9078, 1e-4);
    const RadialLoss off = radial_loss({{0.0, 0.0}}, single_target(2.0));
    EXPECT_NEAR(off.loss, 1000.0 + std::log(1e-3), 1e-9);
    EXPECT_NEAR(off.loss, 993.0922, 1e-4);
}

TEST(RadialSupervision, LossEmptyAndMasked) {
    TokenTargets t = single_target(2.0);
    t.mask = {0};
    const RadialLoss l = radial_loss({{0.5, 1.0}}, t);
    EXPECT_TRUE(l.empty);
    EXPECT_EQ(l.loss, 0.0);
    EXPECT_EQ(l.grad_mu[0], 0.0);
    EXPECT_EQ(l.grad_sigma[0], 0.0);
    EXPECT_THROW(radial_loss({{0.0, 0.0}, {0.0, 0.0}}, single_target(1.0)), InputError);
}

TEST(RadialSupervision, LossFiniteDifferences) {
    harness::GradcheckOptions opts;
    const auto report = harness::check_loss_gradients(opts, 123);
    EXPECT_TRUE(report.pass);
    EXPECT_GE(report.checked, 100);
    EXPECT_EQ(report.flagged, 1);
    EXPECT_LT(report.max_relative_error, 1e-4);
}

TEST(RadialSupervision, PlateauGradients) {
    // Floor: sigma = 0 keeps s at 1e-3, so sigma receives no gradient.
    const RadialLoss floor = radial_loss({{0.2, 0.0}}, single_target(2.0));
    EXPECT_EQ(floor.grad_sigma[0], 0.0);
    // Ceiling: s = 10 is flat in both mu and sigma; only the data term moves mu.
    const RadialLoss ceil = radial_loss({{3.0, 2.0}}, single_target(1.0));
    EXPECT_EQ(ceil.grad_sigma[0], 0.0);
    EXPECT_NEAR(ceil.grad_mu[0], std::exp(3.0) / 10.0, 1e-12);
}

TEST(RadialSupervision, TimestepGate) {
    EXPECT_FALSE(timestep_gate(0.99, 0.03));
    EXPECT_TRUE(timestep_gate(0.5, 0.03));
    EXPECT_TRUE(timestep_gate(0.97, 0.03));
    EXPECT_TRUE(timestep_gate(0.0, 0.03));
    EXPECT_FALSE(timestep_gate(1.0, 0.03));
    EXPECT_THROW(timestep_gate(1.5, 0.03), InputError);
    EXPECT_THROW(timestep_gate(-0.1, 0.03), InputError);
}
