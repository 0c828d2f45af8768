#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "crepe/errors.hpp"
#include "crepe/random.hpp"
#include "crepe/rope.hpp"

using namespace crepe;

TEST(Rope, FrequencyPlanSingleCoordinate) {
    const FrequencyPlan plan = make_frequency_plan(4, 1);
    ASSERT_EQ(plan.num_groups(), 1);
    ASSERT_EQ(plan.groups()[0].frequencies.size(), 2u);
    EXPECT_DOUBLE_EQ(plan.groups()[0].frequencies[0], 1.0);
    EXPECT_NEAR(plan.groups()[0].frequencies[1], 0.01, 1e-15);
}

TEST(Rope, FrequencyPlanPartition) {
    const FrequencyPlan plan = make_frequency_plan(12, 3);
    ASSERT_EQ(plan.num_groups(), 3);
    for (int g = 0; g < 3; ++g) {
        EXPECT_EQ(plan.groups()[g].channel_count(), 4);
        EXPECT_EQ(plan.groups()[g].channel_offset, 4 * g);
        EXPECT_EQ(plan.groups()[g].coordinate_index, g);
    }
    EXPECT_EQ(plan.num_pairs(), 6);
}

TEST(Rope, FrequencyPlanRejectsIndivisible) {
    EXPECT_THROW(make_frequency_plan(10, 3), ConfigError);
    EXPECT_THROW(make_frequency_plan(0, 1), ConfigError);
}

TEST(Rope, Phases) {
    const FrequencyPlan plan = make_frequency_plan(4, 1);
    const std::vector<double> zero{0.0};
    for (double p : rope_phases(plan, zero)) EXPECT_EQ(p, 0.0);
    const std::vector<double> x{3.0};
    const auto ph = rope_phases(plan, x);
    EXPECT_DOUBLE_EQ(ph[0], 3.0);
    EXPECT_NEAR(ph[1], 0.03, 1e-15);
    const std::vector<double> x2{6.0};
    const auto ph2 = rope_phases(plan, x2);
    for (std::size_t i = 0; i < ph.size(); ++i) EXPECT_DOUBLE_EQ(ph2[i], 2.0 * ph[i]);
    const std::vector<double> wrong{1.0, 2.0};
    EXPECT_THROW(rope_phases(plan, wrong), InputError);
}

TEST(Rope, ExactRotation) {
    const std::vector<double> ph{0.0, std::numbers::pi / 2};
    const auto r = exact_rotation(ph);
    EXPECT_EQ(r.pairs[0].c, 1.0);
    EXPECT_EQ(r.pairs[0].s, 0.0);
    EXPECT_NEAR(r.pairs[1].c, 0.0, 1e-16);
    EXPECT_DOUBLE_EQ(r.pairs[1].s, 1.0);
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const std::vector<double> t{rng.uniform(-100, 100)};
        EXPECT_NEAR(exact_rotation(t).pairs[0].magnitude_squared(), 1.0, 1e-15);
    }
}

TEST(Rope, ApplyCoefficients) {
    const FrequencyPlan plan = make_frequency_plan(8, 2);
    Rng rng(4);
    std::vector<double> v(8);
    for (double& x : v) x = rng.normal();

    const std::vector<Phasor> identity(4);
    EXPECT_EQ(apply_coefficients(v, identity, plan), v);

    std::vector<double> phases(4);
    for (double& p : phases) p = rng.uniform(-10, 10);
    const auto rotated = apply_coefficients(v, exact_rotation(phases), plan);
    for (int p = 0; p < 4; ++p) {
        const double before = v[2 * p] * v[2 * p] + v[2 * p + 1] * v[2 * p + 1];
        const double after = rotated[2 * p] * rotated[2 * p] + rotated[2 * p + 1] * rotated[2 * p + 1];
        EXPECT_NEAR(before, after, 1e-12);
    }

    const double m = 0.37;
    std::vector<Phasor> scaled(4);
    for (int p = 0; p < 4; ++p) scaled[p] = {m * std::cos(phases[p]), m * std::sin(phases[p])};
    const auto out = apply_coefficients(v, scaled, plan);
    for (int p = 0; p < 4; ++p) {
        const double before = std::hypot(v[2 * p], v[2 * p + 1]);
        const double after = std::hypot(out[2 * p], out[2 * p + 1]);
        EXPECT_NEAR(after, m * before, 1e-12);
    }
    const std::vector<Phasor> short_coeffs(3);
    EXPECT_THROW(apply_coefficients(v, short_coeffs, plan), InputError);
}
