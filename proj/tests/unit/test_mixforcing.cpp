#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "crepe/errors.hpp"
#include "crepe/mixforcing.hpp"

using namespace crepe;

TEST(MixForcing, ScheduleValues) {
    const MixSchedule bf = MixSchedule::for_mode(MixMode::block_frame);
    const MixSchedule vid = MixSchedule::for_mode(MixMode::video);
    EXPECT_EQ(bf.floor, 0.1);
    EXPECT_EQ(vid.floor, 0.5);
    for (const MixSchedule& s : {bf, vid}) {
        EXPECT_EQ(substitution_probability(s, 0), 1.0);
        EXPECT_EQ(substitution_probability(s, 1000), 1.0);
        EXPECT_EQ(substitution_probability(s, 7000), s.floor);
        EXPECT_EQ(substitution_probability(s, 8000), s.floor);
    }
    EXPECT_EQ(substitution_probability(bf, 4000), 0.55);
    EXPECT_EQ(substitution_probability(vid, 4000), 0.75);
}

TEST(MixForcing, ScheduleMonotoneAndBounded) {
    for (MixMode mode : {MixMode::block_frame, MixMode::video}) {
        const MixSchedule s = MixSchedule::for_mode(mode);
        double prev = 1.0;
        for (long step = 0; step <= 9000; ++step) {
            const double p = substitution_probability(s, step);
            EXPECT_LE(p, prev);
            EXPECT_LE(prev - p, (1.0 - s.floor) / 6000.0 + 1e-15);
            EXPECT_GE(p, s.floor);
            EXPECT_LE(p, 1.0);
            prev = p;
        }
    }
}

TEST(MixForcing, SampleMask) {
    for (auto v : sample_mask(1.0, 1000, 3)) EXPECT_EQ(v, 1);
    for (auto v : sample_mask(0.0, 1000, 3)) EXPECT_EQ(v, 0);
    const auto half = sample_mask(0.5, 100000, 11);
    double mean = 0.0;
    for (auto v : half) mean += v;
    mean /= half.size();
    EXPECT_GE(mean, 0.494);
    EXPECT_LE(mean, 0.506);
    EXPECT_EQ(sample_mask(0.3, 500, 8), sample_mask(0.3, 500, 8));
    EXPECT_THROW(sample_mask(1.5, 10, 1), InputError);
}

TEST(MixForcing, TruthTable) {
    const RadialInterval pred{0.4, 1.2};
    for (int m = 0; m < 2; ++m) {
        for (int v = 0; v < 2; ++v) {
            const RadialInterval out =
                effective_interval(pred, v ? std::optional<double>(2.0) : std::nullopt, m != 0, v != 0);
            if (m && v) {
                EXPECT_NEAR(out.mu, std::log(2.0), 1e-15);
                EXPECT_EQ(out.sigma, 0.1);
            } else {
                EXPECT_EQ(out.mu, pred.mu);
                EXPECT_EQ(out.sigma, pred.sigma);
            }
        }
    }
    EXPECT_THROW(effective_interval(pred, std::nullopt, true, true), InputError);
    EXPECT_THROW(effective_interval(pred, -1.0, true, true), InputError);
    EXPECT_THROW(effective_interval(pred, std::numeric_limits<double>::quiet_NaN(), false, true), InputError);
    // Invalid rays keep the prediction even when a bogus target is supplied.
    const RadialInterval kept = effective_interval(pred, 5.0, true, false);
    EXPECT_EQ(kept.mu, pred.mu);
    const RadialInterval far = effective_interval(pred, std::exp(10.0), true, true);
    EXPECT_TRUE(far.is_clamped());
}

TEST(MixForcing, StateSharesMask) {
    const MixSchedule s = MixSchedule::for_mode(MixMode::block_frame);
    const MixForcingState a(s, 4000, 8, 42);
    const MixForcingState b(s, 4000, 8, 42);
    EXPECT_EQ(a.mask(), b.mask());
    EXPECT_EQ(a.mask().size(), 8u);
    for (int f = 0; f < 8; ++f) EXPECT_EQ(a.substitute(f), a.substitute(f));
    const MixForcingState v(MixSchedule::for_mode(MixMode::video), 4000, 8, 42);
    EXPECT_EQ(v.mask().size(), 1u);
    for (int f = 1; f < 8; ++f) EXPECT_EQ(v.substitute(f), v.substitute(0));
    EXPECT_DOUBLE_EQ(a.probability(), 0.55);
}

TEST(MixForcing, ExternalOverride) {
    const int frames = 1, h = 8, w = 8, patch = 4;
    const std::vector<RadialInterval> pred(4, RadialInterval{0.2, 0.9});

    RadialMap full(frames, h, w);
    std::fill(full.values.begin(), full.values.end(), 6.0f);
    for (const auto& iv : external_override(pred, full, 3.0, 20.0, patch)) {
        EXPECT_NEAR(iv.mu, std::log(2.0), 1e-12);
        EXPECT_EQ(iv.sigma, kTeacherSigma);
    }

    RadialMap none(frames, h, w);
    std::fill(none.values.begin(), none.values.end(), std::numeric_limits<float>::quiet_NaN());
    const auto kept = external_override(pred, none, 3.0, 20.0, patch);
    for (std::size_t i = 0; i < kept.size(); ++i) {
        EXPECT_EQ(kept[i].mu, pred[i].mu);
        EXPECT_EQ(kept[i].sigma, pred[i].sigma);
    }

    RadialMap half = full;
    for (int r = 0; r < h; ++r)
        for (int c = w / 2; c < w; ++c) half.at(0, r, c) = 25.0f;
    const auto mixed = external_override(pred, half, 3.0, 20.0, patch);
    EXPECT_EQ(mixed[0].sigma, kTeacherSigma);
    EXPECT_EQ(mixed[1].sigma, pred[1].sigma);
    EXPECT_EQ(mixed[2].sigma, kTeacherSigma);
    EXPECT_EQ(mixed[3].sigma, pred[3].sigma);
}

TEST(MixForcing, ZeroValidityNeverSubstitutes) {
    const MixSchedule s = MixSchedule::for_mode(MixMode::video);
    const RadialInterval pred{0.0, 3.0};
    for (long step = 0; step <= 8000; step += 500) {
        const MixForcingState st(s, step, 4, 7);
        for (int f = 0; f < 4; ++f) {
            const RadialInterval out = effective_interval(pred, std::nullopt, st.substitute(f), false);
            EXPECT_EQ(out.mu, pred.mu);
            EXPECT_EQ(out.sigma, pred.sigma);
        }
    }
}
