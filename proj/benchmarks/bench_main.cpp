#include <benchmark/benchmark.h>

#include <Eigen/Geometry>

#include "crepe/attention.hpp"
#include "crepe/camera.hpp"
#include "crepe/phasor.hpp"
#include "crepe/random.hpp"

using namespace crepe;

static void BM_SegmentPhasor(benchmark::State& state) {
    double a = 0.3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(segment_phasor(a, a + 0.7));
        a += 1e-9;
    }
}
BENCHMARK(BM_SegmentPhasor);

static void BM_UcmUnproject(benchmark::State& state) {
    const UcmCamera cam(60, 60, 32, 24, 0.8, 64, 48);
    Eigen::Vector2d px(10.5, 7.5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ucm_unproject(cam, px));
        px.x() += 1e-6;
    }
}
BENCHMARK(BM_UcmUnproject);

static void BM_CrepeCoefficients(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    const UcmCamera cam(60, 60, 32, 32, 0.8, 64, 64);
    const RigidTransform t(Eigen::AngleAxisd(0.2, Eigen::Vector3d::UnitY()).toRotationMatrix(), {0.1, 0.0, 0.05});
    const PatchRays patch = patch_rays(cam, {1, 2}, 16);
    const FrequencyPlan plan = make_crepe_plan(4);
    const RadialInterval iv{0.5, 0.8};
    for (auto _ : state) {
        benchmark::DoNotOptimize(crepe_coefficients(cam, t, patch, iv, plan, k));
    }
}
BENCHMARK(BM_CrepeCoefficients)->Arg(2)->Arg(5)->Arg(17);

static void BM_AttentionForward(benchmark::State& state) {
    const int frames = 4;
    const int patches = static_cast<int>(state.range(0));
    const int d = 64;
    const FrequencyPlan plan = make_crepe_plan(4);
    const AttentionParams params = attention_init(d, plan.total_dim(), 1);
    Rng rng(2);
    TokenBatch batch(frames, patches, d);
    KeyCoefficientTable table(frames, patches);
    for (int f = 0; f < frames; ++f) {
        for (int p = 0; p < patches; ++p) {
            Eigen::VectorXd x(d);
            for (int j = 0; j < d; ++j) x(j) = rng.normal();
            batch.at(f, p) = x;
            for (int q = 0; q < frames; ++q) {
                ModulationCoefficients m;
                for (int j = 0; j < plan.num_pairs(); ++j) m.pairs.push_back({0.6, 0.3});
                table.set(q, f, p, m);
            }
        }
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(attention_forward(params, batch, table, plan));
    }
}
BENCHMARK(BM_AttentionForward)->Arg(16)->Arg(64);
BENCHMARK_MAIN();
