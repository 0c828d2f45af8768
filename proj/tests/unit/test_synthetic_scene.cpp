#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "crepe/errors.hpp"
#include "crepe/harness/probe.hpp"
#include "crepe/random.hpp"
#include "crepe/synthetic_scene.hpp"

using namespace crepe;

TEST(SyntheticScene, FrontoPlaneOnAxis) {
    const UcmCamera cam(100, 100, 32.5, 24.5, 0.0, 65, 49);
    const RadialMap m = render_radial_map(SceneSpec{SceneKind::fronto_plane, 4.0, 64, 0}, RigidTransform::identity(), cam);
    EXPECT_NEAR(m.at(0, 24, 32), 4.0f, 1e-6f);
}

TEST(SyntheticScene, FrontoPlaneOffAxis) {
    const UcmCamera cam(100, 100, 32, 24, 0.0, 64, 48);
    const RadialMap m = render_radial_map(SceneSpec{SceneKind::fronto_plane, 4.0, 64, 0}, RigidTransform::identity(), cam);
    for (int r : {0, 10, 40}) {
        for (int c : {0, 20, 63}) {
            const double dz = ucm_unproject(cam, {c + 0.5, r + 0.5}).direction().z();
            EXPECT_NEAR(m.at(0, r, c), 4.0 / dz, 1e-5);
        }
    }
}

TEST(SyntheticScene, EmptyRegionIsInvalid) {
    const UcmCamera cam(100, 100, 32, 24, 0.0, 64, 48);
    // Facing away from the plane.
    const RigidTransform back(Eigen::Matrix3d(Eigen::Vector3d(-1, 1, -1).asDiagonal()), Eigen::Vector3d::Zero());
    const RadialMap m = render_radial_map(SceneSpec{SceneKind::fronto_plane, 4.0, 64, 0}, back, cam);
    for (std::size_t i = 0; i < m.size(); ++i) {
        EXPECT_TRUE(std::isnan(m.values[i]));
        EXPECT_EQ(m.source_valid[i], 0);
    }
}

TEST(SyntheticScene, Deterministic) {
    const SceneSpec spec{SceneKind::point_cloud, 4.0, 32, 9};
    const Scene a = build_scene(spec);
    const Scene b = build_scene(spec);
    ASSERT_EQ(a.spheres.size(), 32u);
    for (std::size_t i = 0; i < a.spheres.size(); ++i) EXPECT_EQ(a.spheres[i].center, b.spheres[i].center);
    TrajectorySpec t;
    t.frames = 4;
    t.motion = MotionKind::orbit;
    t.amplitude = 0.3;
    const auto poses = make_trajectory(t);
    ASSERT_EQ(poses.size(), 4u);
    EXPECT_EQ(poses[0].rotation(), Eigen::Matrix3d::Identity());
    EXPECT_EQ(poses[0].translation(), Eigen::Vector3d::Zero());
    const RadialMap m1 = render_sequence(a, poses, t.camera);
    const RadialMap m2 = render_sequence(b, poses, t.camera);
    for (std::size_t i = 0; i < m1.size(); ++i) {
        EXPECT_TRUE((std::isnan(m1.values[i]) && std::isnan(m2.values[i])) || m1.values[i] == m2.values[i]);
    }
}

TEST(SyntheticScene, HumpProfile) {
    EXPECT_DOUBLE_EQ(layer_depth_weight(0, 1), 1.0);
    for (int l = 0; l < 12; ++l) {
        EXPECT_GT(layer_depth_weight(5, 12), layer_depth_weight(0, 12));
        EXPECT_NEAR(layer_depth_weight(l, 12), layer_depth_weight(11 - l, 12), 1e-15);
    }
    EXPECT_THROW(layer_depth_weight(12, 12), InputError);
}

namespace {

struct ProbeFixture {
    TokenTargets targets;
    harness::ProbeSplit split;
};

ProbeFixture probe_fixture(bool random_targets) {
    SceneSpec scene{SceneKind::two_planes, 4.0, 64, 0};
    TrajectorySpec traj;
    traj.frames = 4;
    traj.motion = MotionKind::orbit;
    traj.amplitude = 0.3;
    traj.camera = UcmCamera(48, 48, 32, 32, 0.5, 64, 64);
    const RadialMap map = render_sequence(build_scene(scene), make_trajectory(traj), traj.camera);
    const Mask valid = validity_mask(map, 20.0);
    ProbeFixture f;
    f.targets = normalize_and_pool(map, valid, near_distance_stat(map, valid), 4);
    if (random_targets) {
        Rng rng(77);
        for (double& t : f.targets.targets) t = std::exp(rng.uniform(-0.5, 0.5));
    }
    f.split = harness::split_tokens(f.targets, 0.25, 3);
    return f;
}

}  // namespace

TEST(SyntheticScene, ZeroNoiseFullWeightIsDecodable) {
    const ProbeFixture f = probe_fixture(false);
    LayerFeatureSpec spec;
    spec.noise = 0.0;
    spec.depth_weight = 1.0;
    const TokenBatch feats = make_layer_features(f.targets, 0, spec);

    // Linear least squares on train tokens, evaluated on held-out tokens.
    std::vector<int> train;
    std::vector<int> hold;
    for (int i = 0; i < feats.size(); ++i) {
        if (f.split.train[i]) train.push_back(i);
        if (f.split.holdout[i]) hold.push_back(i);
    }
    ASSERT_GT(train.size(), static_cast<std::size_t>(feats.d_model() + 1));
    ASSERT_FALSE(hold.empty());
    Eigen::MatrixXd a(static_cast<Eigen::Index>(train.size()), feats.d_model() + 1);
    Eigen::VectorXd y(static_cast<Eigen::Index>(train.size()));
    for (std::size_t k = 0; k < train.size(); ++k) {
        a.row(static_cast<Eigen::Index>(k)) << feats.at(train[k]).transpose(), 1.0;
        y(static_cast<Eigen::Index>(k)) = std::log(f.targets.targets[static_cast<std::size_t>(train[k])]);
    }
    const Eigen::VectorXd w = a.colPivHouseholderQr().solve(y);
    double err = 0.0;
    double mean = 0.0;
    for (int i : hold) mean += std::log(f.targets.targets[static_cast<std::size_t>(i)]);
    mean /= static_cast<double>(hold.size());
    double var = 0.0;
    for (int i : hold) {
        const double t = std::log(f.targets.targets[static_cast<std::size_t>(i)]);
        Eigen::VectorXd x(feats.d_model() + 1);
        x << feats.at(i), 1.0;
        err += std::pow(x.dot(w) - t, 2);
        var += std::pow(t - mean, 2);
    }
    EXPECT_LT(err, 1e-12 * std::max(var, 1.0));

    harness::ProbeOptions opts;
    const auto r = harness::train_probe(feats, f.targets, f.split, opts, 1);
    EXPECT_GE(r.loss_reduction, 0.9);
}

TEST(SyntheticScene, ZeroWeightMatchesBaseline) {
    // Position-independent targets so that only the depth channel could carry information.
    const ProbeFixture f = probe_fixture(true);
    LayerFeatureSpec spec;
    spec.depth_weight = 0.0;
    const TokenBatch feats = make_layer_features(f.targets, 0, spec);
    harness::ProbeOptions opts;
    const auto r = harness::train_probe(feats, f.targets, f.split, opts, 1);
    EXPECT_LT(r.signal_gain, 0.05);
}

TEST(SyntheticScene, MaskedTokensCarryNoDepth) {
    const ProbeFixture f = probe_fixture(false);
    TokenTargets t = f.targets;
    LayerFeatureSpec spec;
    spec.noise = 0.0;
    spec.depth_weight = 1.0;
    const std::size_t i = 5;
    t.mask[i] = 0;
    const TokenBatch a = make_layer_features(t, 2, spec);
    t.targets[i] *= 10.0;
    const TokenBatch b = make_layer_features(t, 2, spec);
    EXPECT_EQ(a.at(static_cast<int>(i)), b.at(static_cast<int>(i)));
}
