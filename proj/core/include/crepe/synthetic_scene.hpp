#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "crepe/attention.hpp"
#include "crepe/camera.hpp"
#include "crepe/radial_supervision.hpp"

namespace crepe {

enum class SceneKind { point_cloud, fronto_plane, two_planes };

struct SceneSpec {
    SceneKind kind = SceneKind::fronto_plane;
    double extent = 4.0;
    int num_points = 64;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class MotionKind { orbit, dolly, pan };

struct TrajectorySpec {
    int frames = 2;
    MotionKind motion = MotionKind::dolly;
    double amplitude = 0.5;  // scene units for dolly, radians for orbit and pan
    UcmCamera camera{100.0, 100.0, 32.0, 24.0, 0.0, 64, 48};
    double orbit_radius = 4.0;

    void validate() const;
};

struct Sphere {
    Eigen::Vector3d center;
    double radius;
};

struct Plane {
    Eigen::Vector3d normal;  // unit
    double offset;           // normal . x = offset
};

// World-frame primitives of a scene, deterministic in the spec's seed.
// fronto_plane: the plane Z = extent. two_planes: that plane plus the floor Y = extent / 2.
// point_cloud: num_points spheres scattered in front of the origin.
struct Scene {
    std::vector<Plane> planes;
    std::vector<Sphere> spheres;
};

Scene build_scene(const SceneSpec& spec);

// Distance along a unit world-frame ray to the nearest hit, if any.
std::optional<double> intersect(const Scene& scene, const Eigen::Vector3d& origin, const Eigen::Vector3d& direction);

// Camera-to-world poses; frame 0 is the identity.
std::vector<RigidTransform> make_trajectory(const TrajectorySpec& spec);

// One frame of radial distances for a camera at `pose` (camera-to-world). Pixels whose ray
// misses every primitive are NaN and invalid.
RadialMap render_radial_map(const Scene& scene, const RigidTransform& pose, const UcmCamera& cam);

RadialMap render_radial_map(const SceneSpec& scene, const RigidTransform& pose, const UcmCamera& cam);

// Stacks one rendered frame per pose.
RadialMap render_sequence(const Scene& scene, const std::vector<RigidTransform>& poses, const UcmCamera& cam);

struct LayerFeatureSpec {
    int num_layers = 12;
    int d_model = 32;
    double noise = 1.0;                         // scale of the per-token noise channels
    std::optional<double> depth_weight;         // overrides the hump profile when set
    std::uint64_t seed = 0;
};

// Depth-signal weight for a layer: a Gaussian hump centred mid-stack, 1 at the peak.
double layer_depth_weight(int layer_index, int num_layers);

// Frozen per-layer features for probing. Each token mixes (weighted log target, positional
// sinusoids, noise) through a fixed random affine map. Masked tokens get a zero depth channel.
TokenBatch make_layer_features(const TokenTargets& targets, int layer_index, const LayerFeatureSpec& spec);

}  // namespace crepe
