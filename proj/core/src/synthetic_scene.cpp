#include "crepe/synthetic_scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

#include "crepe/errors.hpp"
#include "crepe/random.hpp"

namespace crepe {

void SceneSpec::validate() const {
    if (!(extent > 0.0) || !std::isfinite(extent)) {
        throw InputError("SceneSpec: extent must be positive");
    }
    if (num_points < 1) {
        throw InputError("SceneSpec: num_points must be at least 1");
    }
}

void TrajectorySpec::validate() const {
    if (frames < 1) {
        throw InputError("TrajectorySpec: frames must be at least 1");
    }
    if (!std::isfinite(amplitude)) {
        throw InputError("TrajectorySpec: amplitude must be finite");
    }
    if (motion == MotionKind::orbit && !(orbit_radius > 0.0)) {
        throw InputError("TrajectorySpec: orbit radius must be positive");
    }
}

Scene build_scene(const SceneSpec& spec) {
    spec.validate();
    Scene scene;
    switch (spec.kind) {
        case SceneKind::two_planes:
            scene.planes.push_back({Eigen::Vector3d::UnitY(), 0.5 * spec.extent});
            [[fallthrough]];
        case SceneKind::fronto_plane:
            scene.planes.push_back({Eigen::Vector3d::UnitZ(), spec.extent});
            break;
        case SceneKind::point_cloud: {
            Rng rng(spec.seed);
            const double radius = 0.08 * spec.extent;
            for (int i = 0; i < spec.num_points; ++i) {
                const double x = rng.uniform(-0.5, 0.5) * spec.extent;
                const double y = rng.uniform(-0.5, 0.5) * spec.extent;
                const double z = rng.uniform(0.5, 1.5) * spec.extent;
                scene.spheres.push_back({Eigen::Vector3d(x, y, z), radius});
            }
            break;
        }
    }
    return scene;
}

std::optional<double> intersect(const Scene& scene, const Eigen::Vector3d& origin, const Eigen::Vector3d& direction) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& plane : scene.planes) {
        const double denom = plane.normal.dot(direction);
        if (std::abs(denom) < 1e-12) {
            continue;
        }
        const double t = (plane.offset - plane.normal.dot(origin)) / denom;
        if (t > 0.0 && t < best) {
            best = t;
        }
    }
    for (const auto& sphere : scene.spheres) {
        const Eigen::Vector3d oc = origin - sphere.center;
        const double b = oc.dot(direction);
        const double c = oc.squaredNorm() - sphere.radius * sphere.radius;
        const double disc = b * b - c;
        if (disc < 0.0) {
            continue;
        }
        const double root = std::sqrt(disc);
        for (double t : {-b - root, -b + root}) {
            if (t > 0.0 && t < best) {
                best = t;
                break;
            }
        }
    }
    if (!std::isfinite(best)) {
        return std::nullopt;
    }
    return best;
}

namespace {

Eigen::Matrix3d yaw(double angle) { return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitY()).toRotationMatrix(); }

}  // namespace

std::vector<RigidTransform> make_trajectory(const TrajectorySpec& spec) {
    spec.validate();
    std::vector<RigidTransform> poses;
    poses.reserve(static_cast<std::size_t>(spec.frames));
    for (int k = 0; k < spec.frames; ++k) {
        const double t = spec.frames > 1 ? static_cast<double>(k) / (spec.frames - 1) : 0.0;
        switch (spec.motion) {
            case MotionKind::dolly:
                poses.emplace_back(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.0, 0.0, spec.amplitude * t));
                break;
            case MotionKind::pan:
                poses.emplace_back(yaw(spec.amplitude * t), Eigen::Vector3d::Zero());
                break;
            case MotionKind::orbit: {
                // Circle around a pivot straight ahead of the first camera, always facing it.
                const Eigen::Vector3d pivot(0.0, 0.0, spec.orbit_radius);
                const Eigen::Matrix3d r = yaw(spec.amplitude * t);
                poses.emplace_back(r, pivot + r * Eigen::Vector3d(0.0, 0.0, -spec.orbit_radius));
                break;
            }
        }
    }
    return poses;
}

RadialMap render_radial_map(const Scene& scene, const RigidTransform& pose, const UcmCamera& cam) {
    RadialMap map(1, cam.height(), cam.width());
    const float nan = std::numeric_limits<float>::quiet_NaN();
    for (int row = 0; row < cam.height(); ++row) {
        for (int col = 0; col < cam.width(); ++col) {
            const Ray ray = ucm_unproject(cam, Eigen::Vector2d(col + 0.5, row + 0.5));
            const auto hit = intersect(scene, pose.translation(), pose.rotation() * ray.direction());
            const std::size_t i = map.index(0, row, col);
            map.values[i] = hit ? static_cast<float>(*hit) : nan;
            map.source_valid[i] = hit ? 1 : 0;
        }
    }
    return map;
}

RadialMap render_radial_map(const SceneSpec& scene, const RigidTransform& pose, const UcmCamera& cam) {
    return render_radial_map(build_scene(scene), pose, cam);
}

RadialMap render_sequence(const Scene& scene, const std::vector<RigidTransform>& poses, const UcmCamera& cam) {
    if (poses.empty()) {
        throw InputError("render_sequence: need at least one pose");
    }
    RadialMap out(static_cast<int>(poses.size()), cam.height(), cam.width());
    const std::size_t per_frame = static_cast<std::size_t>(cam.height()) * cam.width();
    for (std::size_t f = 0; f < poses.size(); ++f) {
        const RadialMap frame = render_radial_map(scene, poses[f], cam);
        std::copy(frame.values.begin(), frame.values.end(), out.values.begin() + static_cast<std::ptrdiff_t>(f * per_frame));
        std::copy(frame.source_valid.begin(), frame.source_valid.end(),
                  out.source_valid.begin() + static_cast<std::ptrdiff_t>(f * per_frame));
    }
    return out;
}

double layer_depth_weight(int layer_index, int num_layers) {
    if (num_layers < 1 || layer_index < 0 || layer_index >= num_layers) {
        throw InputError("layer_depth_weight: layer index out of range");
    }
    const double center = 0.5 * (num_layers - 1);
    const double width = std::max(0.2 * num_layers, 0.5);
    const double d = (layer_index - center) / width;
    return std::exp(-d * d);
}

namespace {

constexpr int kPositionalChannels = 8;

}  // namespace

TokenBatch make_layer_features(const TokenTargets& targets, int layer_index, const LayerFeatureSpec& spec) {
    const double weight = spec.depth_weight ? *spec.depth_weight : layer_depth_weight(layer_index, spec.num_layers);
    if (spec.num_layers < 1 || layer_index < 0 || layer_index >= spec.num_layers) {
        throw InputError("make_layer_features: layer index out of range");
    }
    if (targets.frames < 1 || targets.rows < 1 || targets.cols < 1) {
        throw InputError("make_layer_features: empty token grid");
    }

    // Standardized log target over valid tokens.
    double mean = 0.0;
    double sq = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets.mask[i] != 0) {
            const double t = std::log(targets.targets[i]);
            mean += t;
            sq += t * t;
            ++n;
        }
    }
    mean = n > 0 ? mean / n : 0.0;
    const double var = n > 0 ? sq / n - mean * mean : 0.0;
    const double scale = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;

    const int inputs = 1 + kPositionalChannels;
    Rng mix_rng(mix_seed(spec.seed, static_cast<std::uint64_t>(layer_index)));
    Eigen::MatrixXd mix(spec.d_model, inputs);
    for (int j = 0; j < inputs; ++j) {
        for (int i = 0; i < spec.d_model; ++i) {
            mix(i, j) = mix_rng.normal();
        }
    }
    Eigen::VectorXd bias(spec.d_model);
    for (int i = 0; i < spec.d_model; ++i) {
        bias(i) = 2.0 * mix_rng.normal();
    }
    Rng noise_rng(mix_seed(spec.seed, 0x6e6f697365ULL + static_cast<std::uint64_t>(layer_index)));

    TokenBatch batch(targets.frames, targets.tokens_per_frame(), spec.d_model);
    Eigen::VectorXd z(inputs);
    for (int f = 0; f < targets.frames; ++f) {
        for (int r = 0; r < targets.rows; ++r) {
            for (int c = 0; c < targets.cols; ++c) {
                const std::size_t i = targets.index(f, r, c);
                z(0) = targets.mask[i] != 0 ? weight * (std::log(targets.targets[i]) - mean) * scale : 0.0;
                const double pr = std::numbers::pi * (r + 0.5) / targets.rows;
                const double pc = std::numbers::pi * (c + 0.5) / targets.cols;
                for (int k = 0; k < 2; ++k) {
                    z(1 + 4 * k) = std::sin((k + 1) * pr);
                    z(2 + 4 * k) = std::cos((k + 1) * pr);
                    z(3 + 4 * k) = std::sin((k + 1) * pc);
                    z(4 + 4 * k) = std::cos((k + 1) * pc);
                }
                Eigen::VectorXd feature = mix * z + bias;
                for (int d = 0; d < spec.d_model; ++d) {
                    feature(d) += spec.noise * noise_rng.normal();
                }
                batch.at(f, r * targets.cols + c) = feature;
            }
        }
    }
    return batch;
}

}  // namespace crepe
