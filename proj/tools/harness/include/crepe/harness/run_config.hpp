#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crepe/mixforcing.hpp"
#include "crepe/phasor.hpp"
#include "crepe/synthetic_scene.hpp"

namespace crepe::harness {

struct OracleSettings {
    int configs = 1000;
    long samples = 1000000;
    std::vector<int> k_list{2, 5, 129};
    int reference_k = 129;
    int low_k = 2;
    int default_k = 5;
    double tolerance = 5e-3;
    double win_fraction = 0.9;
    bool sigma_zero = false;
    double sigma_zero_tolerance = 1e-9;
};

struct GradcheckSettings {
    int head_points = 100;
    int loss_points = 100;
    int d_model = 32;
    int loss_tokens = 8;
    double step = 1e-5;
    double tolerance = 1e-4;
    double boundary_margin = 1e-3;
};

struct TrainSettings {
    int layers = 12;
    int d_model = 32;
    int steps = 2000;
    double learning_rate = 1e-2;
    double gradient_clip = 0.3;
    double noise = 1.0;
    std::optional<double> depth_weight;
    double holdout_fraction = 0.25;
    int curve_every = 100;
    SceneSpec scene{SceneKind::two_planes, 4.0, 64, 0};
    TrajectorySpec trajectory{8, MotionKind::orbit, 0.3, UcmCamera(48.0, 48.0, 32.0, 32.0, 0.5, 64, 64), 4.0};
    int patch_size = 4;
};

struct MixSimSettings {
    MixMode mode = MixMode::block_frame;
    long total_steps = 8000;
    long log_every = 100;
    int frames = 16;
    int tokens_per_frame = 64;
    double valid_fraction = 0.7;
};

// Effective configuration of one CLI invocation. Relative paths are resolved against the
// directory of the config file.
struct RunConfig {
    int k = kDefaultBreakpoints;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = ".";

    std::optional<std::filesystem::path> trajectory_path;
    TrajectorySpec trajectory_spec;
    std::optional<std::filesystem::path> rdm1_path;
    std::optional<RadialInterval> interval_override;
    double interval_sigma = kTeacherSigma;
    int patch_size = 16;
    int dim_per_coordinate = 4;
    double rope_base = 10000.0;
    double r_max = 20.0;
    int trace_source_frame = 0;
    int trace_query_frame = -1;  // negative counts from the end

    OracleSettings oracle;
    GradcheckSettings gradcheck;
    TrainSettings train;
    MixSimSettings mix;

    nlohmann::json raw;  // config document after flag overrides

    // Stable 64-bit FNV-1a hash of the canonical effective config, as 16 hex digits.
    std::string hash() const;
    void validate() const;
};

// Builds a RunConfig from a JSON document. Throws ValidationError on wrong types or values.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

// Loads the config file (if any) and applies flag overrides on top.
RunConfig load_config(const std::optional<std::filesystem::path>& config_path, std::optional<std::uint64_t> seed,
                      std::optional<int> k, std::optional<std::filesystem::path> out_dir);

}  // namespace crepe::harness
