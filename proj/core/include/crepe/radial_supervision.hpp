#pragma once

#include <cstdint>
#include <vector>

#include "crepe/phasor.hpp"

namespace crepe {

using Mask = std::vector<std::uint8_t>;

// frames x height x width metric radial distances, frame-major then row-major.
struct RadialMap {
    int frames = 0;
    int height = 0;
    int width = 0;
    std::vector<float> values;
    Mask source_valid;  // upstream estimator validity

    RadialMap() = default;
    RadialMap(int frames, int height, int width);

    std::size_t size() const { return values.size(); }
    std::size_t index(int frame, int row, int col) const {
        return (static_cast<std::size_t>(frame) * height + row) * width + col;
    }
    float& at(int frame, int row, int col) { return values[index(frame, row, col)]; }
    float at(int frame, int row, int col) const { return values[index(frame, row, col)]; }
};

struct TokenTargets {
    int frames = 0;
    int rows = 0;
    int cols = 0;
    std::vector<double> targets;  // normalized radial distance; meaningful where mask is set
    Mask mask;
    double near_stat = 0.1;

    std::size_t index(int frame, int row, int col) const {
        return (static_cast<std::size_t>(frame) * rows + row) * cols + col;
    }
    int tokens_per_frame() const { return rows * cols; }
    std::size_t size() const { return targets.size(); }
};

struct LossConfig {
    double alpha = 1.0;
    double lambda_rad = 1e-3;
    double s_floor_var = 1e-6;
    double s_ceiling = 10.0;
    double gate_fraction = 0.03;
    double r_max = 20.0;  // meters
};

inline constexpr double kNearStatFloor = 0.1;
inline constexpr double kNearStatPercentile = 0.05;
inline constexpr double kTokenValidFraction = 0.5;

// source_valid && finite && 0 < value <= r_max. Far values are excluded, never clipped.
Mask validity_mask(const RadialMap& map, double r_max);

// Nearest-rank 5th percentile of valid values over the clip, floored at 0.1 m.
double near_distance_stat(const RadialMap& map, const Mask& mask);

// Normalize valid pixels by near_stat and average them over each patch footprint. A token is
// valid when at least half of its pixels are. Throws ConfigError when the image size is not
// a multiple of patch_size.
TokenTargets normalize_and_pool(const RadialMap& map, const Mask& mask, double near_stat, int patch_size);

// sqrt of the variance of r under r uniform on [exp(mu - |sigma|), exp(mu + |sigma|)],
// with the variance floored at s_floor_var and s capped at s_ceiling.
double uncertainty_scale(const RadialInterval& interval, const LossConfig& config = {});

struct RadialLoss {
    double loss = 0.0;
    std::vector<double> grad_mu;     // per token, zero on masked tokens
    std::vector<double> grad_sigma;  // with respect to the signed sigma
    int valid_tokens = 0;
    bool empty = false;
};

// Mean over valid tokens of |exp(mu) - target| / s + alpha log s, with exact gradients.
// Subgradient 0 at the |.| kink and on the floor/ceiling plateaus of s.
RadialLoss radial_loss(const std::vector<RadialInterval>& intervals, const TokenTargets& targets,
                       const LossConfig& config = {});

// True when the loss applies at diffusion time t (1 = noisiest). Off iff t > 1 - gate_fraction.
// Throws InputError for t outside [0, 1].
bool timestep_gate(double t, double gate_fraction);

}  // namespace crepe
