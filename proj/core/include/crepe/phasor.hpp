#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "crepe/camera.hpp"
#include "crepe/rope.hpp"

namespace crepe {

inline constexpr double kLogRadialBound = 3.0;
inline constexpr int kDefaultBreakpoints = 5;
inline constexpr double kSmallPhaseThreshold = 1e-6;

// Log normalized radial distance z = log r ~ U(mu - |sigma|, mu + |sigma|).
struct RadialInterval {
    double mu = 0.0;
    double sigma = 0.0;  // sign kept as produced; consumers use |sigma|

    double half_width() const;
    // mu in [-3, 3] and mu +- |sigma| in [-3, 3] (with 1e-12 slack).
    bool is_clamped() const;
};

// Clip mu to [-3, 3], then cap |sigma| so that the whole interval fits. Keeps sigma's sign.
RadialInterval clamp_interval(double mu_raw, double sigma_raw);

// r_k = exp(mu - |sigma| + (k-1)/(K-1) * 2|sigma|), k = 1..K.
std::vector<double> breakpoints(const RadialInterval& interval, int num_breakpoints);

struct PathPoint {
    double u = 0.0;      // bounded image coordinate, u^2 + v^2 <= 1
    double v = 0.0;
    double range = 0.0;  // |X| in the query frame
    bool valid = true;

    double coordinate(int c) const { return c == 0 ? u : (c == 1 ? v : range); }
};

struct ProjectedPath {
    std::vector<PathPoint> points;
};

// Query-side CRePE coordinate of a query-frame point: (bounded u, bounded v, |X|).
// Invalid when xi_q == 0 and Z <= 0, or when |Z + xi_q |X|| < 1e-8 before guarding.
PathPoint query_coordinate(const UcmCamera& cam_q, const Eigen::Vector3d& point_q);

// Lift the source ray at each radius, move into the query frame, and map each point through
// query_coordinate. Throws ConfigError when fewer than two radii are given.
ProjectedPath projected_path(const UcmCamera& cam_q, const RigidTransform& source_to_query, const Ray& ray,
                             std::span<const double> radii);

// Mean of exp(i theta) over a linear phase ramp from theta_a to theta_b.
Phasor segment_phasor(double theta_a, double theta_b);

// Mean of the K-1 segment phasors. Throws ConfigError when fewer than two phases are given.
Phasor expected_phasor(std::span<const double> phases);

inline constexpr int kRaysPerPatch = 3;
inline constexpr std::array<std::array<double, 2>, kRaysPerPatch> kPatchOffsets = {{
    {0.5, 0.5},
    {0.25, 0.25},
    {0.75, 0.75},
}};

struct PatchRays {
    std::vector<Eigen::Vector2d> offsets;  // pixel coordinates of each sub-patch sample
    std::vector<Ray> rays;
};

struct TokenIndex {
    int row = 0;
    int col = 0;
};

// Token grid is (height / patch_size) x (width / patch_size). Throws InputError when
// the token lies outside the grid or patch_size < 1.
PatchRays patch_rays(const UcmCamera& cam_s, TokenIndex token, int patch_size);

struct ModulationCoefficients {
    std::vector<Phasor> pairs;  // aligned to a FrequencyPlan: one per channel pair
    int fallback_offsets = 0;   // offsets whose path had fewer than two valid points
};

// Plan with three coordinate groups per offset: for offset a, groups 3a, 3a+1, 3a+2 carry
// (u, v, range). Offsets with fewer than two valid path points get identity coefficients.
ModulationCoefficients crepe_coefficients(const UcmCamera& cam_q, const RigidTransform& source_to_query,
                                          const PatchRays& patch, const RadialInterval& interval,
                                          const FrequencyPlan& plan, int num_breakpoints = kDefaultBreakpoints);

// Plan layout expected by crepe_coefficients: 3 * rays coordinate groups of
// dim_per_coordinate channels each.
FrequencyPlan make_crepe_plan(int dim_per_coordinate, int rays_per_token = kRaysPerPatch, double base = 10000.0);

}  // namespace crepe
