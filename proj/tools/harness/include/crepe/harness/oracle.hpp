#pragma once

#include <cstdint>
#include <vector>

#include "crepe/camera.hpp"
#include "crepe/phasor.hpp"
#include "crepe/rope.hpp"

namespace crepe::harness {

// One scalar expected-phasor problem: a source ray, its log-radial interval, the query camera
// and relative pose, and a single (coordinate, frequency) channel.
struct PhasorProblem {
    UcmCamera cam_s;
    UcmCamera cam_q;
    RigidTransform source_to_query;
    Eigen::Vector2d pixel;
    RadialInterval interval;
    int coordinate = 0;  // 0: bounded u, 1: bounded v, 2: range
    double frequency = 1.0;
};

// Draws a random problem whose whole radial interval projects validly into the query camera
// (retries internally). Deterministic in `seed`.
PhasorProblem random_phasor_problem(std::uint64_t seed, bool sigma_zero = false);

// Expected phasor through the library path: breakpoints -> projected_path -> expected_phasor.
Phasor library_phasor(const PhasorProblem& problem, int num_breakpoints);

// Monte-Carlo estimate of E_z[exp(i omega x_c(z))], z ~ U(mu - |sigma|, mu + |sigma|), using
// exact per-sample projection (ucm_project then bounded normalization), independent of the
// path/segment code. Returns false in `all_valid` if any sample fell outside the valid domain.
struct MonteCarloResult {
    Phasor mean;
    bool all_valid = true;
};

MonteCarloResult monte_carlo_phasor(const PhasorProblem& problem, long samples, std::uint64_t seed);

// Bounded query coordinate via pixel projection: ((px - cx) / W, (py - cy) / H, 1) normalized.
// Returns the coordinate and whether the point is in the valid projection domain.
struct OracleCoordinate {
    double u = 0.0;
    double v = 0.0;
    double range = 0.0;
    bool valid = true;
};

OracleCoordinate oracle_coordinate(const UcmCamera& cam_q, const Eigen::Vector3d& point_q);

double component_error(const Phasor& a, const Phasor& b);

}  // namespace crepe::harness
