#pragma once

#include <cstdint>

#include "crepe/geometry_head.hpp"
#include "crepe/radial_supervision.hpp"

namespace crepe::harness {

struct GradcheckOptions {
    int points = 100;
    double step = 1e-5;
    double tolerance = 1e-4;
    double boundary_margin = 1e-3;
    int d_model = 32;
    int loss_tokens = 8;
};

struct GradcheckReport {
    int checked = 0;
    int excluded = 0;   // draws rejected for sitting near a clamp or plateau boundary
    int flagged = 0;    // deliberate kink points, reported but not failed
    double max_relative_error = 0.0;
    bool pass = false;
};

// ||a - b|| / max(||a||, ||b||, 1e-10) over one parameter block.
double relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric);

// Random head parameters with a non-zero output layer, for gradient checks.
HeadParams random_head(int d_model, std::uint64_t seed);

// Analytic head_backward vs central differences of L = g_mu * mu + g_sigma * sigma.
GradcheckReport check_head_gradients(const GradcheckOptions& options, std::uint64_t seed);

// Analytic radial_loss gradients vs central differences over mu and sigma of every token.
// One extra point is placed exactly on the |exp(mu) - target| kink and counted as flagged.
GradcheckReport check_loss_gradients(const GradcheckOptions& options, std::uint64_t seed);

}  // namespace crepe::harness
