#pragma once

#include <cstdint>
#include <vector>

#include "crepe/geometry_head.hpp"
#include "crepe/radial_supervision.hpp"
#include "crepe/synthetic_scene.hpp"

namespace crepe::harness {

struct ProbeSplit {
    Mask train;    // valid tokens used for gradient descent
    Mask holdout;  // valid tokens used only for evaluation
};

// Seeded per-token split of the valid tokens.
ProbeSplit split_tokens(const TokenTargets& targets, double holdout_fraction, std::uint64_t seed);

struct ProbeOptions {
    int steps = 2000;
    double learning_rate = 1e-2;
    double gradient_clip = 0.3;  // global L2 norm; <= 0 disables
    int curve_every = 100;
    LossConfig loss;
};

struct ProbeResult {
    double init_loss = 0.0;
    double final_loss = 0.0;
    double loss_reduction = 0.0;  // (init - final) / |init|
    double probe_error = 0.0;     // held-out mean squared log error
    double baseline_error = 0.0;  // same metric for the mean training log target
    double signal_gain = 0.0;     // 1 - probe_error / baseline_error
    std::vector<std::pair<int, double>> curve;
    HeadParams params;
};

// Thrown when the training loss becomes non-finite.
class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Full-batch gradient descent with a fixed step and global-norm clipping on the radial loss
// over the training tokens.
ProbeResult train_probe(const TokenBatch& features, const TokenTargets& targets, const ProbeSplit& split,
                        const ProbeOptions& options, std::uint64_t seed);

}  // namespace crepe::harness
