#include "crepe/harness/probe.hpp"

#include <cmath>
#include <string>

#include "crepe/errors.hpp"
#include "crepe/random.hpp"

namespace crepe::harness {

ProbeSplit split_tokens(const TokenTargets& targets, double holdout_fraction, std::uint64_t seed) {
    Rng rng(seed);
    ProbeSplit split{Mask(targets.size(), 0), Mask(targets.size(), 0)};
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const bool hold = rng.bernoulli(holdout_fraction);
        if (targets.mask[i] == 0) {
            continue;
        }
        (hold ? split.holdout : split.train)[i] = 1;
    }
    return split;
}

namespace {

Eigen::MatrixXd feature_matrix(const TokenBatch& features) {
    Eigen::MatrixXd m(features.d_model(), features.size());
    for (int i = 0; i < features.size(); ++i) {
        m.col(i) = features.at(i);
    }
    return m;
}

TokenTargets with_mask(const TokenTargets& targets, const Mask& mask) {
    TokenTargets t = targets;
    t.mask = mask;
    return t;
}

}  // namespace

ProbeResult train_probe(const TokenBatch& features, const TokenTargets& targets, const ProbeSplit& split,
                        const ProbeOptions& options, std::uint64_t seed) {
    if (static_cast<std::size_t>(features.size()) != targets.size()) {
        throw InputError("train_probe: feature grid and target grid differ in size");
    }
    const TokenTargets train = with_mask(targets, split.train);
    const Eigen::MatrixXd x = feature_matrix(features);
    ProbeResult result;
    result.params = head_init(features.d_model(), seed);

    for (int step = 0; step <= options.steps; ++step) {
        const auto intervals = head_forward_batch(result.params, x);
        const RadialLoss loss = radial_loss(intervals, train, options.loss);
        if (!std::isfinite(loss.loss)) {
            throw TrainingDiverged("radial loss became non-finite at step " + std::to_string(step));
        }
        if (step == 0) {
            result.init_loss = loss.loss;
        }
        if (step % options.curve_every == 0 || step == options.steps) {
            result.curve.emplace_back(step, loss.loss);
        }
        result.final_loss = loss.loss;
        if (step == options.steps || loss.empty) {
            break;
        }
        HeadGradients total = head_backward_batch(result.params, x, loss.grad_mu, loss.grad_sigma);
        const double norm = total.parameter_norm();
        if (options.gradient_clip > 0.0 && norm > options.gradient_clip) {
            total *= options.gradient_clip / norm;
        }
        apply_gradient_step(result.params, total, options.learning_rate);
    }
    result.loss_reduction =
        result.init_loss != 0.0 ? (result.init_loss - result.final_loss) / std::abs(result.init_loss) : 0.0;

    double train_mean = 0.0;
    int n_train = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (split.train[i] != 0) {
            train_mean += std::log(targets.targets[i]);
            ++n_train;
        }
    }
    train_mean = n_train > 0 ? train_mean / n_train : 0.0;

    const auto intervals = head_forward_batch(result.params, x);
    double err = 0.0;
    double base = 0.0;
    int n_hold = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (split.holdout[i] == 0) {
            continue;
        }
        const double t = std::log(targets.targets[i]);
        err += (intervals[i].mu - t) * (intervals[i].mu - t);
        base += (train_mean - t) * (train_mean - t);
        ++n_hold;
    }
    if (n_hold > 0) {
        result.probe_error = err / n_hold;
        result.baseline_error = base / n_hold;
        result.signal_gain = result.baseline_error > 0.0 ? 1.0 - result.probe_error / result.baseline_error : 0.0;
    }
    return result;
}

}  // namespace crepe::harness
