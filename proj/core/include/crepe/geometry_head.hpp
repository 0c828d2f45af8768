#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "crepe/phasor.hpp"

namespace crepe {

// LayerNorm -> Linear -> SiLU -> Linear, producing raw (mu, sigma).
struct HeadParams {
    Eigen::VectorXd norm_scale;  // d_model
    Eigen::VectorXd norm_bias;   // d_model
    Eigen::MatrixXd w1;          // d_model x d_hidden
    Eigen::VectorXd b1;          // d_hidden
    Eigen::MatrixXd w2;          // d_hidden x 2
    Eigen::Vector2d b2;

    int d_model() const { return static_cast<int>(norm_scale.size()); }
    int d_hidden() const { return static_cast<int>(b1.size()); }
};

inline constexpr double kLayerNormEps = 1e-5;

int head_hidden_width(int d_model);

// First layer drawn from U(-1/sqrt(d_model), 1/sqrt(d_model)); final layer zero with bias (0, 3).
HeadParams head_init(int d_model, std::uint64_t seed);

// Intermediate values of one forward pass, reused by head_backward.
struct HeadActivations {
    Eigen::VectorXd normalized;  // (x - mean) / std
    double inv_std = 0.0;
    Eigen::VectorXd pre_hidden;  // w1^T y + b1
    Eigen::VectorXd hidden;      // silu(pre_hidden)
    Eigen::Vector2d raw = Eigen::Vector2d::Zero();
    RadialInterval interval;
};

HeadActivations head_activations(const HeadParams& params, const Eigen::VectorXd& feature);

RadialInterval head_forward(const HeadParams& params, const Eigen::VectorXd& feature);

struct HeadGradients {
    Eigen::VectorXd norm_scale;
    Eigen::VectorXd norm_bias;
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::Vector2d b2 = Eigen::Vector2d::Zero();
    Eigen::VectorXd feature;

    static HeadGradients zeros_like(const HeadParams& params);
    HeadGradients& operator+=(const HeadGradients& other);
    HeadGradients& operator*=(double factor);
    // L2 norm over the parameter blocks (feature gradient excluded).
    double parameter_norm() const;
};

// Reverse-mode gradients given dL/dmu and dL/dsigma of the clamped interval.
// Saturated clamp regions contribute zero.
HeadGradients head_backward(const HeadParams& params, const Eigen::VectorXd& feature, double grad_mu,
                            double grad_sigma);

// Column-wise batch versions; features is d_model x N. The batch backward sums parameter gradients
// over columns and leaves the feature gradient at zero.
std::vector<RadialInterval> head_forward_batch(const HeadParams& params, const Eigen::MatrixXd& features);
HeadGradients head_backward_batch(const HeadParams& params, const Eigen::MatrixXd& features,
                                  const std::vector<double>& grad_mu, const std::vector<double>& grad_sigma);

// Jacobian of the clamped (mu, sigma) with respect to the raw head outputs.
Eigen::Matrix2d clamp_jacobian(double mu_raw, double sigma_raw);

// params -= step * grads.
void apply_gradient_step(HeadParams& params, const HeadGradients& grads, double step);

}  // namespace crepe
