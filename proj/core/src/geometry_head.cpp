#include "crepe/geometry_head.hpp"

#include <algorithm>
#include <cmath>

#include "crepe/errors.hpp"
#include "crepe/random.hpp"

namespace crepe {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_feature(const HeadParams& params, const Eigen::VectorXd& feature) {
    if (feature.size() != params.d_model()) {
        throw InputError("geometry head: feature dim " + std::to_string(feature.size()) + " != d_model " +
                         std::to_string(params.d_model()));
    }
}

}  // namespace

int head_hidden_width(int d_model) { return std::max(16, d_model / 4); }

HeadParams head_init(int d_model, std::uint64_t seed) {
    if (d_model < 1) {
        throw ConfigError("head_init: d_model must be positive");
    }
    const int d_hidden = head_hidden_width(d_model);
    const double bound = 1.0 / std::sqrt(static_cast<double>(d_model));
    Rng rng(seed);

    HeadParams p;
    p.norm_scale = Eigen::VectorXd::Ones(d_model);
    p.norm_bias = Eigen::VectorXd::Zero(d_model);
    p.w1.resize(d_model, d_hidden);
    for (int j = 0; j < d_hidden; ++j) {
        for (int i = 0; i < d_model; ++i) {
            p.w1(i, j) = rng.uniform(-bound, bound);
        }
    }
    p.b1.resize(d_hidden);
    for (int j = 0; j < d_hidden; ++j) {
        p.b1(j) = rng.uniform(-bound, bound);
    }
    p.w2 = Eigen::MatrixXd::Zero(d_hidden, 2);
    p.b2 = Eigen::Vector2d(0.0, 3.0);
    return p;
}

HeadActivations head_activations(const HeadParams& params, const Eigen::VectorXd& feature) {
    check_feature(params, feature);
    HeadActivations act;
    const double mean = feature.mean();
    const Eigen::VectorXd centered = feature.array() - mean;
    const double var = centered.squaredNorm() / static_cast<double>(feature.size());
    act.inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
    act.normalized = centered * act.inv_std;
    const Eigen::VectorXd y = act.normalized.cwiseProduct(params.norm_scale) + params.norm_bias;
    act.pre_hidden = params.w1.transpose() * y + params.b1;
    act.hidden = act.pre_hidden.unaryExpr([](double x) { return x * sigmoid(x); });
    act.raw = params.w2.transpose() * act.hidden + params.b2;
    act.interval = clamp_interval(act.raw(0), act.raw(1));
    return act;
}

RadialInterval head_forward(const HeadParams& params, const Eigen::VectorXd& feature) {
    return head_activations(params, feature).interval;
}

Eigen::Matrix2d clamp_jacobian(double mu_raw, double sigma_raw) {
    Eigen::Matrix2d j = Eigen::Matrix2d::Zero();
    const double dmu = (mu_raw > -kLogRadialBound && mu_raw < kLogRadialBound) ? 1.0 : 0.0;
    j(0, 0) = dmu;
    const double mu = std::clamp(mu_raw, -kLogRadialBound, kLogRadialBound);
    const double cap = kLogRadialBound - std::abs(mu);
    // At |sigma_raw| == cap (the initial state) the unsaturated branch is taken so that a
    // shrinking interval still receives gradient.
    if (std::abs(sigma_raw) <= cap) {
        j(1, 1) = 1.0;
    } else {
        // sigma = sign(sigma_raw) * (3 - |mu|)
        const double sign_sigma = sigma_raw > 0.0 ? 1.0 : (sigma_raw < 0.0 ? -1.0 : 0.0);
        const double sign_mu = mu > 0.0 ? 1.0 : (mu < 0.0 ? -1.0 : 0.0);
        j(1, 0) = -sign_sigma * sign_mu * dmu;
    }
    return j;
}

HeadGradients HeadGradients::zeros_like(const HeadParams& params) {
    HeadGradients g;
    g.norm_scale = Eigen::VectorXd::Zero(params.d_model());
    g.norm_bias = Eigen::VectorXd::Zero(params.d_model());
    g.w1 = Eigen::MatrixXd::Zero(params.w1.rows(), params.w1.cols());
    g.b1 = Eigen::VectorXd::Zero(params.d_hidden());
    g.w2 = Eigen::MatrixXd::Zero(params.w2.rows(), 2);
    g.b2 = Eigen::Vector2d::Zero();
    g.feature = Eigen::VectorXd::Zero(params.d_model());
    return g;
}

HeadGradients& HeadGradients::operator+=(const HeadGradients& other) {
    norm_scale += other.norm_scale;
    norm_bias += other.norm_bias;
    w1 += other.w1;
    b1 += other.b1;
    w2 += other.w2;
    b2 += other.b2;
    feature += other.feature;
    return *this;
}

HeadGradients& HeadGradients::operator*=(double factor) {
    norm_scale *= factor;
    norm_bias *= factor;
    w1 *= factor;
    b1 *= factor;
    w2 *= factor;
    b2 *= factor;
    feature *= factor;
    return *this;
}

double HeadGradients::parameter_norm() const {
    return std::sqrt(norm_scale.squaredNorm() + norm_bias.squaredNorm() + w1.squaredNorm() + b1.squaredNorm() +
                     w2.squaredNorm() + b2.squaredNorm());
}

HeadGradients head_backward(const HeadParams& params, const Eigen::VectorXd& feature, double grad_mu,
                            double grad_sigma) {
    const HeadActivations act = head_activations(params, feature);
    const Eigen::Vector2d g_raw =
        clamp_jacobian(act.raw(0), act.raw(1)).transpose() * Eigen::Vector2d(grad_mu, grad_sigma);

    HeadGradients g;
    g.b2 = g_raw;
    g.w2 = act.hidden * g_raw.transpose();
    const Eigen::VectorXd g_hidden = params.w2 * g_raw;
    const Eigen::VectorXd silu_prime = act.pre_hidden.unaryExpr([](double x) {
        const double s = sigmoid(x);
        return s * (1.0 + x * (1.0 - s));
    });
    const Eigen::VectorXd g_pre = g_hidden.cwiseProduct(silu_prime);
    g.b1 = g_pre;
    const Eigen::VectorXd y = act.normalized.cwiseProduct(params.norm_scale) + params.norm_bias;
    g.w1 = y * g_pre.transpose();
    const Eigen::VectorXd g_y = params.w1 * g_pre;
    g.norm_scale = g_y.cwiseProduct(act.normalized);
    g.norm_bias = g_y;

    const Eigen::VectorXd g_xhat = g_y.cwiseProduct(params.norm_scale);
    const double mean_g = g_xhat.mean();
    const double mean_gx = g_xhat.cwiseProduct(act.normalized).mean();
    g.feature = act.inv_std * (g_xhat.array() - mean_g - act.normalized.array() * mean_gx).matrix();
    return g;
}

namespace {

struct BatchActivations {
    Eigen::MatrixXd normalized;
    Eigen::MatrixXd y;
    Eigen::MatrixXd pre_hidden;
    Eigen::MatrixXd hidden;
    Eigen::MatrixXd raw;
};

BatchActivations batch_activations(const HeadParams& params, const Eigen::MatrixXd& features) {
    if (features.rows() != params.d_model()) {
        throw InputError("geometry head: batch feature dim " + std::to_string(features.rows()) + " != d_model " +
                         std::to_string(params.d_model()));
    }
    const auto d = static_cast<double>(features.rows());
    BatchActivations act;
    const Eigen::RowVectorXd mean = features.colwise().mean();
    act.normalized = features.rowwise() - mean;
    const Eigen::RowVectorXd var = act.normalized.colwise().squaredNorm() / d;
    const Eigen::RowVectorXd inv_std = (var.array() + kLayerNormEps).rsqrt().matrix();
    act.normalized = act.normalized * inv_std.asDiagonal();
    act.y = (params.norm_scale.asDiagonal() * act.normalized).colwise() + params.norm_bias;
    act.pre_hidden = (params.w1.transpose() * act.y).colwise() + params.b1;
    act.hidden = act.pre_hidden.unaryExpr([](double x) { return x * sigmoid(x); });
    act.raw = (params.w2.transpose() * act.hidden).colwise() + params.b2;
    return act;
}

}  // namespace

std::vector<RadialInterval> head_forward_batch(const HeadParams& params, const Eigen::MatrixXd& features) {
    const BatchActivations act = batch_activations(params, features);
    std::vector<RadialInterval> out;
    out.reserve(static_cast<std::size_t>(features.cols()));
    for (Eigen::Index i = 0; i < features.cols(); ++i) {
        out.push_back(clamp_interval(act.raw(0, i), act.raw(1, i)));
    }
    return out;
}

HeadGradients head_backward_batch(const HeadParams& params, const Eigen::MatrixXd& features,
                                  const std::vector<double>& grad_mu, const std::vector<double>& grad_sigma) {
    const auto n = static_cast<std::size_t>(features.cols());
    if (grad_mu.size() != n || grad_sigma.size() != n) {
        throw InputError("head_backward_batch: gradient count does not match the batch");
    }
    const BatchActivations act = batch_activations(params, features);
    Eigen::MatrixXd g_raw(2, features.cols());
    for (Eigen::Index i = 0; i < features.cols(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        g_raw.col(i) = clamp_jacobian(act.raw(0, i), act.raw(1, i)).transpose() *
                       Eigen::Vector2d(grad_mu[k], grad_sigma[k]);
    }
    HeadGradients g = HeadGradients::zeros_like(params);
    g.b2 = g_raw.rowwise().sum();
    g.w2 = act.hidden * g_raw.transpose();
    const Eigen::MatrixXd silu_prime = act.pre_hidden.unaryExpr([](double x) {
        const double s = sigmoid(x);
        return s * (1.0 + x * (1.0 - s));
    });
    const Eigen::MatrixXd g_pre = (params.w2 * g_raw).cwiseProduct(silu_prime);
    g.b1 = g_pre.rowwise().sum();
    g.w1 = act.y * g_pre.transpose();
    const Eigen::MatrixXd g_y = params.w1 * g_pre;
    g.norm_scale = g_y.cwiseProduct(act.normalized).rowwise().sum();
    g.norm_bias = g_y.rowwise().sum();
    return g;
}

void apply_gradient_step(HeadParams& params, const HeadGradients& grads, double step) {
    params.norm_scale -= step * grads.norm_scale;
    params.norm_bias -= step * grads.norm_bias;
    params.w1 -= step * grads.w1;
    params.b1 -= step * grads.b1;
    params.w2 -= step * grads.w2;
    params.b2 -= step * grads.b2;
}

}  // namespace crepe
