#include "crepe/harness/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "crepe/random.hpp"

namespace crepe::harness {

double relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
    const double denom = std::max({analytic.norm(), numeric.norm(), 1e-10});
    return (analytic - numeric).norm() / denom;
}

HeadParams random_head(int d_model, std::uint64_t seed) {
    HeadParams p = head_init(d_model, seed);
    Rng rng(mix_seed(seed, 1));
    for (Eigen::Index i = 0; i < p.norm_scale.size(); ++i) {
        p.norm_scale(i) = rng.uniform(0.5, 1.5);
        p.norm_bias(i) = rng.uniform(-0.3, 0.3);
    }
    for (Eigen::Index i = 0; i < p.w2.size(); ++i) {
        p.w2.data()[i] = rng.uniform(-0.5, 0.5);
    }
    p.b2 = Eigen::Vector2d(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
    return p;
}

namespace {

// Central differences of f over each entry of `x` (perturbed in place, then restored).
template <typename Vec>
Eigen::VectorXd numeric_gradient(Vec& x, const std::function<double()>& f, double h) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double saved = x.data()[i];
        x.data()[i] = saved + h;
        const double fp = f();
        x.data()[i] = saved - h;
        const double fm = f();
        x.data()[i] = saved;
        g(i) = (fp - fm) / (2.0 * h);
    }
    return g;
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); }

bool near_clamp_boundary(const Eigen::Vector2d& raw, double margin) {
    const double mu = std::clamp(raw(0), -kLogRadialBound, kLogRadialBound);
    const double cap = kLogRadialBound - std::abs(mu);
    return std::abs(std::abs(raw(0)) - kLogRadialBound) < margin || std::abs(std::abs(raw(1)) - cap) < margin ||
           std::abs(raw(1)) < margin || std::abs(mu) < margin;
}

}  // namespace

GradcheckReport check_head_gradients(const GradcheckOptions& options, std::uint64_t seed) {
    GradcheckReport report;
    const double h = options.step;
    for (std::uint64_t draw = 0; report.checked < options.points; ++draw) {
        if (draw > static_cast<std::uint64_t>(options.points) * 50) {
            break;
        }
        HeadParams params = random_head(options.d_model, mix_seed(seed, draw));
        Rng rng(mix_seed(seed, draw + 0x100000));
        Eigen::VectorXd feature(options.d_model);
        for (Eigen::Index i = 0; i < feature.size(); ++i) {
            feature(i) = rng.normal();
        }
        const double g_mu = rng.normal();
        const double g_sigma = rng.normal();
        if (near_clamp_boundary(head_activations(params, feature).raw, options.boundary_margin)) {
            ++report.excluded;
            continue;
        }
        const auto objective = [&]() {
            const RadialInterval iv = head_forward(params, feature);
            return g_mu * iv.mu + g_sigma * iv.sigma;
        };
        const HeadGradients g = head_backward(params, feature, g_mu, g_sigma);
        double worst = 0.0;
        worst = std::max(worst, relative_error(g.norm_scale, numeric_gradient(params.norm_scale, objective, h)));
        worst = std::max(worst, relative_error(g.norm_bias, numeric_gradient(params.norm_bias, objective, h)));
        worst = std::max(worst, relative_error(flatten(g.w1), numeric_gradient(params.w1, objective, h)));
        worst = std::max(worst, relative_error(g.b1, numeric_gradient(params.b1, objective, h)));
        worst = std::max(worst, relative_error(flatten(g.w2), numeric_gradient(params.w2, objective, h)));
        worst = std::max(worst, relative_error(Eigen::VectorXd(g.b2), numeric_gradient(params.b2, objective, h)));
        worst = std::max(worst, relative_error(g.feature, numeric_gradient(feature, objective, h)));
        report.max_relative_error = std::max(report.max_relative_error, worst);
        ++report.checked;
    }
    report.pass = report.checked == options.points && report.max_relative_error < options.tolerance;
    return report;
}

namespace {

bool near_loss_boundary(const RadialInterval& iv, double target, const LossConfig& config, double margin) {
    const double a = std::abs(iv.sigma);
    const double spread = std::exp(iv.mu + a) - std::exp(iv.mu - a);
    const double s = spread / std::sqrt(12.0);
    const double floor_s = std::sqrt(config.s_floor_var);
    return std::abs(std::exp(iv.mu) - target) < margin || a < margin || std::abs(s - floor_s) < margin * floor_s ||
           std::abs(s - config.s_ceiling) < margin * config.s_ceiling;
}

}  // namespace

GradcheckReport check_loss_gradients(const GradcheckOptions& options, std::uint64_t seed) {
    GradcheckReport report;
    const LossConfig config;
    const double h = options.step;
    const int n = options.loss_tokens;
    for (std::uint64_t draw = 0; report.checked < options.points; ++draw) {
        if (draw > static_cast<std::uint64_t>(options.points) * 50) {
            break;
        }
        Rng rng(mix_seed(seed, draw));
        std::vector<RadialInterval> intervals;
        TokenTargets targets;
        targets.frames = 1;
        targets.rows = 1;
        targets.cols = n;
        bool boundary = false;
        for (int i = 0; i < n; ++i) {
            const RadialInterval iv = clamp_interval(rng.uniform(-2.0, 2.0), rng.uniform(-1.0, 1.0));
            const double target = std::exp(rng.uniform(-2.0, 2.0));
            const bool valid = rng.bernoulli(0.8);
            intervals.push_back(iv);
            targets.targets.push_back(target);
            targets.mask.push_back(valid ? 1 : 0);
            boundary = boundary || (valid && near_loss_boundary(iv, target, config, options.boundary_margin));
        }
        if (boundary) {
            ++report.excluded;
            continue;
        }
        const RadialLoss analytic = radial_loss(intervals, targets, config);
        Eigen::VectorXd a(2 * n);
        Eigen::VectorXd num(2 * n);
        for (int i = 0; i < n; ++i) {
            auto& iv = intervals[static_cast<std::size_t>(i)];
            for (int which = 0; which < 2; ++which) {
                double& x = which == 0 ? iv.mu : iv.sigma;
                const double saved = x;
                x = saved + h;
                const double fp = radial_loss(intervals, targets, config).loss;
                x = saved - h;
                const double fm = radial_loss(intervals, targets, config).loss;
                x = saved;
                num(2 * i + which) = (fp - fm) / (2.0 * h);
                a(2 * i + which) = which == 0 ? analytic.grad_mu[static_cast<std::size_t>(i)]
                                              : analytic.grad_sigma[static_cast<std::size_t>(i)];
            }
        }
        report.max_relative_error = std::max(report.max_relative_error, relative_error(a, num));
        ++report.checked;
    }

    // The kink exp(mu) == target: subgradient 0 on the data term, reported without failing.
    {
        TokenTargets kink;
        kink.frames = kink.rows = kink.cols = 1;
        kink.targets = {std::exp(0.5)};
        kink.mask = {1};
        const RadialLoss at_kink = radial_loss({RadialInterval{0.5, 0.5}}, kink, config);
        if (std::isfinite(at_kink.grad_mu[0])) {
            ++report.flagged;
        }
    }
    report.pass = report.checked == options.points && report.max_relative_error < options.tolerance;
    return report;
}

}  // namespace crepe::harness
