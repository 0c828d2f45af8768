#include "crepe/phasor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crepe/errors.hpp"

namespace crepe {

double RadialInterval::half_width() const { return std::abs(sigma); }

bool RadialInterval::is_clamped() const {
    constexpr double slack = 1e-12;
    const double a = half_width();
    return std::isfinite(mu) && std::isfinite(sigma) && mu >= -kLogRadialBound - slack &&
           mu <= kLogRadialBound + slack && mu - a >= -kLogRadialBound - slack && mu + a <= kLogRadialBound + slack;
}

RadialInterval clamp_interval(double mu_raw, double sigma_raw) {
    const double mu = std::clamp(mu_raw, -kLogRadialBound, kLogRadialBound);
    const double cap = std::min(kLogRadialBound - mu, mu + kLogRadialBound);
    const double a = std::min(std::abs(sigma_raw), cap);
    return {mu, std::copysign(a, sigma_raw)};
}

std::vector<double> breakpoints(const RadialInterval& interval, int num_breakpoints) {
    if (num_breakpoints < 2) {
        throw ConfigError("breakpoints: K must be at least 2");
    }
    if (!interval.is_clamped()) {
        throw InputError("breakpoints: interval is outside the [-3, 3] log range");
    }
    const double a = interval.half_width();
    const double lo = interval.mu - a;
    std::vector<double> r(static_cast<std::size_t>(num_breakpoints));
    for (int k = 0; k < num_breakpoints; ++k) {
        const double z = lo + static_cast<double>(k) / (num_breakpoints - 1) * (2.0 * a);
        r[static_cast<std::size_t>(k)] = std::exp(z);
    }
    return r;
}

PathPoint query_coordinate(const UcmCamera& cam_q, const Eigen::Vector3d& point_q) {
    const double n = point_q.norm();
    const double beta_raw = point_q.z() + cam_q.xi() * n;
    PathPoint p;
    p.valid = std::abs(beta_raw) >= kBetaGuard && !(cam_q.xi() == 0.0 && point_q.z() <= 0.0);
    const double beta = guard_denominator(beta_raw);
    const double ub = cam_q.fx() / cam_q.width() * (point_q.x() / beta);
    const double vb = cam_q.fy() / cam_q.height() * (point_q.y() / beta);
    const double norm = std::sqrt(ub * ub + vb * vb + 1.0);
    p.u = ub / norm;
    p.v = vb / norm;
    p.range = n;
    return p;
}

ProjectedPath projected_path(const UcmCamera& cam_q, const RigidTransform& source_to_query, const Ray& ray,
                             std::span<const double> radii) {
    if (radii.size() < 2) {
        throw ConfigError("projected_path: need at least two breakpoints");
    }
    ProjectedPath path;
    path.points.reserve(radii.size());
    for (double r : radii) {
        path.points.push_back(query_coordinate(cam_q, source_to_query.apply(lift_point(ray, r))));
    }
    return path;
}

// Evaluated as exp(i m) * sin(h) / h with m the midpoint and h the half-width, which equals
// ((sin b - sin a), (cos a - cos b)) / (b - a) without the cancellation of the difference form.
Phasor segment_phasor(double theta_a, double theta_b) {
    const double mid = 0.5 * (theta_a + theta_b);
    const double delta = theta_b - theta_a;
    double sinc = 1.0;
    if (std::abs(delta) >= kSmallPhaseThreshold) {
        const double h = 0.5 * delta;
        sinc = std::sin(h) / h;
    }
    return {std::cos(mid) * sinc, std::sin(mid) * sinc};
}

Phasor expected_phasor(std::span<const double> phases) {
    if (phases.size() < 2) {
        throw ConfigError("expected_phasor: need at least two phases");
    }
    double c = 0.0;
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < phases.size(); ++k) {
        const Phasor seg = segment_phasor(phases[k], phases[k + 1]);
        c += seg.c;
        s += seg.s;
    }
    const double n = static_cast<double>(phases.size() - 1);
    return {c / n, s / n};
}

PatchRays patch_rays(const UcmCamera& cam_s, TokenIndex token, int patch_size) {
    if (patch_size < 1) {
        throw InputError("patch_rays: patch size must be positive");
    }
    const int rows = cam_s.height() / patch_size;
    const int cols = cam_s.width() / patch_size;
    if (token.row < 0 || token.row >= rows || token.col < 0 || token.col >= cols) {
        throw InputError("patch_rays: token (" + std::to_string(token.row) + ", " + std::to_string(token.col) +
                         ") outside the " + std::to_string(rows) + "x" + std::to_string(cols) + " token grid");
    }
    PatchRays out;
    for (const auto& [ox, oy] : kPatchOffsets) {
        const Eigen::Vector2d px((token.col + ox) * patch_size, (token.row + oy) * patch_size);
        out.offsets.push_back(px);
        out.rays.push_back(ucm_unproject(cam_s, px));
    }
    return out;
}

FrequencyPlan make_crepe_plan(int dim_per_coordinate, int rays_per_token, double base) {
    if (rays_per_token < 1) {
        throw ConfigError("make_crepe_plan: need at least one ray per token");
    }
    return make_frequency_plan(dim_per_coordinate * 3 * rays_per_token, 3 * rays_per_token, base);
}

ModulationCoefficients crepe_coefficients(const UcmCamera& cam_q, const RigidTransform& source_to_query,
                                          const PatchRays& patch, const RadialInterval& interval,
                                          const FrequencyPlan& plan, int num_breakpoints) {
    const int num_rays = static_cast<int>(patch.rays.size());
    if (plan.num_groups() != 3 * num_rays) {
        throw ConfigError("crepe_coefficients: plan has " + std::to_string(plan.num_groups()) +
                          " coordinate groups, expected 3 per ray (" + std::to_string(3 * num_rays) + ")");
    }
    const std::vector<double> radii = breakpoints(interval, num_breakpoints);

    ModulationCoefficients out;
    out.pairs.assign(static_cast<std::size_t>(plan.num_pairs()), Phasor{});
    std::vector<double> coords;
    std::vector<double> phases;
    for (int a = 0; a < num_rays; ++a) {
        const ProjectedPath path = projected_path(cam_q, source_to_query, patch.rays[static_cast<std::size_t>(a)], radii);
        std::vector<const PathPoint*> valid;
        for (const auto& p : path.points) {
            if (p.valid) {
                valid.push_back(&p);
            }
        }
        if (valid.size() < 2) {
            ++out.fallback_offsets;
            continue;  // identity coefficients already in place
        }
        for (int c = 0; c < 3; ++c) {
            const CoordinateGroup& group = plan.groups()[static_cast<std::size_t>(3 * a + c)];
            coords.clear();
            for (const PathPoint* p : valid) {
                coords.push_back(p->coordinate(c));
            }
            for (std::size_t f = 0; f < group.frequencies.size(); ++f) {
                phases.clear();
                for (double x : coords) {
                    phases.push_back(group.frequencies[f] * x);
                }
                out.pairs[static_cast<std::size_t>(group.channel_offset / 2) + f] = expected_phasor(phases);
            }
        }
    }
    return out;
}

}  // namespace crepe
