#include "crepe/radial_supervision.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crepe/errors.hpp"

namespace crepe {

RadialMap::RadialMap(int frames_, int height_, int width_) : frames(frames_), height(height_), width(width_) {
    if (frames_ < 1 || height_ < 1 || width_ < 1) {
        throw InputError("RadialMap: dimensions must be positive");
    }
    const std::size_t n = static_cast<std::size_t>(frames_) * height_ * width_;
    values.assign(n, 0.0f);
    source_valid.assign(n, 1);
}

Mask validity_mask(const RadialMap& map, double r_max) {
    if (map.source_valid.size() != map.values.size()) {
        throw InputError("validity_mask: value and source mask sizes differ");
    }
    Mask mask(map.values.size(), 0);
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        const double v = map.values[i];
        mask[i] = (map.source_valid[i] != 0 && std::isfinite(v) && v > 0.0 && v <= r_max) ? 1 : 0;
    }
    return mask;
}

double near_distance_stat(const RadialMap& map, const Mask& mask) {
    std::vector<double> valid;
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        if (mask[i] != 0) {
            valid.push_back(map.values[i]);
        }
    }
    if (valid.empty()) {
        return kNearStatFloor;
    }
    // Nearest rank: the ceil(p N)-th smallest value.
    const auto rank = static_cast<std::size_t>(std::ceil(kNearStatPercentile * static_cast<double>(valid.size())));
    const std::size_t idx = std::max<std::size_t>(rank, 1) - 1;
    std::nth_element(valid.begin(), valid.begin() + static_cast<std::ptrdiff_t>(idx), valid.end());
    return std::max(valid[idx], kNearStatFloor);
}

TokenTargets normalize_and_pool(const RadialMap& map, const Mask& mask, double near_stat, int patch_size) {
    if (patch_size < 1 || map.height % patch_size != 0 || map.width % patch_size != 0) {
        throw ConfigError("normalize_and_pool: image " + std::to_string(map.width) + "x" +
                          std::to_string(map.height) + " is not divisible by patch size " +
                          std::to_string(patch_size));
    }
    if (mask.size() != map.values.size()) {
        throw InputError("normalize_and_pool: mask size does not match the map");
    }
    if (!(near_stat > 0.0) || !std::isfinite(near_stat)) {
        throw InputError("normalize_and_pool: near_stat must be positive");
    }
    TokenTargets out;
    out.frames = map.frames;
    out.rows = map.height / patch_size;
    out.cols = map.width / patch_size;
    out.near_stat = near_stat;
    out.targets.assign(static_cast<std::size_t>(out.frames) * out.rows * out.cols, 0.0);
    out.mask.assign(out.targets.size(), 0);

    const int pixels = patch_size * patch_size;
    for (int f = 0; f < map.frames; ++f) {
        for (int tr = 0; tr < out.rows; ++tr) {
            for (int tc = 0; tc < out.cols; ++tc) {
                double sum = 0.0;
                int count = 0;
                for (int dr = 0; dr < patch_size; ++dr) {
                    for (int dc = 0; dc < patch_size; ++dc) {
                        const std::size_t i = map.index(f, tr * patch_size + dr, tc * patch_size + dc);
                        if (mask[i] != 0) {
                            sum += map.values[i] / near_stat;
                            ++count;
                        }
                    }
                }
                const std::size_t t = out.index(f, tr, tc);
                if (count > 0 && static_cast<double>(count) >= kTokenValidFraction * pixels) {
                    out.targets[t] = sum / count;
                    out.mask[t] = 1;
                }
            }
        }
    }
    return out;
}

namespace {

struct ScaleTerms {
    double s;
    double ds_dmu;
    double ds_da;  // with respect to |sigma|
};

ScaleTerms scale_terms(double mu, double a, const LossConfig& config) {
    const double hi = std::exp(mu + a);
    const double lo = std::exp(mu - a);
    const double spread = hi - lo;
    const double var = spread * spread / 12.0;
    if (var <= config.s_floor_var) {
        return {std::sqrt(config.s_floor_var), 0.0, 0.0};
    }
    const double s = std::sqrt(var);
    if (s >= config.s_ceiling) {
        return {config.s_ceiling, 0.0, 0.0};
    }
    // s = (hi - lo) / sqrt(12)
    const double inv = 1.0 / std::sqrt(12.0);
    return {s, s, (hi + lo) * inv};
}

}  // namespace

double uncertainty_scale(const RadialInterval& interval, const LossConfig& config) {
    return scale_terms(interval.mu, interval.half_width(), config).s;
}

RadialLoss radial_loss(const std::vector<RadialInterval>& intervals, const TokenTargets& targets,
                       const LossConfig& config) {
    if (intervals.size() != targets.targets.size() || targets.mask.size() != targets.targets.size()) {
        throw InputError("radial_loss: interval grid and target grid are not aligned");
    }
    RadialLoss out;
    out.grad_mu.assign(intervals.size(), 0.0);
    out.grad_sigma.assign(intervals.size(), 0.0);
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        out.valid_tokens += targets.mask[i] != 0 ? 1 : 0;
    }
    if (out.valid_tokens == 0) {
        out.empty = true;
        return out;
    }
    const double inv_n = 1.0 / out.valid_tokens;
    double total = 0.0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        if (targets.mask[i] == 0) {
            continue;
        }
        const double mu = intervals[i].mu;
        const double sigma = intervals[i].sigma;
        const double a = std::abs(sigma);
        const ScaleTerms st = scale_terms(mu, a, config);
        const double pred = std::exp(mu);
        const double diff = pred - targets.targets[i];
        const double dist = std::abs(diff);
        total += dist / st.s + config.alpha * std::log(st.s);

        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        const double dl_ds = -dist / (st.s * st.s) + config.alpha / st.s;
        const double sign_sigma = sigma > 0.0 ? 1.0 : (sigma < 0.0 ? -1.0 : 0.0);
        out.grad_mu[i] = (sign * pred / st.s + dl_ds * st.ds_dmu) * inv_n;
        out.grad_sigma[i] = dl_ds * st.ds_da * sign_sigma * inv_n;
    }
    out.loss = total * inv_n;
    return out;
}

bool timestep_gate(double t, double gate_fraction) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw InputError("timestep_gate: t must lie in [0, 1]");
    }
    return !(t > 1.0 - gate_fraction);
}

}  // namespace crepe
