#include "crepe/rope.hpp"

#include <cmath>
#include <string>

#include "crepe/errors.hpp"

namespace crepe {

FrequencyPlan::FrequencyPlan(std::vector<CoordinateGroup> groups, int total_dim)
    : groups_(std::move(groups)), total_dim_(total_dim) {
    if (total_dim_ <= 0 || total_dim_ % 2 != 0) {
        throw ConfigError("FrequencyPlan: total_dim must be a positive even integer");
    }
    int next = 0;
    for (const auto& g : groups_) {
        if (g.frequencies.empty()) {
            throw ConfigError("FrequencyPlan: empty coordinate group");
        }
        if (g.channel_offset != next) {
            throw ConfigError("FrequencyPlan: channel groups must be contiguous and disjoint");
        }
        for (std::size_t f = 0; f < g.frequencies.size(); ++f) {
            if (!(g.frequencies[f] > 0.0) || !std::isfinite(g.frequencies[f])) {
                throw ConfigError("FrequencyPlan: frequencies must be positive and finite");
            }
            if (f > 0 && !(g.frequencies[f] < g.frequencies[f - 1])) {
                throw ConfigError("FrequencyPlan: frequencies must be strictly decreasing");
            }
        }
        next += g.channel_count();
    }
    if (next != total_dim_) {
        throw ConfigError("FrequencyPlan: groups cover " + std::to_string(next) + " channels, expected " +
                          std::to_string(total_dim_));
    }
}

FrequencyPlan make_frequency_plan(int total_dim, int num_coordinates, double base) {
    if (num_coordinates < 1 || total_dim <= 0 || total_dim % (2 * num_coordinates) != 0) {
        throw ConfigError("make_frequency_plan: total_dim " + std::to_string(total_dim) +
                          " is not divisible by 2 * num_coordinates");
    }
    if (!(base > 0.0) || !std::isfinite(base)) {
        throw ConfigError("make_frequency_plan: base must be positive");
    }
    const int per_coord = total_dim / num_coordinates;
    const int num_freq = per_coord / 2;
    std::vector<CoordinateGroup> groups;
    groups.reserve(static_cast<std::size_t>(num_coordinates));
    for (int c = 0; c < num_coordinates; ++c) {
        CoordinateGroup g;
        g.coordinate_index = c;
        g.channel_offset = c * per_coord;
        for (int f = 0; f < num_freq; ++f) {
            g.frequencies.push_back(std::pow(base, -2.0 * f / per_coord));
        }
        groups.push_back(std::move(g));
    }
    return FrequencyPlan(std::move(groups), total_dim);
}

std::vector<double> rope_phases(const FrequencyPlan& plan, std::span<const double> coords) {
    if (static_cast<int>(coords.size()) != plan.num_groups()) {
        throw InputError("rope_phases: expected " + std::to_string(plan.num_groups()) + " coordinates, got " +
                         std::to_string(coords.size()));
    }
    std::vector<double> phases;
    phases.reserve(static_cast<std::size_t>(plan.num_pairs()));
    for (std::size_t g = 0; g < coords.size(); ++g) {
        if (!std::isfinite(coords[g])) {
            throw InputError("rope_phases: coordinates must be finite");
        }
        for (double w : plan.groups()[g].frequencies) {
            phases.push_back(w * coords[g]);
        }
    }
    return phases;
}

RotationCoefficients exact_rotation(std::span<const double> phases) {
    RotationCoefficients out;
    out.pairs.reserve(phases.size());
    for (double theta : phases) {
        out.pairs.push_back({std::cos(theta), std::sin(theta)});
    }
    return out;
}

std::vector<double> apply_coefficients(std::span<const double> vec, std::span<const Phasor> coeffs,
                                       const FrequencyPlan& plan) {
    if (static_cast<int>(vec.size()) != plan.total_dim() || static_cast<int>(coeffs.size()) != plan.num_pairs()) {
        throw InputError("apply_coefficients: dimension mismatch with frequency plan");
    }
    std::vector<double> out(vec.size());
    for (std::size_t p = 0; p < coeffs.size(); ++p) {
        const double a = vec[2 * p];
        const double b = vec[2 * p + 1];
        out[2 * p] = coeffs[p].c * a - coeffs[p].s * b;
        out[2 * p + 1] = coeffs[p].s * a + coeffs[p].c * b;
    }
    return out;
}

}  // namespace crepe
