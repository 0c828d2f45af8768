#pragma once

#include <span>
#include <vector>

namespace crepe {

// One (cos, sin)-like coefficient pair acting on a channel pair (a, b).
struct Phasor {
    double c = 1.0;
    double s = 0.0;

    double magnitude_squared() const { return c * c + s * s; }
};

struct CoordinateGroup {
    int coordinate_index = 0;
    std::vector<double> frequencies;  // strictly decreasing
    int channel_offset = 0;           // first channel; group spans 2 * frequencies.size()

    int channel_count() const { return 2 * static_cast<int>(frequencies.size()); }
};

// Channel layout for multi-coordinate RoPE. Pair index p acts on channels (2p, 2p + 1);
// groups are laid out contiguously in coordinate order.
class FrequencyPlan {
public:
    // Validates disjoint, covering, even channel groups with decreasing frequencies.
    FrequencyPlan(std::vector<CoordinateGroup> groups, int total_dim);

    const std::vector<CoordinateGroup>& groups() const { return groups_; }
    int total_dim() const { return total_dim_; }
    int num_pairs() const { return total_dim_ / 2; }
    int num_groups() const { return static_cast<int>(groups_.size()); }

private:
    std::vector<CoordinateGroup> groups_;
    int total_dim_;
};

// Each coordinate gets total_dim / num_coordinates channels with
// omega_f = base^(-2(f-1)/D_c), f = 1..D_c/2. Throws ConfigError when
// total_dim is not divisible by 2 * num_coordinates.
FrequencyPlan make_frequency_plan(int total_dim, int num_coordinates, double base = 10000.0);

struct RotationCoefficients {
    std::vector<Phasor> pairs;
};

// theta = omega_f * x_c, one entry per channel pair. Throws InputError on length
// mismatch or non-finite coordinates.
std::vector<double> rope_phases(const FrequencyPlan& plan, std::span<const double> coords);

RotationCoefficients exact_rotation(std::span<const double> phases);

// Per pair: (a, b) -> (c a - s b, s a + c b). Throws InputError on dimension mismatch.
std::vector<double> apply_coefficients(std::span<const double> vec, std::span<const Phasor> coeffs,
                                       const FrequencyPlan& plan);

inline std::vector<double> apply_coefficients(std::span<const double> vec, const RotationCoefficients& coeffs,
                                              const FrequencyPlan& plan) {
    return apply_coefficients(vec, std::span<const Phasor>(coeffs.pairs), plan);
}

}  // namespace crepe
