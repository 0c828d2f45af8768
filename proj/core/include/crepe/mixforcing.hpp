#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "crepe/phasor.hpp"
#include "crepe/radial_supervision.hpp"

namespace crepe {

enum class MixMode { block_frame, video };

inline constexpr double kTeacherSigma = 0.1;

struct MixSchedule {
    int decay_start = 1000;
    int decay_end = 7000;
    double floor = 0.1;
    MixMode mode = MixMode::block_frame;

    // Floors 0.1 (block_frame) and 0.5 (video).
    static MixSchedule for_mode(MixMode mode);
    void validate() const;
};

// 1 up to and including decay_start, linear to floor at decay_end, floor afterwards.
double substitution_probability(const MixSchedule& schedule, long step);

// Independent Bernoulli(p) per granule. Throws InputError for p outside [0, 1].
std::vector<std::uint8_t> sample_mask(double p, int granules, std::uint64_t seed);

// Built once per forward pass; every CRePE layer reads the same mask.
class MixForcingState {
public:
    MixForcingState(const MixSchedule& schedule, long step, int frames, std::uint64_t seed,
                    double teacher_sigma = kTeacherSigma);

    long step() const { return step_; }
    double probability() const { return probability_; }
    double teacher_sigma() const { return teacher_sigma_; }
    MixMode mode() const { return mode_; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    // One granule per frame in block_frame mode, a single granule for the clip in video mode.
    bool substitute(int frame) const;

private:
    long step_;
    double probability_;
    double teacher_sigma_;
    MixMode mode_;
    std::vector<std::uint8_t> mask_;
};

// (log r_hat, teacher_sigma) iff m && v, clamped into the head's log range; otherwise pred.
// Throws InputError when v is set but r_hat is missing, non-finite, or non-positive.
RadialInterval effective_interval(const RadialInterval& pred, std::optional<double> gt_normalized, bool m, bool v,
                                  double teacher_sigma = kTeacherSigma);

// Tokens of `pred` (frames x rows x cols) with a valid pooled external value take the teacher
// interval (log(value / near_stat), teacher_sigma); everything else keeps the prediction.
std::vector<RadialInterval> external_override(const std::vector<RadialInterval>& pred, const RadialMap& external,
                                              double near_stat, double r_max, int patch_size,
                                              double teacher_sigma = kTeacherSigma);

}  // namespace crepe
