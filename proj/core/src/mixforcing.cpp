#include "crepe/mixforcing.hpp"

#include <cmath>
#include <string>

#include "crepe/errors.hpp"
#include "crepe/random.hpp"

namespace crepe {

MixSchedule MixSchedule::for_mode(MixMode mode) {
    MixSchedule s;
    s.mode = mode;
    s.floor = mode == MixMode::block_frame ? 0.1 : 0.5;
    return s;
}

void MixSchedule::validate() const {
    if (!(decay_start < decay_end) || decay_start < 0) {
        throw ConfigError("MixSchedule: need 0 <= decay_start < decay_end");
    }
    if (!(floor >= 0.0 && floor <= 1.0)) {
        throw ConfigError("MixSchedule: floor must lie in [0, 1]");
    }
}

double substitution_probability(const MixSchedule& schedule, long step) {
    schedule.validate();
    if (step <= schedule.decay_start) {
        return 1.0;
    }
    if (step >= schedule.decay_end) {
        return schedule.floor;
    }
    const double t = static_cast<double>(step - schedule.decay_start) /
                     static_cast<double>(schedule.decay_end - schedule.decay_start);
    return 1.0 + (schedule.floor - 1.0) * t;
}

std::vector<std::uint8_t> sample_mask(double p, int granules, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InputError("sample_mask: probability must lie in [0, 1]");
    }
    if (granules < 0) {
        throw InputError("sample_mask: granule count must be non-negative");
    }
    Rng rng(seed);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(granules));
    for (auto& m : mask) {
        m = rng.bernoulli(p) ? 1 : 0;
    }
    return mask;
}

MixForcingState::MixForcingState(const MixSchedule& schedule, long step, int frames, std::uint64_t seed,
                                 double teacher_sigma)
    : step_(step),
      probability_(substitution_probability(schedule, step)),
      teacher_sigma_(teacher_sigma),
      mode_(schedule.mode) {
    if (frames < 1) {
        throw InputError("MixForcingState: need at least one frame");
    }
    mask_ = sample_mask(probability_, mode_ == MixMode::block_frame ? frames : 1, seed);
}

bool MixForcingState::substitute(int frame) const {
    if (mode_ == MixMode::video) {
        return mask_.front() != 0;
    }
    if (frame < 0 || frame >= static_cast<int>(mask_.size())) {
        throw InputError("MixForcingState: frame " + std::to_string(frame) + " out of range");
    }
    return mask_[static_cast<std::size_t>(frame)] != 0;
}

RadialInterval effective_interval(const RadialInterval& pred, std::optional<double> gt_normalized, bool m, bool v,
                                  double teacher_sigma) {
    if (v && (!gt_normalized || !std::isfinite(*gt_normalized) || !(*gt_normalized > 0.0))) {
        throw InputError("effective_interval: a valid ray needs a finite positive normalized target");
    }
    if (!(m && v)) {
        return pred;
    }
    return clamp_interval(std::log(*gt_normalized), teacher_sigma);
}

std::vector<RadialInterval> external_override(const std::vector<RadialInterval>& pred, const RadialMap& external,
                                              double near_stat, double r_max, int patch_size,
                                              double teacher_sigma) {
    const TokenTargets pooled = normalize_and_pool(external, validity_mask(external, r_max), near_stat, patch_size);
    if (pooled.size() != pred.size()) {
        throw InputError("external_override: external map pools to " + std::to_string(pooled.size()) +
                         " tokens, prediction grid has " + std::to_string(pred.size()));
    }
    std::vector<RadialInterval> out = pred;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const bool valid = pooled.mask[i] != 0;
        out[i] = effective_interval(pred[i], valid ? std::optional<double>(pooled.targets[i]) : std::nullopt, true,
                                    valid, teacher_sigma);
    }
    return out;
}

}  // namespace crepe
