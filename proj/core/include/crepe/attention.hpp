#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "crepe/phasor.hpp"
#include "crepe/rope.hpp"

namespace crepe {

// Single-head CRePE attention branch. Projections map features (d_model) to the head dim d.
struct AttentionParams {
    Eigen::MatrixXd wq;  // d_model x d
    Eigen::MatrixXd wk;  // d_model x d
    Eigen::MatrixXd wv;  // d_model x d
    Eigen::MatrixXd wo;  // d x d_model, zero at init

    int d_model() const { return static_cast<int>(wq.rows()); }
    int head_dim() const { return static_cast<int>(wq.cols()); }
};

// Q/K/V uniform fan-in init, wo zero.
AttentionParams attention_init(int d_model, int head_dim, std::uint64_t seed);

// Features indexed by (frame, patch), row-major over frames.
class TokenBatch {
public:
    TokenBatch(int frames, int patches_per_frame, int d_model);

    int frames() const { return frames_; }
    int patches() const { return patches_; }
    int size() const { return frames_ * patches_; }
    int d_model() const { return d_model_; }

    Eigen::VectorXd& at(int frame, int patch);
    const Eigen::VectorXd& at(int frame, int patch) const;
    const Eigen::VectorXd& at(int index) const { return features_[static_cast<std::size_t>(index)]; }

private:
    int frames_;
    int patches_;
    int d_model_;
    std::vector<Eigen::VectorXd> features_;
};

// Modulation for each (query frame q, key token (s, p)) pair.
class KeyCoefficientTable {
public:
    KeyCoefficientTable(int frames, int patches_per_frame);

    void set(int query_frame, int source_frame, int patch, ModulationCoefficients coeffs);
    // Throws InputError when the entry was never set.
    const ModulationCoefficients& get(int query_frame, int source_frame, int patch) const;
    bool has(int query_frame, int source_frame, int patch) const;

    int frames() const { return frames_; }
    int patches() const { return patches_; }

private:
    std::size_t index(int q, int s, int p) const;

    int frames_;
    int patches_;
    std::vector<std::optional<ModulationCoefficients>> entries_;
};

// Per-pair conformal map (c a - s b, s a + c b).
Eigen::VectorXd modulate_key(const Eigen::VectorXd& key, std::span<const Phasor> coeffs, const FrequencyPlan& plan);

// Pre-softmax scores Q_i . (M_{q<-s,p} K_j) / sqrt(d) for one query token against every key.
Eigen::VectorXd attention_logits(const AttentionParams& params, const TokenBatch& batch,
                                 const KeyCoefficientTable& coeffs, const FrequencyPlan& plan, int query_frame,
                                 int query_patch);

// Row-max-subtracted softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// Residual output h + wo^T (sum_j A_ij V_j) for every token. Throws InputError when any
// required coefficient entry is missing or the head dim does not match the plan.
TokenBatch attention_forward(const AttentionParams& params, const TokenBatch& batch,
                             const KeyCoefficientTable& coeffs, const FrequencyPlan& plan);

}  // namespace crepe
