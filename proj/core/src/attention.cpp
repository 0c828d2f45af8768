#include "crepe/attention.hpp"

#include <cmath>
#include <string>

#include "crepe/errors.hpp"
#include "crepe/random.hpp"

namespace crepe {

namespace {

Eigen::MatrixXd uniform_matrix(int rows, int cols, double bound, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) {
            m(i, j) = rng.uniform(-bound, bound);
        }
    }
    return m;
}

}  // namespace

AttentionParams attention_init(int d_model, int head_dim, std::uint64_t seed) {
    if (d_model < 1 || head_dim < 2 || head_dim % 2 != 0) {
        throw ConfigError("attention_init: need d_model >= 1 and an even head dim");
    }
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(d_model));
    AttentionParams p;
    p.wq = uniform_matrix(d_model, head_dim, bound, rng);
    p.wk = uniform_matrix(d_model, head_dim, bound, rng);
    p.wv = uniform_matrix(d_model, head_dim, bound, rng);
    p.wo = Eigen::MatrixXd::Zero(head_dim, d_model);
    return p;
}

TokenBatch::TokenBatch(int frames, int patches_per_frame, int d_model)
    : frames_(frames), patches_(patches_per_frame), d_model_(d_model) {
    if (frames < 1 || patches_per_frame < 1 || d_model < 1) {
        throw InputError("TokenBatch: grid and feature sizes must be positive");
    }
    features_.assign(static_cast<std::size_t>(frames) * patches_per_frame, Eigen::VectorXd::Zero(d_model));
}

Eigen::VectorXd& TokenBatch::at(int frame, int patch) {
    return features_[static_cast<std::size_t>(frame) * patches_ + patch];
}

const Eigen::VectorXd& TokenBatch::at(int frame, int patch) const {
    return features_[static_cast<std::size_t>(frame) * patches_ + patch];
}

KeyCoefficientTable::KeyCoefficientTable(int frames, int patches_per_frame)
    : frames_(frames), patches_(patches_per_frame) {
    entries_.resize(static_cast<std::size_t>(frames) * frames * patches_per_frame);
}

std::size_t KeyCoefficientTable::index(int q, int s, int p) const {
    if (q < 0 || q >= frames_ || s < 0 || s >= frames_ || p < 0 || p >= patches_) {
        throw InputError("KeyCoefficientTable: index out of range");
    }
    return (static_cast<std::size_t>(q) * frames_ + s) * patches_ + p;
}

void KeyCoefficientTable::set(int query_frame, int source_frame, int patch, ModulationCoefficients coeffs) {
    entries_[index(query_frame, source_frame, patch)] = std::move(coeffs);
}

bool KeyCoefficientTable::has(int query_frame, int source_frame, int patch) const {
    return entries_[index(query_frame, source_frame, patch)].has_value();
}

const ModulationCoefficients& KeyCoefficientTable::get(int query_frame, int source_frame, int patch) const {
    const auto& e = entries_[index(query_frame, source_frame, patch)];
    if (!e) {
        throw InputError("missing modulation coefficients for query frame " + std::to_string(query_frame) +
                         ", key (" + std::to_string(source_frame) + ", " + std::to_string(patch) + ")");
    }
    return *e;
}

Eigen::VectorXd modulate_key(const Eigen::VectorXd& key, std::span<const Phasor> coeffs, const FrequencyPlan& plan) {
    if (key.size() != plan.total_dim() || static_cast<int>(coeffs.size()) != plan.num_pairs()) {
        throw InputError("modulate_key: key/coefficient dims do not match the frequency plan");
    }
    Eigen::VectorXd out(key.size());
    for (std::size_t p = 0; p < coeffs.size(); ++p) {
        const auto i = static_cast<Eigen::Index>(2 * p);
        const double a = key(i);
        const double b = key(i + 1);
        out(i) = coeffs[p].c * a - coeffs[p].s * b;
        out(i + 1) = coeffs[p].s * a + coeffs[p].c * b;
    }
    return out;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

namespace {

void check_shapes(const AttentionParams& params, const TokenBatch& batch, const KeyCoefficientTable& coeffs,
                  const FrequencyPlan& plan) {
    if (params.head_dim() != plan.total_dim()) {
        throw InputError("attention: head dim " + std::to_string(params.head_dim()) +
                         " does not match plan total_dim " + std::to_string(plan.total_dim()));
    }
    if (params.d_model() != batch.d_model() || params.wo.rows() != params.head_dim() ||
        params.wo.cols() != params.d_model()) {
        throw InputError("attention: parameter shapes do not match the token batch");
    }
    if (coeffs.frames() != batch.frames() || coeffs.patches() != batch.patches()) {
        throw InputError("attention: coefficient table does not match the token grid");
    }
}

Eigen::VectorXd logits_for(const AttentionParams& params, const TokenBatch& batch, const KeyCoefficientTable& coeffs,
                           const FrequencyPlan& plan, const std::vector<Eigen::VectorXd>& keys, int query_frame,
                           const Eigen::VectorXd& query) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(params.head_dim()));
    Eigen::VectorXd logits(batch.size());
    for (int s = 0; s < batch.frames(); ++s) {
        for (int p = 0; p < batch.patches(); ++p) {
            const int j = s * batch.patches() + p;
            const auto& m = coeffs.get(query_frame, s, p);
            logits(j) = query.dot(modulate_key(keys[static_cast<std::size_t>(j)], m.pairs, plan)) * scale;
        }
    }
    return logits;
}

std::vector<Eigen::VectorXd> project_all(const Eigen::MatrixXd& w, const TokenBatch& batch) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(batch.size()));
    for (int j = 0; j < batch.size(); ++j) {
        if (!batch.at(j).allFinite()) {
            throw InputError("attention: token features must be finite");
        }
        out.push_back(w.transpose() * batch.at(j));
    }
    return out;
}

}  // namespace

Eigen::VectorXd attention_logits(const AttentionParams& params, const TokenBatch& batch,
                                 const KeyCoefficientTable& coeffs, const FrequencyPlan& plan, int query_frame,
                                 int query_patch) {
    check_shapes(params, batch, coeffs, plan);
    const auto keys = project_all(params.wk, batch);
    const Eigen::VectorXd query = params.wq.transpose() * batch.at(query_frame, query_patch);
    return logits_for(params, batch, coeffs, plan, keys, query_frame, query);
}

TokenBatch attention_forward(const AttentionParams& params, const TokenBatch& batch,
                             const KeyCoefficientTable& coeffs, const FrequencyPlan& plan) {
    check_shapes(params, batch, coeffs, plan);
    const auto keys = project_all(params.wk, batch);
    const auto values = project_all(params.wv, batch);

    TokenBatch out = batch;
    for (int q = 0; q < batch.frames(); ++q) {
        for (int p = 0; p < batch.patches(); ++p) {
            const Eigen::VectorXd query = params.wq.transpose() * batch.at(q, p);
            const Eigen::VectorXd weights = softmax(logits_for(params, batch, coeffs, plan, keys, q, query));
            Eigen::VectorXd o = Eigen::VectorXd::Zero(params.head_dim());
            for (int j = 0; j < batch.size(); ++j) {
                o += weights(j) * values[static_cast<std::size_t>(j)];
            }
            out.at(q, p) = batch.at(q, p) + params.wo.transpose() * o;
        }
    }
    return out;
}

}  // namespace crepe
