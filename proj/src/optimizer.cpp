#include "seagrid/optimizer.hpp"

#include "seagrid/errors.hpp"

#include <cmath>

namespace seagrid {

bool operator==(const AdamState& a, const AdamState& b) {
    if (a.lr != b.lr || a.beta1 != b.beta1 || a.beta2 != b.beta2 || a.eps != b.eps || a.step != b.step ||
        a.m.size() != b.m.size() || a.v.size() != b.v.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.m.size(); ++i) {
        if (a.m[i].rows() != b.m[i].rows() || a.m[i].cols() != b.m[i].cols() || a.m[i] != b.m[i]) return false;
        if (a.v[i].rows() != b.v[i].rows() || a.v[i].cols() != b.v[i].cols() || a.v[i] != b.v[i]) return false;
    }
    return true;
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state) {
    if (params.size() != grads.size()) throw DataError("adam_step: parameter/gradient count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->rows() != grads[i].rows() || params[i]->cols() != grads[i].cols()) {
            throw DataError("adam_step: gradient shape mismatch for tensor " + std::to_string(i));
        }
        if (!grads[i].allFinite()) throw NumericError("adam_step: non-finite gradient in tensor " + std::to_string(i));
    }
    if (state.m.empty()) {
        for (auto* p : params) {
            state.m.push_back(Matrix::Zero(p->rows(), p->cols()));
            state.v.push_back(Matrix::Zero(p->rows(), p->cols()));
        }
    } else if (state.m.size() != params.size()) {
        throw DataError("adam_step: optimizer state was built for a different parameter set");
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i].cwiseProduct(grads[i]);
        const auto m_hat = state.m[i].array() / c1;
        const auto v_hat = state.v[i].array() / c2;
        params[i]->array() -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
}

double clip_global_norm(std::span<Matrix> grads, double max_norm) {
    double sq = 0.0;
    for (const auto& g : grads) sq += g.squaredNorm();
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (auto& g : grads) g *= scale;
    }
    return norm;
}

}  // namespace seagrid
