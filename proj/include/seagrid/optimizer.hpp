#pragma once

#include "seagrid/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace seagrid {

struct AdamState {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    std::vector<Matrix> m;  // first moments, one per parameter tensor
    std::vector<Matrix> v;  // second moments

    explicit AdamState(double learning_rate = 1e-5) : lr(learning_rate) {}
    friend bool operator==(const AdamState& a, const AdamState& b);
};

/// One bias-corrected Adam update. Moments are lazily sized on the first call.
/// Throws NumericError on non-finite gradients and DataError on shape mismatch.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state);

/// Scales gradients in place so their global L2 norm is at most max_norm; returns the
/// norm before clipping. max_norm <= 0 disables clipping.
double clip_global_norm(std::span<Matrix> grads, double max_norm);

}  // namespace seagrid
