#pragma once

#include "seagrid/image.hpp"
#include "seagrid/model.hpp"

#include <span>
#include <vector>

namespace seagrid {

/// Per-class multipliers for cross entropy; every entry must be positive.
struct ClassWeights {
    std::vector<double> w;

    /// Background, Ferny, Rounded, Strappy weighting.
    static ClassWeights seagrass_default() { return {{1.0, 1.5, 1.2, 1.2}}; }
    static ClassWeights uniform(int num_classes) { return {std::vector<double>(num_classes, 1.0)}; }
    void validate(int num_classes) const;
};

inline constexpr double kDefaultTemperature = 0.07;

/// Max-subtracted softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits);
double log_sum_exp(const Eigen::VectorXd& values);

struct LossGrad {
    double loss = 0.0;
    Matrix grad;  // same shape as the input
};

/// L = -w[target] * log softmax(logits)[target], gradient w[target] * (softmax - onehot).
LossGrad weighted_ce(const Eigen::VectorXd& logits, ClassId target, const ClassWeights& weights);

/// Batch version: sum_i w[t_i] * nll_i / sum_i w[t_i] (weighted mean over rows).
LossGrad weighted_ce_batch(const Matrix& logits, std::span<const ClassId> targets, const ClassWeights& weights);

/// Contrastive loss over 2B rows where rows (2k, 2k+1) are positive pairs.
/// Per-anchor loss -log(exp(s_ij/t) / sum_{k != i} exp(s_ik/t)) with cosine s, averaged over
/// all 2B anchors. Throws NumericError on a zero-norm row.
LossGrad nt_xent(const Matrix& batch, double temperature = kDefaultTemperature);

}  // namespace seagrid
