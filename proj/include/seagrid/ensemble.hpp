#pragma once

#include "seagrid/encoder.hpp"
#include "seagrid/image.hpp"
#include "seagrid/model.hpp"

#include <span>
#include <string>
#include <vector>

namespace seagrid {

enum class NormMode { L2, MaxAbs };
NormMode parse_norm_mode(const std::string& name);

struct EnsembleConfig {
    std::vector<double> weights;  // empty = equal weights
    NormMode mode = NormMode::L2;

    /// Weights for `members` classifiers; throws UsageError unless positive and summing to 1.
    std::vector<double> resolved_weights(std::size_t members) const;
};

/// Divides by the Euclidean norm (L2) or the largest magnitude (MaxAbs).
/// Throws NumericError for the zero vector.
Eigen::VectorXd normalize_logits(const Eigen::VectorXd& logits, NormMode mode = NormMode::L2);

/// softmax(sum_i w_i * normalize(logits_i)).
Eigen::VectorXd ensemble_predict(std::span<const Eigen::VectorXd> member_logits, const EnsembleConfig& cfg);
Eigen::VectorXd ensemble_predict(const Eigen::VectorXd& logits_a, const Eigen::VectorXd& logits_b,
                                 const EnsembleConfig& cfg = {});

struct EnsembleMember {
    const Model* model = nullptr;
    const PatchEncoder* encoder = nullptr;
};

/// Per-patch class distributions for pre-tiled patches. A single member yields its plain
/// softmax; two or more are fused with ensemble_predict.
std::vector<std::vector<double>> predict_patches(std::span<const Patch> patches,
                                                 std::span<const EnsembleMember> members,
                                                 const EnsembleConfig& cfg);

/// Tile, classify every patch, fuse members, reassemble.
ClassMask predict_mask(const LabeledImage& image, GridSpec grid, std::span<const EnsembleMember> members,
                       const EnsembleConfig& cfg = {});

}  // namespace seagrid
