#include "seagrid/ensemble.hpp"

#include "seagrid/dataset_io.hpp"
#include "seagrid/errors.hpp"
#include "seagrid/losses.hpp"

#include <cmath>
#include <numeric>

namespace seagrid {

NormMode parse_norm_mode(const std::string& name) {
    if (name == "l2") return NormMode::L2;
    if (name == "maxabs") return NormMode::MaxAbs;
    throw UsageError("unknown ensemble normalisation '" + name + "' (expected l2|maxabs)");
}

std::vector<double> EnsembleConfig::resolved_weights(std::size_t members) const {
    if (weights.empty()) return std::vector<double>(members, 1.0 / static_cast<double>(members));
    if (weights.size() != members) {
        throw UsageError("ensemble has " + std::to_string(members) + " members but " + std::to_string(weights.size()) +
                         " weights");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw UsageError("ensemble weights must be positive");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw UsageError("ensemble weights must sum to 1");
    return weights;
}

Eigen::VectorXd normalize_logits(const Eigen::VectorXd& logits, NormMode mode) {
    const double scale = mode == NormMode::L2 ? logits.norm() : logits.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) throw NumericError("cannot normalise an all-zero logit vector");
    return logits / scale;
}

Eigen::VectorXd ensemble_predict(std::span<const Eigen::VectorXd> member_logits, const EnsembleConfig& cfg) {
    if (member_logits.empty()) throw DataError("ensemble_predict: no members");
    const auto w = cfg.resolved_weights(member_logits.size());
    Eigen::VectorXd fused = Eigen::VectorXd::Zero(member_logits.front().size());
    for (std::size_t i = 0; i < member_logits.size(); ++i) {
        if (member_logits[i].size() != fused.size()) throw DataError("ensemble members disagree on class count");
        fused += w[i] * normalize_logits(member_logits[i], cfg.mode);
    }
    return softmax(fused);
}

Eigen::VectorXd ensemble_predict(const Eigen::VectorXd& logits_a, const Eigen::VectorXd& logits_b,
                                 const EnsembleConfig& cfg) {
    const Eigen::VectorXd both[] = {logits_a, logits_b};
    return ensemble_predict(std::span<const Eigen::VectorXd>(both), cfg);
}

std::vector<std::vector<double>> predict_patches(std::span<const Patch> patches,
                                                 std::span<const EnsembleMember> members,
                                                 const EnsembleConfig& cfg) {
    if (members.empty()) throw DataError("predict: no classifiers given");
    const int classes = members.front().model->num_classes();
    for (const auto& m : members) {
        if (m.model->num_classes() != classes) {
            throw DataError("ensemble members disagree on class count (" + std::to_string(classes) + " vs " +
                            std::to_string(m.model->num_classes()) + ")");
        }
    }
    std::vector<Matrix> logits;
    for (const auto& m : members) logits.push_back(predict_logits(*m.model, m.encoder->encode_all(patches)));

    std::vector<std::vector<double>> probs;
    probs.reserve(patches.size());
    std::vector<Eigen::VectorXd> per_member(members.size());
    for (std::size_t i = 0; i < patches.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        Eigen::VectorXd p;
        if (members.size() == 1) {
            p = softmax(logits.front().row(row).transpose());
        } else {
            for (std::size_t k = 0; k < members.size(); ++k) per_member[k] = logits[k].row(row).transpose();
            p = ensemble_predict(per_member, cfg);
        }
        probs.emplace_back(p.data(), p.data() + p.size());
    }
    return probs;
}

ClassMask predict_mask(const LabeledImage& image, GridSpec grid, std::span<const EnsembleMember> members,
                       const EnsembleConfig& cfg) {
    const auto patches = tile_image(image, grid);
    return reassemble_mask(predict_patches(patches, members, cfg), grid, image.source_id);
}

}  // namespace seagrid
