#include "seagrid/pretext.hpp"

#include "seagrid/encoder.hpp"
#include "seagrid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

namespace seagrid {

namespace {

AugConfig view_config(const Patch& patch, const PretextConfig& cfg) {
    AugConfig aug = cfg.augment;
    if (cfg.crop_fraction > 0.0) {
        aug.crop_h = std::clamp(static_cast<int>(std::lround(patch.pixels.height * cfg.crop_fraction)), 1,
                                patch.pixels.height);
        aug.crop_w = std::clamp(static_cast<int>(std::lround(patch.pixels.width * cfg.crop_fraction)), 1,
                                patch.pixels.width);
    } else {
        aug.crop_h = aug.crop_w = 0;
    }
    return aug;
}

}  // namespace

std::pair<Patch, Patch> make_views(const Patch& patch, const PretextConfig& cfg, Rng& rng) {
    if (cfg.crop_fraction < 0.0 || cfg.crop_fraction > 1.0) throw UsageError("crop_fraction must lie in [0,1]");
    const AugConfig aug = view_config(patch, cfg);
    Patch a = augment(patch, aug, rng);
    Patch b = augment(patch, aug, rng);
    return {std::move(a), std::move(b)};
}

PretextResult pretrain(BackboneParams& backbone, std::span<const Patch> patches, const PretextConfig& cfg, Rng& rng) {
    if (patches.size() < 2) throw DataError("pretrain needs at least two patches");
    if (cfg.batch < 1) throw UsageError("pretrain batch must be positive");
    if (backbone.is_identity()) throw UsageError("pretrain needs a trainable backbone");
    const PixelEncoder encoder(cfg.input_size);
    if (encoder.dim() != backbone.input_dim()) throw UsageError("pretrain input_size does not match the backbone");

    PretextResult result;
    result.adam = AdamState(cfg.lr);
    std::vector<std::size_t> order(patches.size());
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        int steps = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
            Matrix views(static_cast<Eigen::Index>(2 * (end - start)), encoder.dim());
            for (std::size_t b = start; b < end; ++b) {
                auto [va, vb] = make_views(patches[order[b]], cfg, rng);
                const auto row = static_cast<Eigen::Index>(2 * (b - start));
                views.row(row) = encoder.encode(va).transpose();
                views.row(row + 1) = encoder.encode(vb).transpose();
            }
            BackboneOutput out = extract_features(backbone, views, Mode::Train);
            LossGrad lg = nt_xent(out.features, cfg.temperature);
            BackboneGrads grads = backbone_backward(backbone, out.cache, lg.grad);
            clip_global_norm(grads.params, cfg.clip_norm);
            auto params = backbone.parameters();
            adam_step(params, grads.params, result.adam);
            loss_sum += lg.loss;
            ++steps;
        }
        const double mean = loss_sum / steps;
        if (!std::isfinite(mean)) throw NumericError("pretrain: non-finite loss at epoch " + std::to_string(epoch));
        result.loss_curve.push_back(mean);
        spdlog::debug("pretext epoch {}: loss {:.6f}", epoch, mean);
    }
    return result;
}

}  // namespace seagrid
