#pragma once

#include "seagrid/augment.hpp"
#include "seagrid/losses.hpp"
#include "seagrid/model.hpp"
#include "seagrid/optimizer.hpp"

#include <span>
#include <utility>
#include <vector>

namespace seagrid {

struct PretextConfig {
    int epochs = 20;
    int batch = 8;
    double lr = 3e-4;
    double temperature = kDefaultTemperature;
    int input_size = 16;
    // Side of the random crop as a fraction of the patch side; 0 disables cropping.
    double crop_fraction = 0.75;
    AugConfig augment;  // crop fields are derived from crop_fraction per patch
    double clip_norm = 0.0;
};

/// Two independently augmented views of one patch.
std::pair<Patch, Patch> make_views(const Patch& patch, const PretextConfig& cfg, Rng& rng);

struct PretextResult {
    std::vector<double> loss_curve;  // mean batch loss per epoch
    AdamState adam;
};

/// Label-free contrastive training of the backbone: per epoch shuffle, batch B patches,
/// build 2B interleaved views, NT-Xent on the backbone output, one Adam step per batch.
PretextResult pretrain(BackboneParams& backbone, std::span<const Patch> patches, const PretextConfig& cfg, Rng& rng);

}  // namespace seagrid
