#pragma once

#include "seagrid/augment.hpp"
#include "seagrid/ensemble.hpp"
#include "seagrid/image.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace seagrid {

/// Pipeline settings read from a flat `key = value` file ('#' starts a comment).
/// Unknown or repeated keys are rejected. See README for the key list.
struct PipelineConfig {
    GridSpec grid{5, 8};
    std::optional<std::vector<double>> class_weights;  // default: seagrass weights for 4 classes, else ones
    double lr = 1e-5;
    int epochs = 150;
    int batch_images = 3;
    int batch_patches = 32;
    int feature_dim = 64;
    std::vector<int> hidden{256, 128};
    int head_width = 512;
    double dropout = 0.15;
    int input_size = 16;
    std::string init = "uniform";
    std::uint64_t seed = 0;
    double clip_norm = 0.0;
    std::optional<std::size_t> template_cap;

    NormMode ensemble_mode = NormMode::L2;
    std::vector<double> ensemble_weights;

    int pretrain_epochs = 20;
    int pretrain_batch = 8;
    double pretrain_lr = 3e-4;
    double temperature = 0.07;
    double crop_fraction = 0.75;
    AugConfig augment;  // pretext views

    std::string scenario = "deepseagrass";
    std::string prompts;   // optional JSON prompt-group file
    int fish_class = -1;   // -1: last class when a fish group is configured
    std::uint64_t mock_seed = 0;

    bool finetune_augment = true;
    bool color_correct = false;

    std::vector<double> weights_for(int num_classes) const;
};

PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& file);

/// Colour, contrast, blur, brightness/hue/saturation, x/y zoom and left/right flips.
AugConfig finetune_augmentation();

}  // namespace seagrid
