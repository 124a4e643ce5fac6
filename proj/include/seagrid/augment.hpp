#pragma once

#include "seagrid/image.hpp"

namespace seagrid {

/// Stochastic patch transforms. Probabilities are per-transform application rates;
/// amplitudes are symmetric ranges (factor drawn from [1-a, 1+a], hue shift from [-a, a]
/// of a full turn).
struct AugConfig {
    double hflip_p = 0.5;
    double vflip_p = 0.5;

    double jitter_p = 0.8;
    double brightness = 0.2;
    double contrast = 0.2;
    double saturation = 0.2;
    double hue = 0.2;
    double channel_scale = 0.0;   // independent per-channel gain amplitude

    double blur_p = 0.5;
    double blur_sigma_max = 1.5;  // sigma drawn uniformly from [0, max]

    double scale_p = 0.0;         // x/y zoom about the centre, dims preserved
    double scale_range = 0.2;

    // Random crop to (crop_h, crop_w) applied first; 0 disables.
    int crop_h = 0;
    int crop_w = 0;

    /// Every probability zero, no crop.
    static AugConfig none();
    /// Throws UsageError if a probability is outside [0,1] or an amplitude is negative.
    void validate() const;
};

Image flip_horizontal(const Image& image);
Image flip_vertical(const Image& image);
Image gaussian_blur(const Image& image, double sigma);
/// Bilinear resampling with half-pixel centres; identity when sizes match.
Image resize_bilinear(const Image& image, int height, int width);

/// Contiguous sub-block at a uniformly drawn position. Throws DataError if too large.
Image random_crop(const Image& image, int height, int width, Rng& rng);
Patch random_crop(const Patch& patch, int height, int width, Rng& rng);

/// Applies crop, flips, colour jitter, zoom and blur (in that order); output clamped to [0,1].
Patch augment(const Patch& patch, const AugConfig& cfg, Rng& rng);

}  // namespace seagrid
