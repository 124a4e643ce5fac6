#include "seagrid/augment.hpp"

#include "seagrid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace seagrid {

AugConfig AugConfig::none() {
    AugConfig cfg;
    cfg.hflip_p = 0.0;
    cfg.vflip_p = 0.0;
    cfg.jitter_p = 0.0;
    cfg.blur_p = 0.0;
    cfg.scale_p = 0.0;
    cfg.crop_h = 0;
    cfg.crop_w = 0;
    return cfg;
}

void AugConfig::validate() const {
    for (double p : {hflip_p, vflip_p, jitter_p, blur_p, scale_p}) {
        if (!(p >= 0.0 && p <= 1.0)) throw UsageError("augmentation probability outside [0,1]");
    }
    for (double a : {brightness, contrast, saturation, hue, channel_scale, blur_sigma_max, scale_range}) {
        if (!(a >= 0.0)) throw UsageError("augmentation amplitude must be non-negative");
    }
    if (brightness > 1.0 || contrast > 1.0 || saturation > 1.0 || channel_scale > 1.0 || scale_range >= 1.0) {
        throw UsageError("augmentation factor amplitude must be below 1");
    }
    if (crop_h < 0 || crop_w < 0 || (crop_h == 0) != (crop_w == 0)) {
        throw UsageError("crop size must be both zero or both positive");
    }
}

Image flip_horizontal(const Image& image) {
    Image out(image.height, image.width);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) out.at(y, image.width - 1 - x, c) = image.at(y, x, c);
        }
    }
    return out;
}

Image flip_vertical(const Image& image) {
    Image out(image.height, image.width);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) out.at(image.height - 1 - y, x, c) = image.at(y, x, c);
        }
    }
    return out;
}

Image gaussian_blur(const Image& image, double sigma) {
    if (sigma <= 1e-6 || image.empty()) return image;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        total += kernel[i + radius];
    }
    for (auto& k : kernel) k /= total;

    // Separable pass with edge replication.
    Image tmp(image.height, image.width);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    const int xx = std::clamp(x + i, 0, image.width - 1);
                    acc += kernel[i + radius] * image.at(y, xx, c);
                }
                tmp.at(y, x, c) = static_cast<float>(acc);
            }
        }
    }
    Image out(image.height, image.width);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    const int yy = std::clamp(y + i, 0, image.height - 1);
                    acc += kernel[i + radius] * tmp.at(yy, x, c);
                }
                out.at(y, x, c) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

namespace {

float sample_bilinear(const Image& image, double sy, double sx, int c) {
    sy = std::clamp(sy, 0.0, static_cast<double>(image.height - 1));
    sx = std::clamp(sx, 0.0, static_cast<double>(image.width - 1));
    const int y0 = static_cast<int>(std::floor(sy));
    const int x0 = static_cast<int>(std::floor(sx));
    const int y1 = std::min(y0 + 1, image.height - 1);
    const int x1 = std::min(x0 + 1, image.width - 1);
    const double fy = sy - y0, fx = sx - x0;
    const double top = (1.0 - fx) * image.at(y0, x0, c) + fx * image.at(y0, x1, c);
    const double bottom = (1.0 - fx) * image.at(y1, x0, c) + fx * image.at(y1, x1, c);
    return static_cast<float>((1.0 - fy) * top + fy * bottom);
}

double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool chance(Rng& rng, double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    const double d = mx - mn;
    v = mx;
    s = mx > 0.0 ? d / mx : 0.0;
    if (d <= 0.0) {
        h = 0.0;
    } else if (mx == r) {
        h = std::fmod((g - b) / d + 6.0, 6.0) / 6.0;
    } else if (mx == g) {
        h = ((b - r) / d + 2.0) / 6.0;
    } else {
        h = ((r - g) / d + 4.0) / 6.0;
    }
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    h = h - std::floor(h);
    const double hh = h * 6.0;
    const int sector = static_cast<int>(hh) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1.0 - s), q = v * (1.0 - s * f), t = v * (1.0 - s * (1.0 - f));
    switch (sector) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

void clamp01(Image& image) {
    for (auto& v : image.data) v = std::clamp(v, 0.0f, 1.0f);
}

Image color_jitter(const Image& image, const AugConfig& cfg, Rng& rng) {
    // Factors are drawn unconditionally so the random stream does not depend on pixel data.
    const double bright = uniform(rng, 1.0 - cfg.brightness, 1.0 + cfg.brightness);
    const double contr = uniform(rng, 1.0 - cfg.contrast, 1.0 + cfg.contrast);
    const double sat = uniform(rng, 1.0 - cfg.saturation, 1.0 + cfg.saturation);
    const double hue_shift = uniform(rng, -cfg.hue, cfg.hue);
    double gains[3];
    for (double& g : gains) g = uniform(rng, 1.0 - cfg.channel_scale, 1.0 + cfg.channel_scale);

    Image out = image;
    const std::size_t n = static_cast<std::size_t>(image.height) * image.width;
    double gray_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double px[3];
        for (int c = 0; c < 3; ++c) px[c] = std::clamp(out.data[i * 3 + c] * gains[c] * bright, 0.0, 1.0);
        for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = static_cast<float>(px[c]);
        gray_mean += 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
    if (n > 0) gray_mean /= static_cast<double>(n);

    for (std::size_t i = 0; i < n; ++i) {
        double px[3];
        for (int c = 0; c < 3; ++c) {
            px[c] = std::clamp(gray_mean + contr * (out.data[i * 3 + c] - gray_mean), 0.0, 1.0);
        }
        const double gray = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        for (int c = 0; c < 3; ++c) px[c] = std::clamp(gray + sat * (px[c] - gray), 0.0, 1.0);
        if (hue_shift != 0.0) {
            double h, s, v;
            rgb_to_hsv(px[0], px[1], px[2], h, s, v);
            hsv_to_rgb(h + hue_shift, s, v, px[0], px[1], px[2]);
        }
        for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = static_cast<float>(px[c]);
    }
    return out;
}

Image zoom(const Image& image, double sy, double sx) {
    Image out(image.height, image.width);
    const double cy = 0.5 * image.height, cx = 0.5 * image.width;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const double src_y = cy + (y + 0.5 - cy) / sy - 0.5;
            const double src_x = cx + (x + 0.5 - cx) / sx - 0.5;
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = sample_bilinear(image, src_y, src_x, c);
        }
    }
    return out;
}

}  // namespace

Image resize_bilinear(const Image& image, int height, int width) {
    if (height < 1 || width < 1) throw DataError("resize target must be positive");
    if (image.height == height && image.width == width) return image;
    if (image.empty()) throw DataError("cannot resize an empty image");
    Image out(height, width);
    const double ry = static_cast<double>(image.height) / height;
    const double rx = static_cast<double>(image.width) / width;
    for (int y = 0; y < height; ++y) {
        const double sy = (y + 0.5) * ry - 0.5;
        for (int x = 0; x < width; ++x) {
            const double sx = (x + 0.5) * rx - 0.5;
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = sample_bilinear(image, sy, sx, c);
        }
    }
    return out;
}

Image random_crop(const Image& image, int height, int width, Rng& rng) {
    if (height < 1 || width < 1 || height > image.height || width > image.width) {
        throw DataError("crop " + std::to_string(height) + "x" + std::to_string(width) +
                        " does not fit patch " + std::to_string(image.height) + "x" +
                        std::to_string(image.width));
    }
    const int top = std::uniform_int_distribution<int>(0, image.height - height)(rng);
    const int left = std::uniform_int_distribution<int>(0, image.width - width)(rng);
    Image out(height, width);
    for (int y = 0; y < height; ++y) {
        const float* from = &image.data[(static_cast<std::size_t>(top + y) * image.width + left) * 3];
        std::copy(from, from + static_cast<std::size_t>(width) * 3,
                  &out.data[static_cast<std::size_t>(y) * width * 3]);
    }
    return out;
}

Patch random_crop(const Patch& patch, int height, int width, Rng& rng) {
    Patch out = patch;
    out.pixels = random_crop(patch.pixels, height, width, rng);
    return out;
}

Patch augment(const Patch& patch, const AugConfig& cfg, Rng& rng) {
    cfg.validate();
    Patch out = patch;
    Image& img = out.pixels;
    if (cfg.crop_h > 0) img = random_crop(img, cfg.crop_h, cfg.crop_w, rng);
    if (chance(rng, cfg.hflip_p)) img = flip_horizontal(img);
    if (chance(rng, cfg.vflip_p)) img = flip_vertical(img);
    if (chance(rng, cfg.jitter_p)) img = color_jitter(img, cfg, rng);
    if (chance(rng, cfg.scale_p)) {
        const double sy = uniform(rng, 1.0 - cfg.scale_range, 1.0 + cfg.scale_range);
        const double sx = uniform(rng, 1.0 - cfg.scale_range, 1.0 + cfg.scale_range);
        img = zoom(img, sy, sx);
    }
    if (chance(rng, cfg.blur_p)) img = gaussian_blur(img, uniform(rng, 0.0, cfg.blur_sigma_max));
    clamp01(img);
    return out;
}

}  // namespace seagrid
