#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

namespace seagrid {

using ClassId = int;
using Rng = std::mt19937_64;

/// Interleaved RGB raster, values in [0,1], row-major (y, x, channel).
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Image() = default;
    Image(int h, int w, float fill = 0.0f)
        : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, fill) {}

    float& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    float at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    bool empty() const { return data.empty(); }
    friend bool operator==(const Image&, const Image&) = default;
};

struct GridSpec {
    int rows = 1;
    int cols = 1;

    int cells() const { return rows * cols; }
    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Parses "RxC" (e.g. "5x8"). Throws UsageError on malformed input.
GridSpec parse_grid(const std::string& text);
std::string to_string(const GridSpec& grid);

struct LabeledImage {
    Image pixels;
    ClassId label = 0;
    std::string source_id;
};

struct Patch {
    Image pixels;
    int row = 0;
    int col = 0;
    std::string parent_id;
    ClassId inherited_label = 0;
};

/// Coarse segmentation: one class per grid cell plus the per-cell distribution.
struct ClassMask {
    std::string source_id;
    int rows = 0;
    int cols = 0;
    std::vector<ClassId> labels;              // rows*cols, row-major
    std::vector<std::vector<double>> probs;   // rows*cols vectors of length C

    ClassId label(int r, int c) const { return labels[static_cast<std::size_t>(r) * cols + c]; }
};

}  // namespace seagrid
