#pragma once

#include "seagrid/image.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace seagrid {

struct LoadOptions {
    // When false, class directories that are missing or empty are skipped
    // instead of raising (few-shot fine-tuning uses a subset of classes).
    bool require_all_classes = true;
    // Keep at most this many images per class (first in lexicographic order); 0 = all.
    std::size_t max_per_class = 0;
};

/// Reads a class manifest: one class name per line, line 0 is the background class.
/// Blank lines and lines starting with '#' are ignored.
std::vector<std::string> read_manifest(const std::filesystem::path& file);

/// Loads `root/<ClassName>/<file>` collections. The label of each image is the index
/// of its directory in `class_names`; image files are visited in lexicographic order.
/// source_id is "<ClassName>/<filename>".
std::vector<LabeledImage> load_dataset(const std::filesystem::path& root,
                                       std::span<const std::string> class_names,
                                       const LoadOptions& options = {});

/// Raster extensions accepted in dataset and inference directories (case-insensitive).
bool is_image_file(const std::filesystem::path& file);

/// Decodes a raster file into RGB [0,1]. Throws DataError naming the file on failure.
Image load_image(const std::filesystem::path& file);
void save_png(const Image& image, const std::filesystem::path& file);

/// Splits an image into rows*cols equal patches in row-major order. Sizes that do not
/// divide evenly are center-cropped to the largest divisible region first.
std::vector<Patch> tile_image(const LabeledImage& image, GridSpec grid);

/// tile_image over a collection, concatenated in image order.
std::vector<Patch> tile_dataset(std::span<const LabeledImage> images, GridSpec grid);

/// Lowest index of the maximum entry.
ClassId argmax(std::span<const double> values);

ClassMask reassemble_mask(const std::vector<std::vector<double>>& patch_probs, GridSpec grid,
                          std::string source_id = {});

/// Gray-world white balance: each channel scaled so its mean equals the overall mean.
LabeledImage color_correct(const LabeledImage& image);
Image color_correct(const Image& image);

// Mask interchange: {source_id, rows, cols, labels[[...]], probs[[[...]]]}.
// probs may be absent in ground-truth masks.
std::string mask_to_json(const ClassMask& mask);
ClassMask mask_from_json(const std::string& text);
void write_mask(const ClassMask& mask, const std::filesystem::path& file);
ClassMask read_mask(const std::filesystem::path& file);

/// Solid-colour rendering, `cell_px` pixels per grid cell.
/// Palette: 0 pink, 1 green, 2 orange, 3 yellow, further ids gray.
void write_mask_png(const ClassMask& mask, const std::filesystem::path& file, int cell_px = 32);

}  // namespace seagrid
