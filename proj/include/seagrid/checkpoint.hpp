#pragma once

#include "seagrid/image.hpp"
#include "seagrid/model.hpp"
#include "seagrid/optimizer.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace seagrid {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to resume or run a classifier.
///
/// On-disk layout (all integers and reals little-endian):
///   bytes 0..7   magic "SEAGRID\0"
///   u32          format version (1)
///   u64          header length H
///   H bytes      JSON header: classes, grid, engine, encoder, input_size, layer shapes,
///                dropout, optional Adam hyper-parameters and step
///   f64 arrays   backbone W,b per layer, head w1,b1,w2,b2, then Adam m[i], v[i] if present;
///                each tensor row-major with the shape given in the header
struct Checkpoint {
    Model model;
    std::vector<std::string> classes;
    GridSpec grid;
    std::string engine;              // "pretext", "seafeats", "seaclip"
    std::string encoder = "pixels";  // "pixels" or "features"
    std::optional<AdamState> adam;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace seagrid
