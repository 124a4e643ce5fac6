#pragma once

#include "seagrid/image.hpp"
#include "seagrid/model.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace seagrid {

/// Turns patches into backbone input rows.
class PatchEncoder {
public:
    virtual ~PatchEncoder() = default;
    virtual int dim() const = 0;
    virtual Eigen::VectorXd encode(const Patch& patch) const = 0;

    Matrix encode_all(std::span<const Patch> patches) const;
};

/// Bilinear downsample to size x size, flattened (y, x, channel), mapped to [-1, 1].
class PixelEncoder final : public PatchEncoder {
public:
    explicit PixelEncoder(int size) : size_(size) {}
    int dim() const override { return size_ * size_ * 3; }
    Eigen::VectorXd encode(const Patch& patch) const override;

private:
    int size_;
};

using PatchKey = std::tuple<std::string, int, int>;  // source_id, row, col

/// Features computed offline (e.g. by a large pretrained encoder), keyed by patch.
struct FeatureTable {
    int dim = 0;
    std::map<PatchKey, FeatureVector> rows;
};

/// CSV with header `source_id,row,col,f0,...,f{D-1}`.
FeatureTable load_precomputed_features(const std::filesystem::path& file);
void write_precomputed_features(const FeatureTable& table, const std::filesystem::path& file);

/// Looks patches up in a FeatureTable; missing keys raise DataError.
class PrecomputedEncoder final : public PatchEncoder {
public:
    explicit PrecomputedEncoder(FeatureTable table) : table_(std::move(table)) {}
    int dim() const override { return table_.dim; }
    Eigen::VectorXd encode(const Patch& patch) const override;
    /// Throws DataError listing every patch without a feature row.
    void require_coverage(std::span<const Patch> patches) const;
    const FeatureTable& table() const { return table_; }

private:
    FeatureTable table_;
};

/// Formats a double with 17 significant digits (exact round trip).
std::string format_real(double v);

}  // namespace seagrid
