#pragma once

#include "seagrid/augment.hpp"
#include "seagrid/encoder.hpp"
#include "seagrid/losses.hpp"
#include "seagrid/model.hpp"
#include "seagrid/optimizer.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace seagrid {

/// Per-class mean of L2-normalised features. Rows exist only for classes that had
/// at least one feature; class 0 is always present.
struct TemplateBank {
    std::vector<ClassId> class_ids;   // ascending
    Matrix templates;                 // one row per entry of class_ids
    std::vector<std::size_t> counts;  // N_c
    int epoch = 0;

    bool has(ClassId c) const;
    FeatureVector row(ClassId c) const;
    std::size_t count(ClassId c) const;
    /// A template whose norm vanished (e.g. antipodal features cancelled out).
    bool degenerate(ClassId c, double tol = 1e-12) const;
};

/// `cap` keeps the first N features of each class.
TemplateBank compute_templates(const std::map<ClassId, std::vector<FeatureVector>>& features,
                               std::optional<std::size_t> cap = std::nullopt);
/// Same, with one feature per row of `features` and its class in `labels`.
TemplateBank compute_templates(const Matrix& features, std::span<const ClassId> labels,
                               std::optional<std::size_t> cap = std::nullopt);

/// Cosine similarity; throws NumericError for a zero-norm argument.
double cosine_sim(const FeatureVector& a, const FeatureVector& b);

struct PseudoLabel {
    ClassId label = 0;
    double sim_bg = 0.0;
    double sim_cls = 0.0;
};

/// Background iff the feature is strictly closer (cosine) to the background template than
/// to the template of its image label; otherwise the image label.
PseudoLabel assign_pseudolabel(const FeatureVector& f, const TemplateBank& bank, ClassId image_label);

struct SeafeatsConfig {
    int epochs = 150;
    double lr = 1e-5;
    int batch_images = 3;
    ClassWeights weights = ClassWeights::seagrass_default();
    std::optional<std::size_t> template_cap;
    double clip_norm = 0.0;
    // Applied to the pixels of each training patch every epoch (few-shot fine-tuning).
    // Requires a pixel encoder; templates are always built from unaugmented patches.
    std::optional<AugConfig> augment;
    int augment_input_size = 16;
};

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    std::size_t flips = 0;               // pseudo-labels that changed versus the previous epoch
    std::size_t background_labels = 0;   // patches pseudo-labelled 0 this epoch
    std::map<ClassId, double> drift;     // |template_after - template_before| per class
    int bank_epoch = 0;
};

struct SeafeatsResult {
    TemplateBank bank;
    std::vector<EpochStats> stats;
    std::vector<PseudoLabel> last_labels;  // labels used in the final epoch
    AdamState adam;
};

/// Features at the backbone output, eval mode.
Matrix backbone_features(const Model& model, const PatchEncoder& encoder, std::span<const Patch> patches);

/// Templates from the current encoder plus one pseudo-label per patch.
std::pair<TemplateBank, std::vector<PseudoLabel>> seafeats_pseudolabels(
    const Model& model, const PatchEncoder& encoder, std::span<const Patch> patches,
    std::optional<std::size_t> cap = std::nullopt);

/// Trains backbone and head end to end on template pseudo-labels. The bank is built before
/// the first epoch; each epoch pseudo-labels every patch, runs Adam over batches of
/// `batch_images` images, then rebuilds the bank from the updated encoder.
SeafeatsResult train_seafeats(Model& model, const PatchEncoder& encoder, std::span<const Patch> patches,
                              const SeafeatsConfig& cfg, Rng& rng);

/// Template bank in feature-CSV layout: source_id = class id, row = bank epoch, col = N_c.
void write_template_bank(const TemplateBank& bank, const std::filesystem::path& file);
TemplateBank read_template_bank(const std::filesystem::path& file);

std::string stats_to_jsonl(std::span<const EpochStats> stats);

}  // namespace seagrid
