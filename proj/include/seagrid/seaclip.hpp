#pragma once

#include "seagrid/encoder.hpp"
#include "seagrid/losses.hpp"
#include "seagrid/model.hpp"
#include "seagrid/optimizer.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace seagrid {

enum class GroupId : int { Background = 0, Seagrass = 1, Fish = 2 };

struct PromptGroup {
    GroupId group = GroupId::Background;
    std::vector<std::string> prompts;
};

enum class Scenario { DeepSeagrass, GlobalWetlands };
Scenario parse_scenario(const std::string& name);

/// Query phrases per group. GlobalWetlands adds the fish (outlier) group.
std::vector<PromptGroup> builtin_prompt_groups(Scenario scenario);

/// Throws DataError on empty groups or repeated prompts.
void validate_prompt_groups(std::span<const PromptGroup> groups);
/// Prompts concatenated in group order.
std::vector<std::string> flatten_prompts(std::span<const PromptGroup> groups);

/// JSON: [{"group": "background"|"seagrass"|"fish", "prompts": [...]}, ...]
std::vector<PromptGroup> load_prompt_groups(const std::filesystem::path& file);

/// Group of the highest-scoring prompt; ties go to the lowest prompt index.
GroupId zero_shot_group(std::span<const double> similarities, std::span<const PromptGroup> groups);

/// Softmax over prompts of scale * similarity, for reporting only.
Eigen::VectorXd zero_shot_probabilities(std::span<const double> similarities, double scale = 100.0);

/// Image/text similarity oracle standing in for a vision-language model.
class VlmScorer {
public:
    virtual ~VlmScorer() = default;
    /// One similarity per prompt, deterministic per (patch, prompts).
    virtual std::vector<double> score(const Patch& patch, std::span<const std::string> prompts) const = 0;
};

/// Colour-statistics scorer for tests and demos. Patches embed as (green excess, warm/sand
/// tone, blue excess, low-chroma brightness) from their mean RGB; prompts embed by keyword
/// (grass/plants/leaves, sand, water, fish/scales) plus a small seeded hash offset.
class MockScorer final : public VlmScorer {
public:
    explicit MockScorer(std::uint64_t seed) : seed_(seed) {}
    std::vector<double> score(const Patch& patch, std::span<const std::string> prompts) const override;

    static Eigen::Vector4d patch_embedding(const Patch& patch);
    Eigen::Vector4d prompt_embedding(const std::string& prompt) const;

private:
    std::uint64_t seed_;
};

std::unique_ptr<VlmScorer> mock_scorer(std::uint64_t seed);

/// Similarities dumped offline, one row per patch.
struct ScoreMatrix {
    std::vector<std::string> prompts;
    Matrix scores;                           // P x Q
    std::map<PatchKey, Eigen::Index> index;  // patch -> row
};

/// CSV `source_id,row,col,s0,...,s{Q-1}` preceded by `# prompts: <tab-separated prompts>`;
/// the prompts must equal the configured groups exactly.
ScoreMatrix load_score_matrix(const std::filesystem::path& file, std::span<const PromptGroup> groups);
void write_score_matrix(const ScoreMatrix& matrix, const std::filesystem::path& file);

/// Serves a ScoreMatrix through the scorer interface.
class ScoreMatrixScorer final : public VlmScorer {
public:
    explicit ScoreMatrixScorer(ScoreMatrix matrix) : matrix_(std::move(matrix)) {}
    std::vector<double> score(const Patch& patch, std::span<const std::string> prompts) const override;

private:
    ScoreMatrix matrix_;
};

struct ClipLabel {
    ClassId label = 0;
    GroupId group = GroupId::Background;
};

/// Background verdict -> 0, seagrass verdict -> the patch's image label, fish verdict ->
/// `fish_class` (required when a fish group is configured).
std::vector<ClipLabel> generate_pseudolabels(std::span<const Patch> patches, const VlmScorer& scorer,
                                             std::span<const PromptGroup> groups, ClassId fish_class = -1);

struct SeaclipConfig {
    int epochs = 150;
    double lr = 1e-5;
    int batch_patches = 32;
    ClassWeights weights = ClassWeights::seagrass_default();
    double clip_norm = 0.0;
};

struct SeaclipResult {
    std::vector<double> epoch_loss;
    AdamState adam;
};

/// Adam on weighted cross entropy with fixed pseudo-labels.
SeaclipResult train_seaclip(Model& model, const PatchEncoder& encoder, std::span<const Patch> patches,
                            std::span<const ClassId> pseudolabels, const SeaclipConfig& cfg, Rng& rng);

}  // namespace seagrid
