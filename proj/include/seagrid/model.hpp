#pragma once

#include "seagrid/image.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace seagrid {

using FeatureVector = Eigen::VectorXd;
// Batches are row-major in the sample dimension: one sample per row.
using Matrix = Eigen::MatrixXd;

enum class Mode { Eval, Train };

/// Fully connected layer: y = x W + b, optionally followed by ReLU.
/// Biases are stored as 1 x out matrices so every parameter has the same type.
struct DenseLayer {
    Matrix weight;  // in x out
    Matrix bias;    // 1 x out
    bool relu = false;

    int in_dim() const { return static_cast<int>(weight.rows()); }
    int out_dim() const { return static_cast<int>(weight.cols()); }
};

/// Reference feature extractor. An empty layer list is the identity map, which is how
/// precomputed features flow through the same model code.
struct BackboneParams {
    std::vector<DenseLayer> layers;

    int input_dim() const;
    int output_dim() const;
    bool is_identity() const { return layers.empty(); }
    std::vector<Matrix*> parameters();
    std::vector<const Matrix*> parameters() const;
};

/// Classification head: FC(width) -> ReLU -> dropout -> FC(C).
struct HeadParams {
    Matrix w1;  // D x width
    Matrix b1;  // 1 x width
    Matrix w2;  // width x C
    Matrix b2;  // 1 x C
    double dropout_p = 0.15;

    int feature_dim() const { return static_cast<int>(w1.rows()); }
    int num_classes() const { return static_cast<int>(w2.cols()); }
    std::vector<Matrix*> parameters();
    std::vector<const Matrix*> parameters() const;
};

struct Model {
    BackboneParams backbone;
    HeadParams head;
    int input_size = 16;  // side of the downsampled square patch fed to a pixel backbone

    int num_classes() const { return head.num_classes(); }
    int feature_dim() const { return head.feature_dim(); }
    /// Backbone parameters followed by w1, b1, w2, b2.
    std::vector<Matrix*> parameters();
    std::vector<const Matrix*> parameters() const;
};

struct ModelShape {
    int input_dim = 16 * 16 * 3;
    std::vector<int> hidden{256, 128};
    int feature_dim = 64;
    int head_width = 512;
    int num_classes = 4;
    double dropout_p = 0.15;
    bool identity_backbone = false;  // input_dim must equal feature_dim
};

enum class InitScheme { Uniform, Zeros };
InitScheme parse_init_scheme(const std::string& name);

/// Fan-in scaled uniform weights in +-sqrt(6/fan_in), zero biases.
Model init_model(const ModelShape& shape, std::uint64_t seed, InitScheme scheme = InitScheme::Uniform);
DenseLayer init_layer(int in, int out, bool relu, Rng& rng, InitScheme scheme);

struct BackboneCache {
    std::vector<Matrix> inputs;  // input of each layer
    std::vector<Matrix> pre;     // pre-activation of each layer
};

struct HeadCache {
    Matrix features;
    Matrix pre1;
    Matrix mask;  // inverted-dropout multipliers (0 or 1/(1-p))
};

struct BackboneOutput {
    Matrix features;
    std::optional<BackboneCache> cache;  // training mode only
};

struct HeadOutput {
    Matrix logits;
    std::optional<HeadCache> cache;  // training mode only
};

/// Throws NumericError if any activation is non-finite.
BackboneOutput extract_features(const BackboneParams& backbone, const Matrix& inputs, Mode mode);

/// Training mode draws an inverted-dropout mask from `rng`; eval mode is deterministic.
HeadOutput head_forward(const HeadParams& head, const Matrix& features, Mode mode, Rng& rng);
/// Eval-mode convenience.
Matrix head_forward(const HeadParams& head, const Matrix& features);

struct BackboneGrads {
    std::vector<Matrix> params;  // same order as BackboneParams::parameters()
    Matrix d_inputs;
};

struct HeadGrads {
    std::vector<Matrix> params;  // w1, b1, w2, b2
    Matrix d_features;
};

struct ModelCache {
    std::optional<BackboneCache> backbone;
    std::optional<HeadCache> head;
};

struct ModelGrads {
    std::vector<Matrix> params;  // same order as Model::parameters()
    Matrix d_features;
    Matrix d_inputs;
};

BackboneGrads backbone_backward(const BackboneParams& backbone, const std::optional<BackboneCache>& cache,
                                const Matrix& d_features);
HeadGrads head_backward(const HeadParams& head, const std::optional<HeadCache>& cache, const Matrix& d_logits);

/// Gradients of a logits-composed loss for every parameter and the inputs.
/// Throws std::logic_error if the caches come from an eval-mode pass.
ModelGrads model_backward(const Model& model, const ModelCache& cache, const Matrix& d_logits);

struct ModelForward {
    Matrix features;
    Matrix logits;
    ModelCache cache;
};

ModelForward model_forward(const Model& model, const Matrix& inputs, Mode mode, Rng& rng);
/// Eval-mode logits.
Matrix predict_logits(const Model& model, const Matrix& inputs);

}  // namespace seagrid
