#include "seagrid/model.hpp"

#include "seagrid/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace seagrid {

int BackboneParams::input_dim() const { return layers.empty() ? -1 : layers.front().in_dim(); }
int BackboneParams::output_dim() const { return layers.empty() ? -1 : layers.back().out_dim(); }

std::vector<Matrix*> BackboneParams::parameters() {
    std::vector<Matrix*> out;
    for (auto& l : layers) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
    }
    return out;
}

std::vector<const Matrix*> BackboneParams::parameters() const {
    std::vector<const Matrix*> out;
    for (const auto& l : layers) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
    }
    return out;
}

std::vector<Matrix*> HeadParams::parameters() { return {&w1, &b1, &w2, &b2}; }
std::vector<const Matrix*> HeadParams::parameters() const { return {&w1, &b1, &w2, &b2}; }

std::vector<Matrix*> Model::parameters() {
    auto out = backbone.parameters();
    for (auto* p : head.parameters()) out.push_back(p);
    return out;
}

std::vector<const Matrix*> Model::parameters() const {
    auto out = backbone.parameters();
    for (const auto* p : head.parameters()) out.push_back(p);
    return out;
}

InitScheme parse_init_scheme(const std::string& name) {
    if (name == "uniform") return InitScheme::Uniform;
    if (name == "zeros") return InitScheme::Zeros;
    throw UsageError("unknown init scheme '" + name + "' (expected uniform|zeros)");
}

DenseLayer init_layer(int in, int out, bool relu, Rng& rng, InitScheme scheme) {
    DenseLayer layer;
    layer.weight = Matrix::Zero(in, out);
    layer.bias = Matrix::Zero(1, out);
    layer.relu = relu;
    if (scheme == InitScheme::Uniform) {
        const double bound = std::sqrt(6.0 / in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = dist(rng);
    }
    return layer;
}

Model init_model(const ModelShape& shape, std::uint64_t seed, InitScheme scheme) {
    if (shape.feature_dim < 1 || shape.num_classes < 1 || shape.head_width < 1) {
        throw UsageError("model dimensions must be positive");
    }
    if (!(shape.dropout_p >= 0.0 && shape.dropout_p < 1.0)) throw UsageError("dropout must lie in [0,1)");
    Rng rng(seed);
    Model model;
    if (shape.identity_backbone) {
        if (shape.input_dim != shape.feature_dim) {
            throw UsageError("identity backbone needs input_dim == feature_dim");
        }
    } else {
        int in = shape.input_dim;
        for (int width : shape.hidden) {
            model.backbone.layers.push_back(init_layer(in, width, true, rng, scheme));
            in = width;
        }
        model.backbone.layers.push_back(init_layer(in, shape.feature_dim, false, rng, scheme));
    }
    DenseLayer fc1 = init_layer(shape.feature_dim, shape.head_width, true, rng, scheme);
    DenseLayer fc2 = init_layer(shape.head_width, shape.num_classes, false, rng, scheme);
    model.head.w1 = std::move(fc1.weight);
    model.head.b1 = std::move(fc1.bias);
    model.head.w2 = std::move(fc2.weight);
    model.head.b2 = std::move(fc2.bias);
    model.head.dropout_p = shape.dropout_p;
    return model;
}

namespace {

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw NumericError(std::string("non-finite activation in ") + what);
}

}  // namespace

BackboneOutput extract_features(const BackboneParams& backbone, const Matrix& inputs, Mode mode) {
    BackboneOutput out;
    if (!backbone.is_identity() && inputs.cols() != backbone.input_dim()) {
        throw DataError("backbone expects " + std::to_string(backbone.input_dim()) + " inputs, got " +
                        std::to_string(inputs.cols()));
    }
    if (mode == Mode::Train) out.cache.emplace();
    Matrix x = inputs;
    for (const auto& layer : backbone.layers) {
        Matrix pre = x * layer.weight;
        pre.rowwise() += layer.bias.row(0);
        if (out.cache) {
            out.cache->inputs.push_back(x);
            out.cache->pre.push_back(pre);
        }
        x = layer.relu ? Matrix(pre.cwiseMax(0.0)) : pre;
    }
    require_finite(x, "backbone");
    out.features = std::move(x);
    return out;
}

HeadOutput head_forward(const HeadParams& head, const Matrix& features, Mode mode, Rng& rng) {
    if (features.cols() != head.feature_dim()) {
        throw DataError("head expects " + std::to_string(head.feature_dim()) + " features, got " +
                        std::to_string(features.cols()));
    }
    HeadOutput out;
    Matrix pre1 = features * head.w1;
    pre1.rowwise() += head.b1.row(0);
    Matrix hidden = pre1.cwiseMax(0.0);
    Matrix mask;
    if (mode == Mode::Train) {
        mask = Matrix::Ones(hidden.rows(), hidden.cols());
        if (head.dropout_p > 0.0) {
            const double keep = 1.0 - head.dropout_p;
            std::bernoulli_distribution draw(keep);
            for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = draw(rng) ? 1.0 / keep : 0.0;
            hidden = hidden.cwiseProduct(mask);
        }
    }
    out.logits = hidden * head.w2;
    out.logits.rowwise() += head.b2.row(0);
    require_finite(out.logits, "head");
    if (mode == Mode::Train) out.cache = HeadCache{features, std::move(pre1), std::move(mask)};
    return out;
}

Matrix head_forward(const HeadParams& head, const Matrix& features) {
    Rng unused(0);
    return head_forward(head, features, Mode::Eval, unused).logits;
}

BackboneGrads backbone_backward(const BackboneParams& backbone, const std::optional<BackboneCache>& cache,
                                const Matrix& d_features) {
    if (!cache) throw std::logic_error("backbone_backward needs a training-mode cache");
    if (cache->inputs.size() != backbone.layers.size()) {
        throw std::logic_error("backbone cache does not match the layer stack");
    }
    BackboneGrads grads;
    grads.params.resize(2 * backbone.layers.size());
    Matrix delta = d_features;
    for (std::size_t k = backbone.layers.size(); k-- > 0;) {
        const auto& layer = backbone.layers[k];
        if (layer.relu) delta = delta.cwiseProduct((cache->pre[k].array() > 0.0).cast<double>().matrix());
        grads.params[2 * k] = cache->inputs[k].transpose() * delta;
        grads.params[2 * k + 1] = delta.colwise().sum();
        delta = delta * layer.weight.transpose();
    }
    grads.d_inputs = std::move(delta);
    return grads;
}

HeadGrads head_backward(const HeadParams& head, const std::optional<HeadCache>& cache, const Matrix& d_logits) {
    if (!cache) throw std::logic_error("head_backward needs a training-mode cache");
    if (d_logits.rows() != cache->features.rows() || d_logits.cols() != head.num_classes()) {
        throw std::logic_error("d_logits shape does not match the cached forward pass");
    }
    Matrix hidden = cache->pre1.cwiseMax(0.0);
    if (cache->mask.size() > 0) hidden = hidden.cwiseProduct(cache->mask);

    HeadGrads grads;
    grads.params.resize(4);
    grads.params[2] = hidden.transpose() * d_logits;
    grads.params[3] = d_logits.colwise().sum();
    Matrix d_hidden = d_logits * head.w2.transpose();
    if (cache->mask.size() > 0) d_hidden = d_hidden.cwiseProduct(cache->mask);
    d_hidden = d_hidden.cwiseProduct((cache->pre1.array() > 0.0).cast<double>().matrix());
    grads.params[0] = cache->features.transpose() * d_hidden;
    grads.params[1] = d_hidden.colwise().sum();
    grads.d_features = d_hidden * head.w1.transpose();
    return grads;
}

ModelGrads model_backward(const Model& model, const ModelCache& cache, const Matrix& d_logits) {
    if (!cache.head || (!model.backbone.is_identity() && !cache.backbone)) {
        throw std::logic_error("model_backward called with eval-mode caches");
    }
    HeadGrads hg = head_backward(model.head, cache.head, d_logits);
    ModelGrads grads;
    if (!model.backbone.is_identity()) {
        BackboneGrads bg = backbone_backward(model.backbone, cache.backbone, hg.d_features);
        grads.params = std::move(bg.params);
        grads.d_inputs = std::move(bg.d_inputs);
    } else {
        grads.d_inputs = hg.d_features;
    }
    for (auto& p : hg.params) grads.params.push_back(std::move(p));
    grads.d_features = std::move(hg.d_features);
    return grads;
}

ModelForward model_forward(const Model& model, const Matrix& inputs, Mode mode, Rng& rng) {
    ModelForward fwd;
    BackboneOutput b = extract_features(model.backbone, inputs, mode);
    HeadOutput h = head_forward(model.head, b.features, mode, rng);
    fwd.features = std::move(b.features);
    fwd.logits = std::move(h.logits);
    fwd.cache.backbone = std::move(b.cache);
    fwd.cache.head = std::move(h.cache);
    return fwd;
}

Matrix predict_logits(const Model& model, const Matrix& inputs) {
    return head_forward(model.head, extract_features(model.backbone, inputs, Mode::Eval).features);
}

}  // namespace seagrid
