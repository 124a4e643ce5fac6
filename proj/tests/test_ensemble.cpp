#include "seagrid/dataset_io.hpp"
#include "seagrid/encoder.hpp"
#include "seagrid/ensemble.hpp"
#include "seagrid/errors.hpp"
#include "seagrid/losses.hpp"
#include "support.hpp"

#include <cmath>

#include <doctest.h>

using namespace seagrid;

TEST_CASE("logit normalisation") {
    const Eigen::VectorXd n = normalize_logits(Eigen::Vector2d(2, 0));
    CHECK(n[0] == 1.0);
    CHECK(n[1] == 0.0);
    const Eigen::VectorXd unit = Eigen::Vector3d(0.6, 0, -0.8);
    CHECK((normalize_logits(unit) - unit).norm() < 1e-15);
    CHECK(normalize_logits(Eigen::Vector3d(1, -4, 2), NormMode::MaxAbs)[1] == -1.0);
    CHECK_THROWS_AS(normalize_logits(Eigen::Vector3d::Zero()), NumericError);
    CHECK_THROWS_AS(parse_norm_mode("l1"), UsageError);
}

TEST_CASE("fusion") {
    const Eigen::VectorXd l = Eigen::Vector4d(0.3, -1.2, 2.0, 0.1);
    const Eigen::VectorXd expected = softmax(l / l.norm());
    CHECK((ensemble_predict(l, l) - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((ensemble_predict(l, Eigen::VectorXd(5.0 * l)) - expected).cwiseAbs().maxCoeff() < 1e-12);

    const auto half = ensemble_predict(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1));
    CHECK(half[0] == doctest::Approx(0.5));
    CHECK(half[1] == doctest::Approx(0.5));

    EnsembleConfig cfg;
    cfg.weights = {0.7, 0.2};
    CHECK_THROWS_AS(cfg.resolved_weights(2), UsageError);
    cfg.weights = {0.25, 0.75};
    const auto w = ensemble_predict(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), cfg);
    CHECK(w[1] == doctest::Approx(std::exp(0.75) / (std::exp(0.25) + std::exp(0.75))));
}

namespace {

// Classifier whose logits for a patch are a hand-set vector keyed by column:
// identity backbone over a one-hot feature, zero hidden bias, head w2 holds the logits.
Model lookup_model(const std::vector<Eigen::Vector3d>& logits) {
    Model m;
    const int n = static_cast<int>(logits.size());
    m.head.w1 = Matrix::Identity(n, n);
    m.head.b1 = Matrix::Zero(1, n);
    m.head.w2 = Matrix(n, 3);
    for (int i = 0; i < n; ++i) m.head.w2.row(i) = logits[i].transpose();
    m.head.b2 = Matrix::Zero(1, 3);
    m.head.dropout_p = 0.0;
    return m;
}

}  // namespace

TEST_CASE("predicted masks") {
    FeatureTable t;
    t.dim = 4;
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            Eigen::VectorXd onehot = Eigen::VectorXd::Zero(4);
            onehot[r * 2 + c] = 1.0;
            t.rows[{"img", r, c}] = onehot;
        }
    }
    const PrecomputedEncoder enc(t);
    const Model a = lookup_model({{3, 1, 0}, {0, 2, 1}, {0, 0, 5}, {1, 4, 0}});
    std::vector<Patch> patches;
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) patches.push_back(Patch{Image(), r, c, "img", 0});
    }
    const std::vector<EnsembleMember> single{{&a, &enc}};
    const auto probs = predict_patches(patches, single, {});
    const auto mask = reassemble_mask(probs, {2, 2}, "img");
    CHECK(mask.labels == std::vector<ClassId>{0, 1, 2, 1});
    CHECK(probs[0][0] == doctest::Approx(softmax(Eigen::Vector3d(3, 1, 0))[0]));

    const std::vector<EnsembleMember> twin{{&a, &enc}, {&a, &enc}};
    CHECK(reassemble_mask(predict_patches(patches, twin, {}), {2, 2}).labels == mask.labels);

    // A second member that disagrees strongly on cell (0,0) flips it.
    const Model b = lookup_model({{0, 0, 9}, {0, 2, 1}, {0, 0, 5}, {1, 4, 0}});
    const std::vector<EnsembleMember> mixed{{&a, &enc}, {&b, &enc}};
    CHECK(reassemble_mask(predict_patches(patches, mixed, {}), {2, 2}).labels == std::vector<ClassId>{2, 1, 2, 1});
}

TEST_CASE("predict_mask on pixels") {
    ModelShape s;
    s.input_dim = 2 * 2 * 3;
    s.hidden = {4};
    s.feature_dim = 3;
    s.head_width = 5;
    s.num_classes = 3;
    const Model m = init_model(s, 4);
    const PixelEncoder enc(2);
    Rng rng(2);
    const LabeledImage img{testsupport::noise_image(12, 16, rng), 0, "pix"};
    const std::vector<EnsembleMember> one{{&m, &enc}};
    const auto mask = predict_mask(img, {3, 4}, one);
    CHECK(mask.rows == 3);
    CHECK(mask.cols == 4);
    CHECK(mask.source_id == "pix");
    const auto patches = tile_image(img, {3, 4});
    const Matrix logits = predict_logits(m, enc.encode_all(patches));
    for (int i = 0; i < 12; ++i) {
        Eigen::Index best = 0;
        logits.row(i).maxCoeff(&best);
        CHECK(mask.labels[i] == best);
    }
}
