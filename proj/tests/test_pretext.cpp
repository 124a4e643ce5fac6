#include "seagrid/model.hpp"
#include "seagrid/pretext.hpp"
#include "support.hpp"

#include <algorithm>

#include <doctest.h>

using namespace seagrid;

namespace {

std::vector<Patch> two_clusters(int per_cluster, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<float> jitter(0.0f, 0.04f);
    std::vector<Patch> out;
    for (int i = 0; i < 2 * per_cluster; ++i) {
        const bool green = i % 2 == 0;
        Image img = green ? testsupport::constant_image(8, 8, 0.1f, 0.7f, 0.2f)
                          : testsupport::constant_image(8, 8, 0.8f, 0.7f, 0.5f);
        for (auto& v : img.data) v = std::clamp(v + jitter(rng), 0.0f, 1.0f);
        out.push_back(Patch{img, 0, i, "img" + std::to_string(i), 0});
    }
    return out;
}

BackboneParams small_backbone(int input_size, std::uint64_t seed) {
    ModelShape s;
    s.input_dim = input_size * input_size * 3;
    s.hidden = {16};
    s.feature_dim = 8;
    return init_model(s, seed).backbone;
}

}  // namespace

TEST_CASE("views without augmentation are the input") {
    PretextConfig cfg;
    cfg.augment = AugConfig::none();
    cfg.crop_fraction = 0.0;
    const auto patches = two_clusters(1, 1);
    Rng rng(1);
    const auto [a, b] = make_views(patches[0], cfg, rng);
    CHECK(a.pixels == patches[0].pixels);
    CHECK(b.pixels == patches[0].pixels);
}

TEST_CASE("views are reproducible") {
    PretextConfig cfg;
    const auto patches = two_clusters(1, 2);
    Rng r1(9), r2(9);
    const auto v1 = make_views(patches[0], cfg, r1);
    const auto v2 = make_views(patches[0], cfg, r2);
    CHECK(v1.first.pixels == v2.first.pixels);
    CHECK(v1.second.pixels == v2.second.pixels);
    CHECK(v1.first.pixels.height == 6);
}

TEST_CASE("single-pair batches have zero loss") {
    PretextConfig cfg;
    cfg.batch = 1;
    cfg.epochs = 3;
    cfg.input_size = 4;
    auto backbone = small_backbone(4, 3);
    const auto before = backbone.layers[0].weight;
    Rng rng(4);
    const auto res = pretrain(backbone, two_clusters(3, 3), cfg, rng);
    REQUIRE(res.loss_curve.size() == 3);
    for (double l : res.loss_curve) CHECK(l == 0.0);
    CHECK(backbone.layers[0].weight.allFinite());
    CHECK(backbone.layers[0].weight == before);
}

TEST_CASE("contrastive loss falls on separable clusters") {
    PretextConfig cfg;
    cfg.batch = 8;
    cfg.epochs = 30;
    cfg.lr = 1e-3;
    cfg.input_size = 4;
    auto backbone = small_backbone(4, 5);
    Rng rng(6);
    const auto res = pretrain(backbone, two_clusters(8, 6), cfg, rng);
    REQUIRE(res.loss_curve.size() == 30);
    CHECK(res.loss_curve.back() < res.loss_curve.front());
}
