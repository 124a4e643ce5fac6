#include "seagrid/augment.hpp"
#include "seagrid/errors.hpp"
#include "support.hpp"

#include <set>

#include <doctest.h>

using namespace seagrid;

namespace {

Patch noise_patch(int h, int w, std::uint64_t seed) {
    Rng rng(seed);
    return Patch{testsupport::noise_image(h, w, rng), 0, 0, "p", 1};
}

}  // namespace

TEST_CASE("no-op configuration") {
    const Patch p = noise_patch(8, 9, 1);
    Rng rng(3);
    CHECK(augment(p, AugConfig::none(), rng).pixels == p.pixels);
}

TEST_CASE("flips are involutions") {
    const Patch p = noise_patch(5, 7, 2);
    AugConfig cfg = AugConfig::none();
    cfg.hflip_p = 1.0;
    Rng rng(4);
    const Patch once = augment(p, cfg, rng);
    CHECK(once.pixels.at(0, 0, 1) == p.pixels.at(0, 6, 1));
    CHECK(augment(once, cfg, rng).pixels == p.pixels);
    CHECK(flip_vertical(flip_vertical(p.pixels)) == p.pixels);
    CHECK(flip_vertical(p.pixels).at(0, 3, 2) == p.pixels.at(4, 3, 2));
}

TEST_CASE("jitter is reproducible from the seed") {
    const Patch p = noise_patch(6, 6, 5);
    AugConfig cfg = AugConfig::none();
    cfg.jitter_p = 1.0;
    cfg.brightness = cfg.contrast = cfg.saturation = cfg.hue = 0.3;
    Rng a(42), b(42);
    const Patch x = augment(p, cfg, a), y = augment(p, cfg, b);
    CHECK(x.pixels == y.pixels);
    CHECK(!(x.pixels == p.pixels));
    for (float v : x.pixels.data) CHECK((v >= 0.0f && v <= 1.0f));
}

TEST_CASE("random crop") {
    const Patch p = noise_patch(6, 5, 6);
    Rng rng(1);
    CHECK(random_crop(p, 6, 5, rng).pixels == p.pixels);
    CHECK_THROWS_AS(random_crop(p, 7, 5, rng), DataError);

    const Patch big{Image(520, 578), 0, 0, "big", 0};
    const Patch crop = random_crop(big, 132, 132, rng);
    CHECK(crop.pixels.height == 132);
    CHECK(crop.pixels.width == 132);

    // Coordinates in the red/green channels identify the crop position.
    Image grid(4, 4);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            grid.at(y, x, 0) = static_cast<float>(y);
            grid.at(y, x, 1) = static_cast<float>(x);
        }
    }
    std::set<std::pair<int, int>> seen;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        Rng r(seed);
        const Image c = random_crop(grid, 2, 2, r);
        seen.insert({static_cast<int>(c.at(0, 0, 0)), static_cast<int>(c.at(0, 0, 1))});
    }
    CHECK(seen.size() == 9);
}

TEST_CASE("blur and resize") {
    const Image flat = testsupport::constant_image(5, 5, 0.3f, 0.6f, 0.9f);
    const Image blurred = gaussian_blur(flat, 1.2);
    for (std::size_t i = 0; i < flat.data.size(); ++i) CHECK(blurred.data[i] == doctest::Approx(flat.data[i]).epsilon(1e-6));
    Rng rng(2);
    const Image n = testsupport::noise_image(4, 6, rng);
    CHECK(resize_bilinear(n, 4, 6) == n);
    const Image half = resize_bilinear(n, 2, 3);
    // 2x downsampling with half-pixel centres averages each 2x2 block.
    const float expect = (n.at(0, 0, 0) + n.at(0, 1, 0) + n.at(1, 0, 0) + n.at(1, 1, 0)) / 4.0f;
    CHECK(half.at(0, 0, 0) == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("config validation") {
    AugConfig cfg;
    cfg.hflip_p = 1.5;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = AugConfig{};
    cfg.hue = -0.1;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
}
