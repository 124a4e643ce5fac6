#include "seagrid/dataset_io.hpp"
#include "seagrid/errors.hpp"
#include "support.hpp"

#include <fstream>

#include <doctest.h>

using namespace seagrid;
namespace fs = std::filesystem;

namespace {

void make_image(const fs::path& file, int h, int w, float shade) {
    fs::create_directories(file.parent_path());
    save_png(testsupport::constant_image(h, w, shade, 0.5f, 1.0f - shade), file);
}

}  // namespace

TEST_CASE("grid parsing") {
    CHECK(parse_grid("5x8") == GridSpec{5, 8});
    CHECK(to_string(GridSpec{5, 10}) == "5x10");
    CHECK_THROWS_AS(parse_grid("5by8"), UsageError);
    CHECK_THROWS_AS(parse_grid("0x3"), UsageError);
}

TEST_CASE("load_dataset labels by directory") {
    testsupport::TempDir tmp("ds");
    const std::vector<std::string> classes{"Background", "Ferny", "Rounded", "Strappy"};
    for (std::size_t c = 0; c < classes.size(); ++c) make_image(tmp / classes[c] / "a.png", 4, 6, 0.2f * c);
    const auto images = load_dataset(tmp.path(), classes);
    REQUIRE(images.size() == 4);
    for (int c = 0; c < 4; ++c) {
        CHECK(images[c].label == c);
        CHECK(images[c].source_id == classes[c] + "/a.png");
        CHECK(images[c].pixels.height == 4);
        CHECK(images[c].pixels.width == 6);
    }
    CHECK(images[1].pixels.at(0, 0, 0) == doctest::Approx(51.0 / 255.0));
}

TEST_CASE("load_dataset errors and ordering") {
    testsupport::TempDir tmp("ds2");
    fs::create_directories(tmp / "Unrelated");
    CHECK_THROWS_WITH_AS(load_dataset(tmp.path(), std::vector<std::string>{"Background", "Ferny"}),
                         doctest::Contains("no class directories"), DataError);

    for (const char* name : {"c.png", "a.png", "b.png"}) {
        make_image(tmp / "Background" / name, 3, 3, 0.1f);
        make_image(tmp / "Ferny" / name, 3, 3, 0.9f);
    }
    std::ofstream(tmp / "Ferny" / "notes.txt") << "ignored";
    const std::vector<std::string> classes{"Background", "Ferny"};
    const auto a = load_dataset(tmp.path(), classes);
    const auto b = load_dataset(tmp.path(), classes);
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].source_id == b[i].source_id);
        CHECK(a[i].pixels == b[i].pixels);
    }
    CHECK(a[0].source_id == "Background/a.png");
    CHECK(a[2].source_id == "Background/c.png");
    CHECK(a[3].source_id == "Ferny/a.png");

    LoadOptions few;
    few.max_per_class = 1;
    CHECK(load_dataset(tmp.path(), classes, few).size() == 2);

    const std::vector<std::string> three{"Background", "Ferny", "Rounded"};
    CHECK_THROWS_AS(load_dataset(tmp.path(), three), DataError);
    LoadOptions lenient;
    lenient.require_all_classes = false;
    CHECK(load_dataset(tmp.path(), three, lenient).size() == 6);
}

TEST_CASE("manifest") {
    testsupport::TempDir tmp("manifest");
    std::ofstream(tmp / "classes.txt") << "# comment\nBackground\n\nFerny\n";
    CHECK(read_manifest(tmp / "classes.txt") == std::vector<std::string>{"Background", "Ferny"});
    std::ofstream(tmp / "dup.txt") << "A\nA\n";
    CHECK_THROWS_AS(read_manifest(tmp / "dup.txt"), DataError);
    CHECK_THROWS_AS(read_manifest(tmp / "missing.txt"), DataError);
}

TEST_CASE("tiling geometry") {
    LabeledImage big{Image(2600, 4624), 1, "big"};
    auto patches = tile_image(big, {5, 8});
    REQUIRE(patches.size() == 40);
    CHECK(patches[0].pixels.height == 520);
    CHECK(patches[0].pixels.width == 578);
    CHECK(patches[39].row == 4);
    CHECK(patches[39].col == 7);
    CHECK(patches[9].row == 1);
    CHECK(patches[9].col == 1);
    CHECK(patches[9].inherited_label == 1);
    CHECK(patches[9].parent_id == "big");

    LabeledImage wide{Image(960, 1920), 0, "wide"};
    patches = tile_image(wide, {5, 10});
    REQUIRE(patches.size() == 50);
    CHECK(patches[0].pixels.height == 192);
    CHECK(patches[0].pixels.width == 192);
}

TEST_CASE("tiling copies the right pixels") {
    // Pixel value encodes its own coordinates so each patch can be checked by hand.
    LabeledImage img{Image(11, 11), 0, "odd"};
    for (int y = 0; y < 11; ++y) {
        for (int x = 0; x < 11; ++x) {
            img.pixels.at(y, x, 0) = static_cast<float>(y);
            img.pixels.at(y, x, 1) = static_cast<float>(x);
        }
    }
    const auto patches = tile_image(img, {2, 2});
    REQUIRE(patches.size() == 4);
    for (const auto& p : patches) {
        CHECK(p.pixels.height == 5);
        CHECK(p.pixels.width == 5);
        for (int y = 0; y < 5; ++y) {
            for (int x = 0; x < 5; ++x) {
                CHECK(p.pixels.at(y, x, 0) == static_cast<float>(p.row * 5 + y));
                CHECK(p.pixels.at(y, x, 1) == static_cast<float>(p.col * 5 + x));
            }
        }
    }
    CHECK_THROWS_AS(tile_image(LabeledImage{Image(3, 3), 0, "tiny"}, {4, 1}), DataError);
}

TEST_CASE("argmax and reassembly") {
    const std::vector<double> p{0.1, 0.9};
    CHECK(argmax(p) == 1);
    const std::vector<double> flat{0.25, 0.25, 0.25, 0.25};
    CHECK(argmax(flat) == 0);

    auto mask = reassemble_mask({{0.1, 0.9}}, {1, 1}, "x");
    CHECK(mask.labels == std::vector<ClassId>{1});
    mask = reassemble_mask(std::vector<std::vector<double>>(6, flat), {2, 3}, "y");
    CHECK(mask.rows == 2);
    CHECK(mask.cols == 3);
    CHECK(mask.labels == std::vector<ClassId>(6, 0));
    CHECK_THROWS_AS(reassemble_mask({{1.0}}, {2, 2}), DataError);
}

TEST_CASE("tile, classify, reassemble keeps the grid shape") {
    LabeledImage img{Image(30, 40), 2, "img"};
    const auto patches = tile_image(img, {3, 4});
    std::vector<std::vector<double>> probs;
    for (std::size_t i = 0; i < patches.size(); ++i) probs.push_back({0.1, 0.2, 0.7});
    const auto mask = reassemble_mask(probs, {3, 4}, img.source_id);
    CHECK(mask.rows == 3);
    CHECK(mask.cols == 4);
    CHECK(mask.labels.size() == 12);
    CHECK(mask.label(2, 3) == 2);
}

TEST_CASE("gray-world colour correction") {
    Rng rng(1);
    Image gray = testsupport::noise_image(6, 6, rng);
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 6; ++x) gray.at(y, x, 1) = gray.at(y, x, 2) = gray.at(y, x, 0);
    }
    const Image same = color_correct(gray);
    for (std::size_t i = 0; i < gray.data.size(); ++i) CHECK(std::abs(same.data[i] - gray.data[i]) < 1e-6);

    const Image cast = color_correct(testsupport::constant_image(4, 4, 0.2f, 0.2f, 0.6f));
    double mean[3] = {0, 0, 0};
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            for (int c = 0; c < 3; ++c) mean[c] += cast.at(y, x, c) / 16.0;
        }
    }
    CHECK(std::abs(mean[0] - mean[1]) < 1e-6);
    CHECK(std::abs(mean[0] - mean[2]) < 1e-6);

    const Image black(3, 3);
    CHECK(color_correct(black) == black);
}

TEST_CASE("mask json round trip") {
    ClassMask m{"Ferny/x.png", 2, 2, {0, 1, 3, 2}, {{0.7, 0.1, 0.1, 0.1}, {0.1, 0.6, 0.2, 0.1}, {0, 0, 0, 1}, {0, 0, 1, 0}}};
    const ClassMask back = mask_from_json(mask_to_json(m));
    CHECK(back.source_id == m.source_id);
    CHECK(back.labels == m.labels);
    CHECK(back.probs == m.probs);
    const ClassMask truth = mask_from_json(R"({"source_id":"t","rows":1,"cols":2,"labels":[[1,0]]})");
    CHECK(truth.labels == std::vector<ClassId>{1, 0});
    CHECK(truth.probs.empty());
    CHECK_THROWS_AS(mask_from_json(R"({"source_id":"t","rows":2,"cols":2,"labels":[[1,0]]})"), DataError);

    testsupport::TempDir tmp("mask");
    write_mask(m, tmp / "m.json");
    CHECK(read_mask(tmp / "m.json").labels == m.labels);
    write_mask_png(m, tmp / "m.png", 4);
    const Image png = load_image(tmp / "m.png");
    CHECK(png.height == 8);
    CHECK(png.width == 8);
}

TEST_CASE("unreadable image is a data error") {
    testsupport::TempDir tmp("bad");
    std::ofstream(tmp / "x.png") << "not an image";
    CHECK_THROWS_WITH_AS(load_image(tmp / "x.png"), doctest::Contains("x.png"), DataError);
}
