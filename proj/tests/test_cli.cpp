#include "seagrid/checkpoint.hpp"
#include "seagrid/cli.hpp"
#include "seagrid/dataset_io.hpp"
#include "seagrid/model.hpp"
#include "support.hpp"

#include <fstream>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

using namespace seagrid;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "seagrid");
    return cli::run(args);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void tiny_dataset(const fs::path& root) {
    fs::create_directories(root);
    std::ofstream(root / "classes.txt") << "Background\nSeagrass\n";
    for (int i = 0; i < 3; ++i) {
        const std::string name = "im" + std::to_string(i) + ".png";
        fs::create_directories(root / "Background");
        fs::create_directories(root / "Seagrass");
        save_png(testsupport::constant_image(16, 16, 0.8f, 0.7f, 0.5f), root / "Background" / name);
        save_png(testsupport::constant_image(16, 16, 0.1f, 0.7f, 0.2f), root / "Seagrass" / name);
    }
}

void tiny_config(const fs::path& file) {
    std::ofstream(file) << "grid = 2x2\nhidden = 8\nfeature_dim = 4\nhead_width = 8\ninput_size = 4\n"
                           "epochs = 2\npretrain_epochs = 2\npretrain_batch = 4\nseed = 3\n";
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
    CHECK(run_cli({"frobnicate"}) == 1);
    CHECK(run_cli({}) == 1);
    CHECK(run_cli({"infer", "--grid", "5x8"}) == 1);
    CHECK(run_cli({"--help"}) == 0);
}

TEST_CASE("data errors exit with 2") {
    testsupport::TempDir tmp("clierr");
    tiny_config(tmp / "cfg.txt");
    CHECK(run_cli({"train", "seafeats", "--data", (tmp / "nothing").string(), "--config", (tmp / "cfg.txt").string(),
                   "--out", (tmp / "x.bin").string()}) == 2);
    std::ofstream(tmp / "bad.txt") << "colour = red\n";
    tiny_dataset(tmp / "data");
    CHECK(run_cli({"train", "seafeats", "--data", (tmp / "data").string(), "--config", (tmp / "bad.txt").string(),
                   "--out", (tmp / "x.bin").string()}) == 1);
}

TEST_CASE("infer on a full-size frame") {
    testsupport::TempDir tmp("cliinfer");
    ModelShape s;
    s.input_dim = 4 * 4 * 3;
    s.hidden = {8};
    s.feature_dim = 4;
    s.head_width = 8;
    Checkpoint c{init_model(s, 1), {"Background", "Ferny", "Rounded", "Strappy"}, {5, 8}, "seafeats", "pixels", std::nullopt};
    c.model.input_size = 4;
    save_checkpoint(c, tmp / "a.bin");
    Rng rng(2);
    save_png(testsupport::noise_image(2600, 4624, rng), tmp / "frame.png");
    REQUIRE(run_cli({"infer", "--image", (tmp / "frame.png").string(), "--grid", "5x8", "--ckpt-a",
                     (tmp / "a.bin").string(), "--out", (tmp / "out").string(), "--png"}) == 0);
    const ClassMask m = read_mask(tmp / "out" / "frame.json");
    CHECK(m.rows == 5);
    CHECK(m.cols == 8);
    CHECK(m.labels.size() == 40);
    CHECK(fs::exists(tmp / "out" / "frame_mask.png"));
}

TEST_CASE("eval of a perfect prediction") {
    testsupport::TempDir tmp("clieval");
    fs::create_directories(tmp / "pred");
    fs::create_directories(tmp / "truth");
    const ClassMask a{"a", 2, 2, {0, 1, 2, 3}, {}};
    const ClassMask b{"b", 2, 2, {3, 3, 0, 1}, {}};
    for (const auto& m : {a, b}) {
        write_mask(m, tmp / "pred" / (m.source_id + ".json"));
        write_mask(m, tmp / "truth" / (m.source_id + ".json"));
    }
    REQUIRE(run_cli({"eval", "--pred", (tmp / "pred").string(), "--truth", (tmp / "truth").string(), "--report",
                     (tmp / "r.json").string()}) == 0);
    const auto r = nlohmann::json::parse(slurp(tmp / "r.json"));
    CHECK(r["overall_f1"].get<double>() == 100.0);
    for (const auto& cls : r["classes"]) CHECK(cls["f1"].get<double>() == 100.0);

    REQUIRE(run_cli({"eval", "--pred", (tmp / "pred").string(), "--truth", (tmp / "truth").string(), "--report",
                     (tmp / "rb.json").string(), "--binary"}) == 0);
    CHECK(nlohmann::json::parse(slurp(tmp / "rb.json"))["classes"].size() == 2);
}

TEST_CASE("small pipeline") {
    testsupport::TempDir tmp("clipipe");
    tiny_dataset(tmp / "data");
    tiny_config(tmp / "cfg.txt");
    const std::string data = (tmp / "data").string(), cfg = (tmp / "cfg.txt").string();
    REQUIRE(run_cli({"pretrain", "--data", data, "--config", cfg, "--out", (tmp / "pre.bin").string()}) == 0);
    REQUIRE(run_cli({"pseudolabel", "seafeats", "--data", data, "--config", cfg, "--ckpt", (tmp / "pre.bin").string(),
                     "--out", (tmp / "sf.jsonl").string()}) == 0);
    REQUIRE(run_cli({"pseudolabel", "seaclip", "--data", data, "--config", cfg, "--out", (tmp / "sc.jsonl").string()}) == 0);
    std::istringstream lines(slurp(tmp / "sc.jsonl"));
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        const bool seagrass_image = j["source_id"].get<std::string>().rfind("Seagrass/", 0) == 0;
        CHECK(j["label"].get<int>() == (seagrass_image ? 1 : 0));
        ++n;
    }
    CHECK(n == 24);
    REQUIRE(run_cli({"train", "seafeats", "--data", data, "--config", cfg, "--init", (tmp / "pre.bin").string(), "--out",
                     (tmp / "sf.bin").string(), "--stats", (tmp / "stats.jsonl").string()}) == 0);
    REQUIRE(run_cli({"train", "seaclip", "--data", data, "--config", cfg, "--labels", (tmp / "sc.jsonl").string(),
                     "--out", (tmp / "sc.bin").string()}) == 0);
    REQUIRE(run_cli({"finetune", "--ckpt", (tmp / "sf.bin").string(), "--data", data, "--epochs", "1", "--shots", "1",
                     "--out", (tmp / "ft.bin").string(), "--config", cfg}) == 0);
    REQUIRE(run_cli({"infer", "--dir", (tmp / "data" / "Seagrass").string(), "--grid", "2x2", "--ckpt-a",
                     (tmp / "sf.bin").string(), "--ckpt-b", (tmp / "sc.bin").string(), "--out",
                     (tmp / "masks").string(), "--jobs", "2"}) == 0);
    CHECK(fs::exists(tmp / "masks" / "im2.json"));
    CHECK(load_checkpoint(tmp / "sf.bin").engine == "seafeats");
}
