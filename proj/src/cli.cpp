#include "seagrid/cli.hpp"

#include "seagrid/checkpoint.hpp"
#include "seagrid/config.hpp"
#include "seagrid/dataset_io.hpp"
#include "seagrid/encoder.hpp"
#include "seagrid/ensemble.hpp"
#include "seagrid/errors.hpp"
#include "seagrid/metrics.hpp"
#include "seagrid/pretext.hpp"
#include "seagrid/seaclip.hpp"
#include "seagrid/seafeats.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace fs = std::filesystem;

namespace seagrid::cli {

namespace {

void setup_logging() {
    auto logger = spdlog::get("seagrid");
    if (!logger) {
        logger = spdlog::stderr_color_st("seagrid");
        logger->set_pattern("seagrid: %l: %v");
        spdlog::set_default_logger(logger);
    }
    const char* env = std::getenv("SEAGRID_LOG");
    const std::string level = env ? env : "info";
    if (level == "error") {
        spdlog::set_level(spdlog::level::err);
    } else if (level == "debug") {
        spdlog::set_level(spdlog::level::debug);
    } else {
        if (level != "info") spdlog::warn("unknown SEAGRID_LOG value '{}', using info", level);
        spdlog::set_level(spdlog::level::info);
    }
}

// Options shared by the data-driven subcommands.
struct DataArgs {
    std::string data;
    std::string manifest;  // default <data>/classes.txt
    std::string config;
    std::optional<std::uint64_t> seed;
};

void add_data_options(CLI::App* app, DataArgs& a, bool config_required) {
    app->add_option("--data", a.data, "Dataset root: <root>/<ClassName>/<image>")->required();
    app->add_option("--manifest", a.manifest, "Class manifest (default <data>/classes.txt)");
    auto* cfg = app->add_option("--config", a.config, "key = value configuration file");
    if (config_required) cfg->required();
    app->add_option("--seed", a.seed, "Random seed (overrides the config)");
}

PipelineConfig resolve_config(const DataArgs& a) {
    PipelineConfig cfg = a.config.empty() ? PipelineConfig{} : load_config(a.config);
    if (a.seed) cfg.seed = *a.seed;
    return cfg;
}

std::vector<std::string> resolve_classes(const DataArgs& a) {
    return read_manifest(a.manifest.empty() ? fs::path(a.data) / "classes.txt" : fs::path(a.manifest));
}

std::vector<Patch> load_patches(const fs::path& root, const std::vector<std::string>& classes,
                                const PipelineConfig& cfg, GridSpec grid, const LoadOptions& opts = {}) {
    auto images = load_dataset(root, classes, opts);
    if (cfg.color_correct) {
        for (auto& img : images) img = color_correct(img);
    }
    return tile_dataset(images, grid);
}

ModelShape shape_from(const PipelineConfig& cfg, int num_classes) {
    ModelShape s;
    s.input_dim = cfg.input_size * cfg.input_size * 3;
    s.hidden = cfg.hidden;
    s.feature_dim = cfg.feature_dim;
    s.head_width = cfg.head_width;
    s.num_classes = num_classes;
    s.dropout_p = cfg.dropout;
    return s;
}

struct EncoderChoice {
    std::unique_ptr<PatchEncoder> encoder;
    std::string kind;
};

EncoderChoice make_encoder(const std::string& features_csv, int input_size) {
    if (features_csv.empty()) return {std::make_unique<PixelEncoder>(input_size), "pixels"};
    return {std::make_unique<PrecomputedEncoder>(load_precomputed_features(features_csv)), "features"};
}

std::vector<PromptGroup> resolve_groups(const PipelineConfig& cfg) {
    return cfg.prompts.empty() ? builtin_prompt_groups(parse_scenario(cfg.scenario)) : load_prompt_groups(cfg.prompts);
}

ClassId resolve_fish_class(const PipelineConfig& cfg, std::span<const PromptGroup> groups, int num_classes) {
    const bool has_fish =
        std::any_of(groups.begin(), groups.end(), [](const auto& g) { return g.group == GroupId::Fish; });
    if (!has_fish) return -1;
    const ClassId fish = cfg.fish_class >= 0 ? cfg.fish_class : num_classes - 1;
    if (fish < 1 || fish >= num_classes) throw UsageError("fish_class is outside the class list");
    return fish;
}

void write_text(const fs::path& file, const std::string& text) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write " + file.string());
    out << text;
}

std::string labels_to_jsonl(std::span<const Patch> patches, std::span<const ClassId> labels, const std::string& origin) {
    std::string out;
    for (std::size_t i = 0; i < patches.size(); ++i) {
        nlohmann::json j;
        j["source_id"] = patches[i].parent_id;
        j["row"] = patches[i].row;
        j["col"] = patches[i].col;
        j["label"] = labels[i];
        j["origin"] = origin;
        out += j.dump() + "\n";
    }
    return out;
}

std::vector<ClassId> labels_from_jsonl(const fs::path& file, std::span<const Patch> patches) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open pseudo-label file " + file.string());
    std::map<PatchKey, ClassId> table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            table[{j.at("source_id").get<std::string>(), j.at("row").get<int>(), j.at("col").get<int>()}] =
                j.at("label").get<ClassId>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    std::vector<ClassId> labels;
    labels.reserve(patches.size());
    for (const auto& p : patches) {
        auto it = table.find({p.parent_id, p.row, p.col});
        if (it == table.end()) {
            throw DataError(file.string() + " has no label for " + p.parent_id + " (" + std::to_string(p.row) + "," +
                            std::to_string(p.col) + ")");
        }
        labels.push_back(it->second);
    }
    return labels;
}

std::unique_ptr<VlmScorer> make_scorer(const std::string& scores_csv, const PipelineConfig& cfg,
                                       std::span<const PromptGroup> groups) {
    if (scores_csv.empty()) {
        spdlog::info("no --scores given, using the mock colour scorer (seed {})", cfg.mock_seed);
        return mock_scorer(cfg.mock_seed);
    }
    return std::make_unique<ScoreMatrixScorer>(load_score_matrix(scores_csv, groups));
}

Model initial_model(const std::string& init_ckpt, const PipelineConfig& cfg, int num_classes,
                    const EncoderChoice& enc) {
    if (!init_ckpt.empty()) {
        Checkpoint init = load_checkpoint(init_ckpt);
        if (init.model.num_classes() != num_classes) {
            throw DataError("initial checkpoint has " + std::to_string(init.model.num_classes()) + " classes, data has " +
                            std::to_string(num_classes));
        }
        if (init.encoder != enc.kind) throw DataError("initial checkpoint uses a different encoder");
        init.model.head.dropout_p = cfg.dropout;
        return std::move(init.model);
    }
    ModelShape shape = shape_from(cfg, num_classes);
    if (enc.kind == "features") {
        shape.identity_backbone = true;
        shape.input_dim = shape.feature_dim = enc.encoder->dim();
    }
    Model m = init_model(shape, cfg.seed, parse_init_scheme(cfg.init));
    m.input_size = cfg.input_size;
    return m;
}

// ---------------------------------------------------------------- pretrain

struct PretrainArgs {
    DataArgs data;
    std::string out;
};

int cmd_pretrain(const PretrainArgs& a) {
    const PipelineConfig cfg = resolve_config(a.data);
    const auto classes = resolve_classes(a.data);
    const auto patches = load_patches(a.data.data, classes, cfg, cfg.grid);

    Model model = init_model(shape_from(cfg, static_cast<int>(classes.size())), cfg.seed, parse_init_scheme(cfg.init));
    model.input_size = cfg.input_size;
    PretextConfig pc;
    pc.epochs = cfg.pretrain_epochs;
    pc.batch = cfg.pretrain_batch;
    pc.lr = cfg.pretrain_lr;
    pc.temperature = cfg.temperature;
    pc.input_size = cfg.input_size;
    pc.crop_fraction = cfg.crop_fraction;
    pc.augment = cfg.augment;
    pc.clip_norm = cfg.clip_norm;
    Rng rng(cfg.seed);
    const PretextResult res = pretrain(model.backbone, patches, pc, rng);
    if (!res.loss_curve.empty()) {
        spdlog::info("pretext loss {:.6f} -> {:.6f} over {} epochs", res.loss_curve.front(), res.loss_curve.back(),
                     res.loss_curve.size());
    }
    save_checkpoint({model, classes, cfg.grid, "pretext", "pixels", res.adam}, a.out);
    return kOk;
}

// ---------------------------------------------------------------- pseudolabel

struct PseudolabelArgs {
    std::string engine;
    DataArgs data;
    std::string ckpt;
    std::string scores;
    std::string features;
    std::string out;
};

int cmd_pseudolabel(const PseudolabelArgs& a) {
    PipelineConfig cfg = resolve_config(a.data);
    std::vector<std::string> classes;
    std::optional<Checkpoint> ckpt;
    if (!a.ckpt.empty()) {
        ckpt = load_checkpoint(a.ckpt);
        classes = ckpt->classes;
        if (a.data.config.empty()) cfg.grid = ckpt->grid;
    } else {
        classes = resolve_classes(a.data);
    }
    const auto patches = load_patches(a.data.data, classes, cfg, cfg.grid);

    std::vector<ClassId> labels;
    if (a.engine == "seafeats") {
        if (!ckpt && a.features.empty()) throw UsageError("pseudolabel seafeats needs --ckpt or --features");
        const EncoderChoice enc = make_encoder(a.features, ckpt ? ckpt->model.input_size : cfg.input_size);
        Model model;
        if (ckpt) {
            model = ckpt->model;
            if (ckpt->encoder != enc.kind) throw DataError("checkpoint encoder does not match --features usage");
        } else {
            model = initial_model("", cfg, static_cast<int>(classes.size()), enc);
        }
        if (auto* pre = dynamic_cast<const PrecomputedEncoder*>(enc.encoder.get())) pre->require_coverage(patches);
        const auto [bank, pseudo] = seafeats_pseudolabels(model, *enc.encoder, patches, cfg.template_cap);
        for (const auto& p : pseudo) labels.push_back(p.label);
    } else {
        const auto groups = resolve_groups(cfg);
        const auto scorer = make_scorer(a.scores, cfg, groups);
        const ClassId fish = resolve_fish_class(cfg, groups, static_cast<int>(classes.size()));
        for (const auto& l : generate_pseudolabels(patches, *scorer, groups, fish)) labels.push_back(l.label);
    }
    write_text(a.out, labels_to_jsonl(patches, labels, a.engine));
    const auto background = std::count(labels.begin(), labels.end(), 0);
    spdlog::info("{} pseudo-labels written to {} ({} background)", labels.size(), a.out, background);
    return kOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string engine;
    DataArgs data;
    std::string out;
    std::string init;
    std::string labels;
    std::string scores;
    std::string features;
    std::string stats;
};

int cmd_train(const TrainArgs& a) {
    const PipelineConfig cfg = resolve_config(a.data);
    const auto classes = resolve_classes(a.data);
    const int num_classes = static_cast<int>(classes.size());
    const auto patches = load_patches(a.data.data, classes, cfg, cfg.grid);
    const EncoderChoice enc = make_encoder(a.features, cfg.input_size);
    if (auto* pre = dynamic_cast<const PrecomputedEncoder*>(enc.encoder.get())) pre->require_coverage(patches);

    Model model = initial_model(a.init, cfg, num_classes, enc);
    Rng rng(cfg.seed);
    std::optional<AdamState> adam;
    if (a.engine == "seafeats") {
        SeafeatsConfig sc;
        sc.epochs = cfg.epochs;
        sc.lr = cfg.lr;
        sc.batch_images = cfg.batch_images;
        sc.weights = {cfg.weights_for(num_classes)};
        sc.template_cap = cfg.template_cap;
        sc.clip_norm = cfg.clip_norm;
        SeafeatsResult res = train_seafeats(model, *enc.encoder, patches, sc, rng);
        if (!a.stats.empty()) write_text(a.stats, stats_to_jsonl(res.stats));
        adam = std::move(res.adam);
    } else {
        std::vector<ClassId> labels;
        if (!a.labels.empty()) {
            labels = labels_from_jsonl(a.labels, patches);
        } else {
            const auto groups = resolve_groups(cfg);
            const auto scorer = make_scorer(a.scores, cfg, groups);
            const ClassId fish = resolve_fish_class(cfg, groups, num_classes);
            for (const auto& l : generate_pseudolabels(patches, *scorer, groups, fish)) labels.push_back(l.label);
        }
        SeaclipConfig sc;
        sc.epochs = cfg.epochs;
        sc.lr = cfg.lr;
        sc.batch_patches = cfg.batch_patches;
        sc.weights = {cfg.weights_for(num_classes)};
        sc.clip_norm = cfg.clip_norm;
        SeaclipResult res = train_seaclip(model, *enc.encoder, patches, labels, sc, rng);
        if (!a.stats.empty()) {
            std::string text;
            for (std::size_t e = 0; e < res.epoch_loss.size(); ++e) {
                text += nlohmann::json{{"epoch", e + 1}, {"mean_loss", res.epoch_loss[e]}}.dump() + "\n";
            }
            write_text(a.stats, text);
        }
        adam = std::move(res.adam);
    }
    save_checkpoint({model, classes, cfg.grid, a.engine, enc.kind, adam}, a.out);
    return kOk;
}

// ---------------------------------------------------------------- finetune

struct FinetuneArgs {
    std::string ckpt;
    std::string data;
    std::string config;
    int epochs = 10;
    std::size_t shots = 10;
    std::string out;
    std::optional<std::uint64_t> seed;
};

int cmd_finetune(const FinetuneArgs& a) {
    PipelineConfig cfg = a.config.empty() ? PipelineConfig{} : load_config(a.config);
    if (a.seed) cfg.seed = *a.seed;
    Checkpoint ckpt = load_checkpoint(a.ckpt);
    if (ckpt.encoder != "pixels") throw DataError("finetune needs a pixel-encoder checkpoint");
    if (a.epochs < 0) throw UsageError("--epochs must be non-negative");
    const GridSpec grid = a.config.empty() ? ckpt.grid : cfg.grid;

    LoadOptions opts;
    opts.require_all_classes = false;
    opts.max_per_class = a.shots;
    const auto patches = load_patches(a.data, ckpt.classes, cfg, grid, opts);

    const PixelEncoder encoder(ckpt.model.input_size);
    SeafeatsConfig sc;
    sc.epochs = a.epochs;
    sc.lr = cfg.lr;
    sc.batch_images = cfg.batch_images;
    sc.weights = {cfg.weights_for(ckpt.model.num_classes())};
    sc.template_cap = cfg.template_cap;
    sc.clip_norm = cfg.clip_norm;
    if (cfg.finetune_augment) sc.augment = finetune_augmentation();
    sc.augment_input_size = ckpt.model.input_size;
    Rng rng(cfg.seed);
    SeafeatsResult res = train_seafeats(ckpt.model, encoder, patches, sc, rng);
    ckpt.engine = "seafeats";
    ckpt.adam = std::move(res.adam);
    save_checkpoint(ckpt, a.out);
    return kOk;
}

// ---------------------------------------------------------------- infer

struct InferArgs {
    std::string image;
    std::string dir;
    std::string grid;
    std::string ckpt_a;
    std::string ckpt_b;
    std::string out;
    std::string config;
    std::string features;
    bool png = false;
    bool color_correct = false;
    int jobs = 1;
    std::optional<std::uint64_t> seed;
};

std::string file_safe(std::string id) {
    for (char& ch : id) {
        if (ch == '/' || ch == '\\' || ch == ':') ch = '_';
    }
    return id;
}

int cmd_infer(const InferArgs& a) {
    const GridSpec grid = parse_grid(a.grid);
    PipelineConfig cfg = a.config.empty() ? PipelineConfig{} : load_config(a.config);
    EnsembleConfig ecfg{cfg.ensemble_weights, cfg.ensemble_mode};

    std::vector<Checkpoint> ckpts;
    ckpts.push_back(load_checkpoint(a.ckpt_a));
    if (!a.ckpt_b.empty()) ckpts.push_back(load_checkpoint(a.ckpt_b));
    if (ckpts.size() == 2 && ckpts[0].classes != ckpts[1].classes) {
        throw DataError("the two checkpoints were trained on different class lists");
    }
    std::optional<PrecomputedEncoder> precomputed;
    if (!a.features.empty()) precomputed.emplace(load_precomputed_features(a.features));
    std::vector<std::unique_ptr<PatchEncoder>> pixel_encoders;
    std::vector<EnsembleMember> members;
    for (const auto& c : ckpts) {
        if (c.encoder == "features") {
            if (!precomputed) throw UsageError("checkpoint was trained on precomputed features; pass --features");
            members.push_back({&c.model, &*precomputed});
        } else {
            pixel_encoders.push_back(std::make_unique<PixelEncoder>(c.model.input_size));
            members.push_back({&c.model, pixel_encoders.back().get()});
        }
    }

    // One job per image (or per feature-table source id).
    std::vector<fs::path> files;
    std::vector<std::string> feature_ids;
    if (!a.image.empty()) files.emplace_back(a.image);
    if (!a.dir.empty()) {
        if (!fs::is_directory(a.dir)) throw DataError("--dir " + a.dir + " is not a directory");
        for (const auto& e : fs::directory_iterator(a.dir)) {
            if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
    }
    const bool pixel_members = !pixel_encoders.empty();
    if (files.empty()) {
        if (!precomputed || pixel_members) throw UsageError("infer needs --image or --dir");
        std::set<std::string> ids;
        for (const auto& [key, v] : precomputed->table().rows) ids.insert(std::get<0>(key));
        feature_ids.assign(ids.begin(), ids.end());
    }
    const std::size_t jobs = files.empty() ? feature_ids.size() : files.size();

    std::vector<ClassMask> masks(jobs);
    std::vector<std::string> errors(jobs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs; i = next++) {
            try {
                if (!files.empty()) {
                    LabeledImage img{load_image(files[i]), 0, files[i].stem().string()};
                    if (a.color_correct || cfg.color_correct) img = color_correct(img);
                    masks[i] = predict_mask(img, grid, members, ecfg);
                } else {
                    std::vector<Patch> patches;
                    for (int r = 0; r < grid.rows; ++r) {
                        for (int c = 0; c < grid.cols; ++c) patches.push_back(Patch{{}, r, c, feature_ids[i], 0});
                    }
                    masks[i] = reassemble_mask(predict_patches(patches, members, ecfg), grid, feature_ids[i]);
                }
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const int threads = std::max(1, std::min<int>(a.jobs, static_cast<int>(jobs)));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (!e.empty()) throw DataError(e);
    }

    fs::create_directories(a.out);
    for (const auto& m : masks) {
        const fs::path base = fs::path(a.out) / file_safe(m.source_id);
        write_mask(m, base.string() + ".json");
        if (a.png) write_mask_png(m, base.string() + "_mask.png");
    }
    spdlog::info("wrote {} masks to {}", masks.size(), a.out);
    return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string pred;
    std::string truth;
    std::string report;
    std::string manifest;
    std::string table;
    bool binary = false;
    bool outlier = false;
};

std::map<std::string, ClassMask> read_mask_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::map<std::string, ClassMask> masks;
    for (const auto& f : files) {
        ClassMask m = read_mask(f);
        const std::string id = m.source_id;
        if (!masks.emplace(id, std::move(m)).second) throw DataError("duplicate mask for " + id + " in " + dir.string());
    }
    return masks;
}

int cmd_eval(const EvalArgs& a) {
    const auto preds = read_mask_dir(a.pred);
    const auto truths = read_mask_dir(a.truth);
    if (truths.empty()) throw DataError("no ground-truth masks in " + a.truth);

    std::vector<std::string> names;
    int num_classes = 0;
    if (!a.manifest.empty()) {
        names = read_manifest(a.manifest);
        num_classes = static_cast<int>(names.size());
    } else {
        for (const auto* set : {&preds, &truths}) {
            for (const auto& [id, m] : *set) {
                for (ClassId l : m.labels) num_classes = std::max(num_classes, l + 1);
            }
        }
        for (int c = 0; c < num_classes; ++c) names.push_back(c == 0 ? "Background" : "Class" + std::to_string(c));
    }

    ConfusionMatrix cm(num_classes);
    for (const auto& [id, truth] : truths) {
        auto it = preds.find(id);
        if (it == preds.end()) throw DataError("no prediction for " + id);
        const ClassMask& pred = it->second;
        if (pred.rows != truth.rows || pred.cols != truth.cols) throw DataError("grid mismatch for " + id);
        for (std::size_t i = 0; i < truth.labels.size(); ++i) cm.accumulate(truth.labels[i], pred.labels[i]);
    }

    MetricReport report;
    if (a.binary) {
        if (num_classes < 2) throw DataError("binary evaluation needs at least two classes");
        const int fish = a.outlier ? num_classes - 1 : -1;
        if (a.outlier && num_classes < 3) throw DataError("outlier evaluation needs background, seagrass and fish classes");
        std::vector<int> mapping(static_cast<std::size_t>(num_classes), 1);
        mapping[0] = 0;
        if (a.outlier) mapping[static_cast<std::size_t>(fish)] = 2;
        std::vector<std::string> bin_names{names[0], "Seagrass"};
        if (a.outlier) bin_names.push_back(names[static_cast<std::size_t>(fish)]);
        if (a.outlier) {
            report = make_report(collapse_classes(cm, mapping, 3), bin_names);
        } else {
            std::vector<ClassId> seagrass;
            for (int c = 1; c < num_classes; ++c) seagrass.push_back(c);
            report = make_report(collapse_binary(cm, seagrass), bin_names);
        }
    } else {
        report = make_report(cm, names);
    }
    write_text(a.report, report_to_json(report));
    if (!a.table.empty()) write_text(a.table, report_to_table(report));
    std::cout << report_to_table(report);
    return kOk;
}

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"Weakly supervised coarse segmentation from image-level labels", "seagrid"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Print help for every subcommand");

    PretrainArgs pre;
    auto* pretrain_cmd = app.add_subcommand("pretrain", "Contrastive pretraining of the backbone");
    add_data_options(pretrain_cmd, pre.data, true);
    pretrain_cmd->add_option("--out", pre.out, "Output checkpoint")->required();

    PseudolabelArgs pl;
    auto* pl_cmd = app.add_subcommand("pseudolabel", "Write patch pseudo-labels as JSON lines");
    pl_cmd->add_option("engine", pl.engine, "seafeats | seaclip")->required()->check(CLI::IsMember({"seafeats", "seaclip"}));
    add_data_options(pl_cmd, pl.data, false);
    pl_cmd->add_option("--ckpt", pl.ckpt, "Checkpoint whose encoder builds the templates (seafeats)");
    pl_cmd->add_option("--scores", pl.scores, "Precomputed similarity CSV (seaclip; default mock scorer)");
    pl_cmd->add_option("--features", pl.features, "Precomputed feature CSV");
    pl_cmd->add_option("--out", pl.out, "Output JSON-lines file")->required();

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train a patch classifier from image-level labels");
    train_cmd->add_option("engine", tr.engine, "seafeats | seaclip")->required()->check(CLI::IsMember({"seafeats", "seaclip"}));
    add_data_options(train_cmd, tr.data, true);
    train_cmd->add_option("--out", tr.out, "Output checkpoint")->required();
    train_cmd->add_option("--init", tr.init, "Initial checkpoint (e.g. from pretrain)");
    train_cmd->add_option("--labels", tr.labels, "Pseudo-label JSON lines (seaclip)");
    train_cmd->add_option("--scores", tr.scores, "Precomputed similarity CSV (seaclip)");
    train_cmd->add_option("--features", tr.features, "Precomputed feature CSV");
    train_cmd->add_option("--stats", tr.stats, "Per-epoch statistics, JSON lines");

    InferArgs in;
    auto* infer_cmd = app.add_subcommand("infer", "Predict coarse masks");
    infer_cmd->add_option("--image", in.image, "Single image");
    infer_cmd->add_option("--dir", in.dir, "Directory of images");
    infer_cmd->add_option("--grid", in.grid, "Grid as RxC, e.g. 5x8")->required();
    infer_cmd->add_option("--ckpt-a", in.ckpt_a, "First classifier")->required();
    infer_cmd->add_option("--ckpt-b", in.ckpt_b, "Second classifier (ensemble)");
    infer_cmd->add_option("--out", in.out, "Output directory")->required();
    infer_cmd->add_option("--config", in.config, "Configuration (ensemble settings)");
    infer_cmd->add_option("--features", in.features, "Precomputed feature CSV");
    infer_cmd->add_flag("--png", in.png, "Also write colour PNG masks");
    infer_cmd->add_flag("--color-correct", in.color_correct, "Gray-world colour correction before tiling");
    infer_cmd->add_option("--jobs", in.jobs, "Parallel images")->check(CLI::PositiveNumber);
    infer_cmd->add_option("--seed", in.seed, "Accepted for uniformity; inference is deterministic");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Score predicted masks against ground truth");
    eval_cmd->add_option("--pred", ev.pred, "Directory of predicted mask JSON")->required();
    eval_cmd->add_option("--truth", ev.truth, "Directory of ground-truth mask JSON")->required();
    eval_cmd->add_option("--report", ev.report, "Output JSON report")->required();
    eval_cmd->add_option("--manifest", ev.manifest, "Class manifest for names");
    eval_cmd->add_option("--table", ev.table, "Also write the text table here");
    eval_cmd->add_flag("--binary", ev.binary, "Collapse seagrass classes into one");
    eval_cmd->add_flag("--outlier", ev.outlier, "Last class is the fish/outlier class");
    std::optional<std::uint64_t> eval_seed;
    eval_cmd->add_option("--seed", eval_seed, "Accepted for uniformity; evaluation is deterministic");

    FinetuneArgs ft;
    auto* ft_cmd = app.add_subcommand("finetune", "Few-shot fine-tuning of a SeaFeats checkpoint");
    ft_cmd->add_option("--ckpt", ft.ckpt, "Checkpoint to fine-tune")->required();
    ft_cmd->add_option("--data", ft.data, "Dataset root")->required();
    ft_cmd->add_option("--epochs", ft.epochs, "Epochs")->required();
    ft_cmd->add_option("--out", ft.out, "Output checkpoint")->required();
    ft_cmd->add_option("--config", ft.config, "Configuration");
    ft_cmd->add_option("--shots", ft.shots, "Images per class (default 10)");
    ft_cmd->add_option("--seed", ft.seed, "Random seed");

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    if (*pretrain_cmd) return cmd_pretrain(pre);
    if (*pl_cmd) return cmd_pseudolabel(pl);
    if (*train_cmd) return cmd_train(tr);
    if (*infer_cmd) return cmd_infer(in);
    if (*eval_cmd) return cmd_eval(ev);
    if (*ft_cmd) return cmd_finetune(ft);
    return kUsage;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    setup_logging();
    try {
        return dispatch(args);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumericError;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDataError;
    }
}

}  // namespace seagrid::cli
