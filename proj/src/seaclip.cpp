#include "seagrid/seaclip.hpp"

#include "seagrid/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

namespace seagrid {

Scenario parse_scenario(const std::string& name) {
    if (name == "deepseagrass") return Scenario::DeepSeagrass;
    if (name == "global_wetlands") return Scenario::GlobalWetlands;
    throw UsageError("unknown scenario '" + name + "' (expected deepseagrass|global_wetlands)");
}

std::vector<PromptGroup> builtin_prompt_groups(Scenario scenario) {
    const std::vector<std::string> seagrass{
        "a blurry photo of seagrass",
        "a photo containing some seagrass",
        "a photo of underwater plants",
        "a photo of underwater grass",
        "a photo of green, grass-like leaves underwater",
        "a photo of seagrass",
    };
    switch (scenario) {
        case Scenario::DeepSeagrass:
            return {
                {GroupId::Background,
                 {"a photo of sand", "a photo of water", "a photo of sand or water", "a blurry photo of water",
                  "a blurry photo of sand"}},
                {GroupId::Seagrass, seagrass},
            };
        case Scenario::GlobalWetlands:
            return {
                {GroupId::Background,
                 {"a photo of sand", "a photo of blue water", "a photo of murky, green water",
                  "a photo of sand or water", "a blurry photo of water", "a blurry photo of sand"}},
                {GroupId::Seagrass, seagrass},
                {GroupId::Fish,
                 {"a photo of fish", "a close-up photo of fish", "a blurry photo of fish",
                  "a photo containing part of a fish", "a photo of fish scales"}},
            };
    }
    throw UsageError("unknown scenario");
}

void validate_prompt_groups(std::span<const PromptGroup> groups) {
    if (groups.empty()) throw DataError("no prompt groups configured");
    std::set<std::string> seen;
    for (const auto& g : groups) {
        if (g.prompts.empty()) throw DataError("prompt group " + std::to_string(static_cast<int>(g.group)) + " is empty");
        for (const auto& p : g.prompts) {
            if (!seen.insert(p).second) throw DataError("prompt '" + p + "' appears more than once");
        }
    }
}

std::vector<std::string> flatten_prompts(std::span<const PromptGroup> groups) {
    std::vector<std::string> out;
    for (const auto& g : groups) out.insert(out.end(), g.prompts.begin(), g.prompts.end());
    return out;
}

std::vector<PromptGroup> load_prompt_groups(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open prompt file " + file.string());
    std::vector<PromptGroup> groups;
    try {
        const auto j = nlohmann::json::parse(in);
        for (const auto& entry : j) {
            PromptGroup g;
            const auto name = entry.at("group").get<std::string>();
            if (name == "background") {
                g.group = GroupId::Background;
            } else if (name == "seagrass") {
                g.group = GroupId::Seagrass;
            } else if (name == "fish") {
                g.group = GroupId::Fish;
            } else {
                throw DataError("unknown prompt group '" + name + "' in " + file.string());
            }
            g.prompts = entry.at("prompts").get<std::vector<std::string>>();
            groups.push_back(std::move(g));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed prompt file " + file.string() + ": " + e.what());
    }
    validate_prompt_groups(groups);
    return groups;
}

GroupId zero_shot_group(std::span<const double> similarities, std::span<const PromptGroup> groups) {
    std::size_t total = 0;
    for (const auto& g : groups) total += g.prompts.size();
    if (similarities.size() != total || total == 0) {
        throw DataError("zero_shot_group: " + std::to_string(similarities.size()) + " scores for " +
                        std::to_string(total) + " prompts");
    }
    const std::size_t best =
        static_cast<std::size_t>(std::max_element(similarities.begin(), similarities.end()) - similarities.begin());
    std::size_t offset = 0;
    for (const auto& g : groups) {
        offset += g.prompts.size();
        if (best < offset) return g.group;
    }
    return groups.back().group;
}

Eigen::VectorXd zero_shot_probabilities(std::span<const double> similarities, double scale) {
    Eigen::VectorXd s(static_cast<Eigen::Index>(similarities.size()));
    for (std::size_t i = 0; i < similarities.size(); ++i) s[static_cast<Eigen::Index>(i)] = scale * similarities[i];
    Eigen::VectorXd e = (s.array() - s.maxCoeff()).exp();
    return e / e.sum();
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<std::string> words(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (std::isalpha(static_cast<unsigned char>(ch))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

constexpr double kHashAmplitude = 0.02;

}  // namespace

Eigen::Vector4d MockScorer::patch_embedding(const Patch& patch) {
    const Image& img = patch.pixels;
    const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
    double r = 0.0, g = 0.0, b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        r += img.data[i * 3];
        g += img.data[i * 3 + 1];
        b += img.data[i * 3 + 2];
    }
    if (n > 0) {
        r /= static_cast<double>(n);
        g /= static_cast<double>(n);
        b /= static_cast<double>(n);
    }
    const double chroma = std::max({r, g, b}) - std::min({r, g, b});
    const double brightness = (r + g + b) / 3.0;
    return {g - 0.5 * (r + b), r - b, b - 0.5 * (r + g), 2.0 * brightness * (0.25 - chroma)};
}

Eigen::Vector4d MockScorer::prompt_embedding(const std::string& prompt) const {
    static const std::map<std::string, int> lexicon{
        {"seagrass", 0}, {"grass", 0}, {"plants", 0}, {"plant", 0}, {"leaves", 0}, {"leaf", 0},
        {"sand", 1},     {"sandy", 1}, {"water", 2},  {"fish", 3},  {"scales", 3},
    };
    Eigen::Vector4d e = Eigen::Vector4d::Zero();
    int hits = 0;
    for (const auto& w : words(prompt)) {
        auto it = lexicon.find(w);
        if (it != lexicon.end()) {
            e[it->second] += 1.0;
            ++hits;
        }
    }
    if (hits > 0) e /= hits;
    std::uint64_t state = fnv1a(prompt) ^ seed_;
    for (int k = 0; k < 4; ++k) {
        const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
        e[k] += kHashAmplitude * (2.0 * u - 1.0);
    }
    return e;
}

std::vector<double> MockScorer::score(const Patch& patch, std::span<const std::string> prompts) const {
    const Eigen::Vector4d pe = patch_embedding(patch);
    std::vector<double> out;
    out.reserve(prompts.size());
    for (const auto& p : prompts) out.push_back(pe.dot(prompt_embedding(p)));
    return out;
}

std::unique_ptr<VlmScorer> mock_scorer(std::uint64_t seed) { return std::make_unique<MockScorer>(seed); }

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

}  // namespace

ScoreMatrix load_score_matrix(const std::filesystem::path& file, std::span<const PromptGroup> groups) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open score file " + file.string());
    const auto expected = flatten_prompts(groups);
    const std::size_t q = expected.size();

    ScoreMatrix sm;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    bool have_prompts = false, have_header = false;
    const std::string tag = "# prompts: ";
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = file.string() + ":" + std::to_string(line_no);
        if (line[0] == '#') {
            if (line.rfind(tag, 0) == 0) {
                sm.prompts = split(line.substr(tag.size()), '\t');
                if (sm.prompts != expected) throw DataError(where + ": prompts do not match the configured groups");
                have_prompts = true;
            }
            continue;
        }
        const auto cells = split(line, ',');
        if (!have_header) {
            if (cells.size() < 3 || cells[0] != "source_id" || cells[1] != "row" || cells[2] != "col") {
                throw DataError(where + ": expected header source_id,row,col,s0,...");
            }
            if (cells.size() != q + 3) {
                throw DataError(where + ": header has " + std::to_string(cells.size() - 3) + " score columns, groups have " +
                                std::to_string(q) + " prompts");
            }
            have_header = true;
            continue;
        }
        if (cells.size() != q + 3) {
            throw DataError(where + ": expected " + std::to_string(q + 3) + " columns, found " +
                            std::to_string(cells.size()));
        }
        std::vector<double> vals(q);
        int r = 0, c = 0;
        try {
            r = std::stoi(cells[1]);
            c = std::stoi(cells[2]);
            for (std::size_t k = 0; k < q; ++k) {
                std::size_t used = 0;
                vals[k] = std::stod(cells[3 + k], &used);
                if (used != cells[3 + k].size()) throw std::invalid_argument(cells[3 + k]);
            }
        } catch (const std::exception&) {
            throw DataError(where + ": cannot parse number");
        }
        const PatchKey key{cells[0], r, c};
        if (!sm.index.emplace(key, static_cast<Eigen::Index>(rows.size())).second) {
            throw DataError(where + ": duplicate patch " + cells[0] + " (" + cells[1] + "," + cells[2] + ")");
        }
        rows.push_back(std::move(vals));
    }
    if (!have_prompts) throw DataError(file.string() + ": missing '# prompts:' line");
    if (!have_header) throw DataError(file.string() + ": missing header");
    sm.scores.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(q));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < q; ++k) sm.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    if (!sm.scores.allFinite()) throw DataError(file.string() + ": non-finite score");
    return sm;
}

void write_score_matrix(const ScoreMatrix& matrix, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write score file " + file.string());
    out << "# prompts: ";
    for (std::size_t i = 0; i < matrix.prompts.size(); ++i) out << (i ? "\t" : "") << matrix.prompts[i];
    out << "\nsource_id,row,col";
    for (std::size_t k = 0; k < matrix.prompts.size(); ++k) out << ",s" << k;
    out << '\n';
    for (const auto& [key, row] : matrix.index) {
        out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key);
        for (Eigen::Index k = 0; k < matrix.scores.cols(); ++k) out << ',' << format_real(matrix.scores(row, k));
        out << '\n';
    }
}

std::vector<double> ScoreMatrixScorer::score(const Patch& patch, std::span<const std::string> prompts) const {
    if (!std::equal(prompts.begin(), prompts.end(), matrix_.prompts.begin(), matrix_.prompts.end())) {
        throw DataError("score matrix was produced for a different prompt list");
    }
    auto it = matrix_.index.find({patch.parent_id, patch.row, patch.col});
    if (it == matrix_.index.end()) {
        throw DataError("no scores for patch " + patch.parent_id + " (" + std::to_string(patch.row) + "," +
                        std::to_string(patch.col) + ")");
    }
    std::vector<double> out(static_cast<std::size_t>(matrix_.scores.cols()));
    for (Eigen::Index k = 0; k < matrix_.scores.cols(); ++k) out[static_cast<std::size_t>(k)] = matrix_.scores(it->second, k);
    return out;
}

std::vector<ClipLabel> generate_pseudolabels(std::span<const Patch> patches, const VlmScorer& scorer,
                                             std::span<const PromptGroup> groups, ClassId fish_class) {
    validate_prompt_groups(groups);
    const bool has_fish = std::any_of(groups.begin(), groups.end(), [](const auto& g) { return g.group == GroupId::Fish; });
    if (has_fish && fish_class < 1) throw UsageError("a fish prompt group needs a fish class id");
    const auto prompts = flatten_prompts(groups);

    std::vector<ClipLabel> out;
    out.reserve(patches.size());
    for (const auto& p : patches) {
        std::vector<double> sims;
        try {
            sims = scorer.score(p, prompts);
        } catch (const std::exception& e) {
            throw DataError("scorer failed on patch " + p.parent_id + " (" + std::to_string(p.row) + "," +
                            std::to_string(p.col) + "): " + e.what());
        }
        ClipLabel l;
        l.group = zero_shot_group(sims, groups);
        switch (l.group) {
            case GroupId::Background: l.label = 0; break;
            case GroupId::Seagrass: l.label = p.inherited_label; break;
            case GroupId::Fish: l.label = fish_class; break;
        }
        out.push_back(l);
    }
    return out;
}

SeaclipResult train_seaclip(Model& model, const PatchEncoder& encoder, std::span<const Patch> patches,
                            std::span<const ClassId> pseudolabels, const SeaclipConfig& cfg, Rng& rng) {
    if (pseudolabels.size() != patches.size()) {
        throw DataError("train_seaclip: " + std::to_string(pseudolabels.size()) + " pseudo-labels for " +
                        std::to_string(patches.size()) + " patches");
    }
    if (cfg.batch_patches < 1) throw UsageError("batch_patches must be positive");
    cfg.weights.validate(model.num_classes());
    for (ClassId l : pseudolabels) {
        if (l < 0 || l >= model.num_classes()) throw DataError("pseudo-label " + std::to_string(l) + " out of range");
    }

    const Matrix inputs = encoder.encode_all(patches);
    SeaclipResult result;
    result.adam = AdamState(cfg.lr);
    std::vector<std::size_t> order(patches.size());
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        int steps = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_patches)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_patches));
            Matrix batch(static_cast<Eigen::Index>(end - start), inputs.cols());
            std::vector<ClassId> targets;
            for (std::size_t b = start; b < end; ++b) {
                batch.row(static_cast<Eigen::Index>(b - start)) = inputs.row(static_cast<Eigen::Index>(order[b]));
                targets.push_back(pseudolabels[order[b]]);
            }
            ModelForward fwd = model_forward(model, batch, Mode::Train, rng);
            LossGrad lg = weighted_ce_batch(fwd.logits, targets, cfg.weights);
            if (!std::isfinite(lg.loss)) {
                throw NumericError("train_seaclip: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                   std::to_string(steps + 1));
            }
            ModelGrads grads = model_backward(model, fwd.cache, lg.grad);
            clip_global_norm(grads.params, cfg.clip_norm);
            auto params = model.parameters();
            adam_step(params, grads.params, result.adam);
            loss_sum += lg.loss;
            ++steps;
        }
        result.epoch_loss.push_back(steps > 0 ? loss_sum / steps : 0.0);
        spdlog::debug("seaclip epoch {}: loss {:.6f}", epoch, result.epoch_loss.back());
    }
    return result;
}

}  // namespace seagrid
