#include "seagrid/seafeats.hpp"

#include "seagrid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <json.hpp>
#include <spdlog/spdlog.h>

namespace seagrid {

bool TemplateBank::has(ClassId c) const {
    return std::binary_search(class_ids.begin(), class_ids.end(), c);
}

namespace {

Eigen::Index bank_index(const TemplateBank& bank, ClassId c) {
    auto it = std::lower_bound(bank.class_ids.begin(), bank.class_ids.end(), c);
    if (it == bank.class_ids.end() || *it != c) {
        throw DataError("template bank has no row for class " + std::to_string(c));
    }
    return static_cast<Eigen::Index>(it - bank.class_ids.begin());
}

}  // namespace

FeatureVector TemplateBank::row(ClassId c) const { return templates.row(bank_index(*this, c)).transpose(); }

std::size_t TemplateBank::count(ClassId c) const {
    return counts[static_cast<std::size_t>(bank_index(*this, c))];
}

bool TemplateBank::degenerate(ClassId c, double tol) const {
    return templates.row(bank_index(*this, c)).norm() <= tol;
}

TemplateBank compute_templates(const std::map<ClassId, std::vector<FeatureVector>>& features,
                               std::optional<std::size_t> cap) {
    auto bg = features.find(0);
    if (bg == features.end() || bg->second.empty()) {
        throw DataError("compute_templates: no background (class 0) features");
    }
    TemplateBank bank;
    const Eigen::Index dim = bg->second.front().size();
    std::vector<FeatureVector> rows;
    for (const auto& [cls, list] : features) {
        if (list.empty()) continue;
        const std::size_t n = cap ? std::min(*cap, list.size()) : list.size();
        if (n == 0) continue;
        FeatureVector sum = FeatureVector::Zero(dim);
        for (std::size_t i = 0; i < n; ++i) {
            if (list[i].size() != dim) throw DataError("compute_templates: inconsistent feature dimension");
            const double norm = list[i].norm();
            if (!(norm > 0.0)) {
                throw NumericError("compute_templates: zero-norm feature #" + std::to_string(i) + " of class " +
                                   std::to_string(cls));
            }
            sum += list[i] / norm;
        }
        bank.class_ids.push_back(cls);
        bank.counts.push_back(n);
        rows.push_back(sum / static_cast<double>(n));
    }
    bank.templates.resize(static_cast<Eigen::Index>(rows.size()), dim);
    for (std::size_t i = 0; i < rows.size(); ++i) bank.templates.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    return bank;
}

TemplateBank compute_templates(const Matrix& features, std::span<const ClassId> labels,
                               std::optional<std::size_t> cap) {
    if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
        throw DataError("compute_templates: label count mismatch");
    }
    std::map<ClassId, std::vector<FeatureVector>> grouped;
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        auto& list = grouped[labels[static_cast<std::size_t>(i)]];
        if (!cap || list.size() < *cap) list.push_back(features.row(i).transpose());
    }
    return compute_templates(grouped, cap);
}

double cosine_sim(const FeatureVector& a, const FeatureVector& b) {
    if (a.size() != b.size()) throw DataError("cosine_sim: dimension mismatch");
    const double na = a.norm(), nb = b.norm();
    if (!(na > 0.0) || !(nb > 0.0)) throw NumericError("cosine_sim: zero-norm vector");
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

PseudoLabel assign_pseudolabel(const FeatureVector& f, const TemplateBank& bank, ClassId image_label) {
    if (bank.degenerate(0)) throw NumericError("background template is degenerate (zero vector)");
    if (bank.degenerate(image_label)) {
        throw NumericError("template for class " + std::to_string(image_label) + " is degenerate (zero vector)");
    }
    PseudoLabel out;
    out.sim_bg = cosine_sim(f, bank.row(0));
    out.sim_cls = image_label == 0 ? out.sim_bg : cosine_sim(f, bank.row(image_label));
    out.label = out.sim_bg > out.sim_cls ? 0 : image_label;
    return out;
}

Matrix backbone_features(const Model& model, const PatchEncoder& encoder, std::span<const Patch> patches) {
    return extract_features(model.backbone, encoder.encode_all(patches), Mode::Eval).features;
}

namespace {

std::vector<ClassId> inherited_labels(std::span<const Patch> patches) {
    std::vector<ClassId> labels;
    labels.reserve(patches.size());
    for (const auto& p : patches) labels.push_back(p.inherited_label);
    return labels;
}

std::vector<PseudoLabel> label_all(const Matrix& features, const TemplateBank& bank, std::span<const Patch> patches) {
    std::vector<PseudoLabel> out;
    out.reserve(patches.size());
    for (std::size_t i = 0; i < patches.size(); ++i) {
        out.push_back(assign_pseudolabel(features.row(static_cast<Eigen::Index>(i)).transpose(), bank,
                                         patches[i].inherited_label));
    }
    return out;
}

/// Patch indices grouped by parent image, images in order of first appearance.
std::vector<std::vector<std::size_t>> group_by_image(std::span<const Patch> patches) {
    std::vector<std::vector<std::size_t>> groups;
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < patches.size(); ++i) {
        auto [it, inserted] = index.emplace(patches[i].parent_id, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(i);
    }
    return groups;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

}  // namespace

std::pair<TemplateBank, std::vector<PseudoLabel>> seafeats_pseudolabels(const Model& model, const PatchEncoder& encoder,
                                                                        std::span<const Patch> patches,
                                                                        std::optional<std::size_t> cap) {
    const Matrix features = backbone_features(model, encoder, patches);
    const auto labels = inherited_labels(patches);
    TemplateBank bank = compute_templates(features, labels, cap);
    auto pseudo = label_all(features, bank, patches);
    return {std::move(bank), std::move(pseudo)};
}

SeafeatsResult train_seafeats(Model& model, const PatchEncoder& encoder, std::span<const Patch> patches,
                              const SeafeatsConfig& cfg, Rng& rng) {
    if (patches.empty()) throw DataError("train_seafeats: no patches");
    if (cfg.batch_images < 1) throw UsageError("batch_images must be positive");
    cfg.weights.validate(model.num_classes());
    if (cfg.augment && !model.backbone.is_identity() && encoder.dim() != model.backbone.input_dim()) {
        throw UsageError("augmentation needs a pixel encoder matching the backbone");
    }
    const auto labels = inherited_labels(patches);
    if (std::find(labels.begin(), labels.end(), 0) == labels.end()) {
        throw DataError("train_seafeats: no background-labelled images in the training set");
    }

    const Matrix inputs = encoder.encode_all(patches);
    const PixelEncoder aug_encoder(cfg.augment_input_size);
    const auto images = group_by_image(patches);

    SeafeatsResult result;
    result.adam = AdamState(cfg.lr);
    Matrix features = extract_features(model.backbone, inputs, Mode::Eval).features;
    result.bank = compute_templates(features, labels, cfg.template_cap);
    result.bank.epoch = 0;

    std::vector<ClassId> previous = labels;
    std::vector<std::size_t> order(images.size());
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        // (1) pseudo-label with the current bank
        auto pseudo = label_all(features, result.bank, patches);
        EpochStats stats;
        stats.epoch = epoch;
        for (std::size_t i = 0; i < pseudo.size(); ++i) {
            if (pseudo[i].label != previous[i]) ++stats.flips;
            if (pseudo[i].label == 0) ++stats.background_labels;
            previous[i] = pseudo[i].label;
        }

        // (2) one pass of Adam over batches of images
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        int steps = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_images)) {
            std::vector<std::size_t> rows;
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_images));
            for (std::size_t b = start; b < end; ++b) {
                const auto& idx = images[order[b]];
                rows.insert(rows.end(), idx.begin(), idx.end());
            }
            Matrix batch_in;
            if (cfg.augment) {
                batch_in.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
                for (std::size_t r = 0; r < rows.size(); ++r) {
                    const Patch view = augment(patches[rows[r]], *cfg.augment, rng);
                    batch_in.row(static_cast<Eigen::Index>(r)) = aug_encoder.encode(view).transpose();
                }
            } else {
                batch_in = gather_rows(inputs, rows);
            }
            std::vector<ClassId> targets;
            targets.reserve(rows.size());
            for (auto r : rows) targets.push_back(pseudo[r].label);

            ModelForward fwd = model_forward(model, batch_in, Mode::Train, rng);
            LossGrad lg = weighted_ce_batch(fwd.logits, targets, cfg.weights);
            if (!std::isfinite(lg.loss)) {
                throw NumericError("train_seafeats: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                   std::to_string(steps + 1));
            }
            ModelGrads grads = model_backward(model, fwd.cache, lg.grad);
            clip_global_norm(grads.params, cfg.clip_norm);
            auto params = model.parameters();
            adam_step(params, grads.params, result.adam);
            loss_sum += lg.loss;
            ++steps;
        }
        stats.mean_loss = steps > 0 ? loss_sum / steps : 0.0;

        // (3) refresh the templates from the updated encoder
        features = extract_features(model.backbone, inputs, Mode::Eval).features;
        TemplateBank next = compute_templates(features, labels, cfg.template_cap);
        next.epoch = result.bank.epoch + 1;
        for (ClassId c : next.class_ids) {
            if (result.bank.has(c)) stats.drift[c] = (next.row(c) - result.bank.row(c)).norm();
        }
        result.bank = std::move(next);
        stats.bank_epoch = result.bank.epoch;
        spdlog::debug("seafeats epoch {}: loss {:.6f}, flips {}, background {}", epoch, stats.mean_loss, stats.flips,
                      stats.background_labels);
        result.stats.push_back(std::move(stats));
        result.last_labels = std::move(pseudo);
    }
    return result;
}

void write_template_bank(const TemplateBank& bank, const std::filesystem::path& file) {
    FeatureTable table;
    table.dim = static_cast<int>(bank.templates.cols());
    for (std::size_t i = 0; i < bank.class_ids.size(); ++i) {
        table.rows.emplace(PatchKey{std::to_string(bank.class_ids[i]), bank.epoch, static_cast<int>(bank.counts[i])},
                           bank.templates.row(static_cast<Eigen::Index>(i)).transpose());
    }
    write_precomputed_features(table, file);
}

TemplateBank read_template_bank(const std::filesystem::path& file) {
    const FeatureTable table = load_precomputed_features(file);
    std::vector<std::pair<ClassId, std::pair<int, FeatureVector>>> rows;
    TemplateBank bank;
    for (const auto& [key, v] : table.rows) {
        int cls = 0;
        try {
            cls = std::stoi(std::get<0>(key));
        } catch (const std::exception&) {
            throw DataError("template bank row has non-integer class id '" + std::get<0>(key) + "'");
        }
        bank.epoch = std::get<1>(key);
        rows.push_back({cls, {std::get<2>(key), v}});
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    bank.templates.resize(static_cast<Eigen::Index>(rows.size()), table.dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        bank.class_ids.push_back(rows[i].first);
        bank.counts.push_back(static_cast<std::size_t>(rows[i].second.first));
        bank.templates.row(static_cast<Eigen::Index>(i)) = rows[i].second.second.transpose();
    }
    if (!bank.has(0)) throw DataError("template bank " + file.string() + " has no background row");
    return bank;
}

std::string stats_to_jsonl(std::span<const EpochStats> stats) {
    std::string out;
    for (const auto& s : stats) {
        nlohmann::json j;
        j["epoch"] = s.epoch;
        j["mean_loss"] = s.mean_loss;
        j["flips"] = s.flips;
        j["background_labels"] = s.background_labels;
        j["bank_epoch"] = s.bank_epoch;
        nlohmann::json drift = nlohmann::json::object();
        for (const auto& [c, d] : s.drift) drift[std::to_string(c)] = d;
        j["drift"] = std::move(drift);
        out += j.dump() + "\n";
    }
    return out;
}

}  // namespace seagrid
