#include "seagrid/config.hpp"

#include "seagrid/errors.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace seagrid {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_real(const std::string& v) {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
}

long long to_integer(const std::string& v) {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
}

int to_positive(const std::string& v) {
    const long long x = to_integer(v);
    if (x < 1) throw std::invalid_argument(v);
    return static_cast<int>(x);
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument(v);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(v);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
}

std::vector<double> to_reals(const std::string& v) {
    std::vector<double> out;
    for (const auto& s : split_list(v)) out.push_back(to_real(s));
    return out;
}

using Setter = std::function<void(PipelineConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table{
        {"grid", [](auto& c, const auto& v) { c.grid = parse_grid(v); }},
        {"class_weights", [](auto& c, const auto& v) { c.class_weights = to_reals(v); }},
        {"lr", [](auto& c, const auto& v) { c.lr = to_real(v); }},
        {"epochs", [](auto& c, const auto& v) { c.epochs = static_cast<int>(to_integer(v)); }},
        {"batch_images", [](auto& c, const auto& v) { c.batch_images = to_positive(v); }},
        {"batch_patches", [](auto& c, const auto& v) { c.batch_patches = to_positive(v); }},
        {"feature_dim", [](auto& c, const auto& v) { c.feature_dim = to_positive(v); }},
        {"hidden",
         [](auto& c, const auto& v) {
             c.hidden.clear();
             for (const auto& s : split_list(v)) c.hidden.push_back(to_positive(s));
         }},
        {"head_width", [](auto& c, const auto& v) { c.head_width = to_positive(v); }},
        {"dropout", [](auto& c, const auto& v) { c.dropout = to_real(v); }},
        {"input_size", [](auto& c, const auto& v) { c.input_size = to_positive(v); }},
        {"init", [](auto& c, const auto& v) { c.init = v; }},
        {"seed", [](auto& c, const auto& v) { c.seed = static_cast<std::uint64_t>(to_integer(v)); }},
        {"clip_norm", [](auto& c, const auto& v) { c.clip_norm = to_real(v); }},
        {"template_cap",
         [](auto& c, const auto& v) {
             const long long n = to_integer(v);
             if (n < 0) throw std::invalid_argument(v);
             c.template_cap = n == 0 ? std::nullopt : std::optional<std::size_t>(static_cast<std::size_t>(n));
         }},
        {"ensemble_mode", [](auto& c, const auto& v) { c.ensemble_mode = parse_norm_mode(v); }},
        {"ensemble_weights", [](auto& c, const auto& v) { c.ensemble_weights = to_reals(v); }},
        {"pretrain_epochs", [](auto& c, const auto& v) { c.pretrain_epochs = static_cast<int>(to_integer(v)); }},
        {"pretrain_batch", [](auto& c, const auto& v) { c.pretrain_batch = to_positive(v); }},
        {"pretrain_lr", [](auto& c, const auto& v) { c.pretrain_lr = to_real(v); }},
        {"temperature", [](auto& c, const auto& v) { c.temperature = to_real(v); }},
        {"crop_fraction", [](auto& c, const auto& v) { c.crop_fraction = to_real(v); }},
        {"aug_hflip", [](auto& c, const auto& v) { c.augment.hflip_p = to_real(v); }},
        {"aug_vflip", [](auto& c, const auto& v) { c.augment.vflip_p = to_real(v); }},
        {"aug_jitter", [](auto& c, const auto& v) { c.augment.jitter_p = to_real(v); }},
        {"aug_brightness", [](auto& c, const auto& v) { c.augment.brightness = to_real(v); }},
        {"aug_contrast", [](auto& c, const auto& v) { c.augment.contrast = to_real(v); }},
        {"aug_saturation", [](auto& c, const auto& v) { c.augment.saturation = to_real(v); }},
        {"aug_hue", [](auto& c, const auto& v) { c.augment.hue = to_real(v); }},
        {"aug_blur", [](auto& c, const auto& v) { c.augment.blur_p = to_real(v); }},
        {"aug_blur_sigma", [](auto& c, const auto& v) { c.augment.blur_sigma_max = to_real(v); }},
        {"scenario", [](auto& c, const auto& v) { c.scenario = v; }},
        {"prompts", [](auto& c, const auto& v) { c.prompts = v; }},
        {"fish_class", [](auto& c, const auto& v) { c.fish_class = static_cast<int>(to_integer(v)); }},
        {"mock_seed", [](auto& c, const auto& v) { c.mock_seed = static_cast<std::uint64_t>(to_integer(v)); }},
        {"finetune_augment", [](auto& c, const auto& v) { c.finetune_augment = to_bool(v); }},
        {"color_correct", [](auto& c, const auto& v) { c.color_correct = to_bool(v); }},
    };
    return table;
}

}  // namespace

std::vector<double> PipelineConfig::weights_for(int num_classes) const {
    if (class_weights) {
        if (static_cast<int>(class_weights->size()) != num_classes) {
            throw UsageError("class_weights lists " + std::to_string(class_weights->size()) + " values for " +
                             std::to_string(num_classes) + " classes");
        }
        return *class_weights;
    }
    if (num_classes == 4) return {1.0, 1.5, 1.2, 1.2};
    return std::vector<double>(static_cast<std::size_t>(num_classes), 1.0);
}

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) {
            throw UsageError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        if (!seen.insert(key).second) {
            throw UsageError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        try {
            it->second(cfg, value);
        } catch (const UsageError& e) {
            throw UsageError("config line " + std::to_string(line_no) + ": " + e.what());
        } catch (const std::exception&) {
            throw UsageError("config line " + std::to_string(line_no) + ": bad value '" + value + "' for " + key);
        }
    }
    cfg.augment.validate();
    if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw UsageError("dropout must lie in [0,1)");
    if (!(cfg.temperature > 0.0)) throw UsageError("temperature must be positive");
    if (cfg.epochs < 0 || cfg.pretrain_epochs < 0) throw UsageError("epoch counts must be non-negative");
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw UsageError("cannot open config " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

AugConfig finetune_augmentation() {
    AugConfig a;
    a.hflip_p = 0.5;
    a.vflip_p = 0.0;
    a.jitter_p = 0.8;
    a.brightness = 0.2;
    a.contrast = 0.2;
    a.saturation = 0.2;
    a.hue = 0.05;
    a.channel_scale = 0.1;
    a.blur_p = 0.3;
    a.blur_sigma_max = 1.5;
    a.scale_p = 0.5;
    a.scale_range = 0.1;
    return a;
}

}  // namespace seagrid
