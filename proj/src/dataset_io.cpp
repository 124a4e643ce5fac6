#include "seagrid/dataset_io.hpp"

#include "seagrid/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <spdlog/spdlog.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace seagrid {

GridSpec parse_grid(const std::string& text) {
    const auto x = text.find_first_of("xX");
    if (x == std::string::npos) {
        throw UsageError("grid must look like RxC, got '" + text + "'");
    }
    GridSpec grid;
    try {
        std::size_t used_r = 0, used_c = 0;
        const std::string rs = text.substr(0, x), cs = text.substr(x + 1);
        grid.rows = std::stoi(rs, &used_r);
        grid.cols = std::stoi(cs, &used_c);
        if (used_r != rs.size() || used_c != cs.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
        throw UsageError("grid must look like RxC, got '" + text + "'");
    }
    if (grid.rows < 1 || grid.cols < 1) {
        throw UsageError("grid dimensions must be positive, got '" + text + "'");
    }
    return grid;
}

std::string to_string(const GridSpec& grid) {
    return std::to_string(grid.rows) + "x" + std::to_string(grid.cols);
}

std::vector<std::string> read_manifest(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open class manifest " + file.string());
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
            line.pop_back();
        }
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        names.push_back(line.substr(first));
    }
    if (names.empty()) throw DataError("class manifest " + file.string() + " lists no classes");
    std::set<std::string> unique(names.begin(), names.end());
    if (unique.size() != names.size()) {
        throw DataError("class manifest " + file.string() + " has duplicate names");
    }
    return names;
}

bool is_image_file(const fs::path& file) {
    const auto name = file.filename().string();
    if (name.empty() || name[0] == '.') return false;
    std::string ext = file.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".tif" || ext == ".tiff";
}

Image load_image(const fs::path& file) {
    cv::Mat bgr = cv::imread(file.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw DataError("cannot decode image " + file.string());
    Image img(bgr.rows, bgr.cols);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            img.at(y, x, 0) = row[x][2] / 255.0f;
            img.at(y, x, 1) = row[x][1] / 255.0f;
            img.at(y, x, 2) = row[x][0] / 255.0f;
        }
    }
    return img;
}

namespace {

std::uint8_t to_byte(float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

void write_bgr(const cv::Mat& bgr, const fs::path& file) {
    if (!cv::imwrite(file.string(), bgr)) throw DataError("cannot write image " + file.string());
}

}  // namespace

void save_png(const Image& image, const fs::path& file) {
    cv::Mat bgr(image.height, image.width, CV_8UC3);
    for (int y = 0; y < image.height; ++y) {
        auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < image.width; ++x) {
            row[x] = cv::Vec3b(to_byte(image.at(y, x, 2)), to_byte(image.at(y, x, 1)),
                               to_byte(image.at(y, x, 0)));
        }
    }
    write_bgr(bgr, file);
}

std::vector<LabeledImage> load_dataset(const fs::path& root, std::span<const std::string> class_names,
                                       const LoadOptions& options) {
    if (class_names.empty()) throw DataError("no class directories: class list is empty");
    if (!fs::is_directory(root)) throw DataError("dataset root " + root.string() + " is not a directory");

    std::set<std::string> known(class_names.begin(), class_names.end());
    std::vector<std::string> subdirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) subdirs.push_back(entry.path().filename().string());
    }
    std::sort(subdirs.begin(), subdirs.end());
    bool any_known = false;
    for (const auto& d : subdirs) {
        if (known.count(d) == 0) {
            spdlog::warn("skipping unknown class directory {}", (root / d).string());
        } else {
            any_known = true;
        }
    }
    if (!any_known) throw DataError("no class directories under " + root.string());

    std::vector<LabeledImage> images;
    for (std::size_t label = 0; label < class_names.size(); ++label) {
        const fs::path dir = root / class_names[label];
        std::vector<fs::path> files;
        if (fs::is_directory(dir)) {
            for (const auto& entry : fs::directory_iterator(dir)) {
                if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        if (options.max_per_class > 0 && files.size() > options.max_per_class) {
            files.resize(options.max_per_class);
        }
        if (files.empty()) {
            if (options.require_all_classes) {
                throw DataError("class '" + class_names[label] + "' has no images under " + root.string());
            }
            continue;
        }
        for (const auto& f : files) {
            LabeledImage li;
            li.pixels = load_image(f);
            li.label = static_cast<ClassId>(label);
            li.source_id = class_names[label] + "/" + f.filename().string();
            images.push_back(std::move(li));
        }
    }
    spdlog::info("loaded {} images from {}", images.size(), root.string());
    return images;
}

std::vector<Patch> tile_image(const LabeledImage& image, GridSpec grid) {
    const Image& src = image.pixels;
    if (grid.rows < 1 || grid.cols < 1) throw DataError("grid dimensions must be positive");
    if (src.height < grid.rows || src.width < grid.cols) {
        throw DataError("image " + image.source_id + " (" + std::to_string(src.height) + "x" +
                        std::to_string(src.width) + ") is smaller than grid " + to_string(grid));
    }
    const int ph = src.height / grid.rows;
    const int pw = src.width / grid.cols;
    const int y0 = (src.height - ph * grid.rows) / 2;
    const int x0 = (src.width - pw * grid.cols) / 2;

    std::vector<Patch> patches;
    patches.reserve(grid.cells());
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            Patch p;
            p.pixels = Image(ph, pw);
            p.row = r;
            p.col = c;
            p.parent_id = image.source_id;
            p.inherited_label = image.label;
            const int top = y0 + r * ph, left = x0 + c * pw;
            for (int y = 0; y < ph; ++y) {
                const float* from = &src.data[(static_cast<std::size_t>(top + y) * src.width + left) * 3];
                std::copy(from, from + static_cast<std::size_t>(pw) * 3,
                          &p.pixels.data[static_cast<std::size_t>(y) * pw * 3]);
            }
            patches.push_back(std::move(p));
        }
    }
    return patches;
}

std::vector<Patch> tile_dataset(std::span<const LabeledImage> images, GridSpec grid) {
    std::vector<Patch> all;
    all.reserve(images.size() * grid.cells());
    for (const auto& img : images) {
        auto patches = tile_image(img, grid);
        std::move(patches.begin(), patches.end(), std::back_inserter(all));
    }
    return all;
}

ClassId argmax(std::span<const double> values) {
    if (values.empty()) throw DataError("argmax of an empty vector");
    return static_cast<ClassId>(std::max_element(values.begin(), values.end()) - values.begin());
}

ClassMask reassemble_mask(const std::vector<std::vector<double>>& patch_probs, GridSpec grid,
                          std::string source_id) {
    if (static_cast<int>(patch_probs.size()) != grid.cells()) {
        throw DataError("reassemble_mask: expected " + std::to_string(grid.cells()) +
                        " patch vectors, got " + std::to_string(patch_probs.size()));
    }
    ClassMask mask;
    mask.source_id = std::move(source_id);
    mask.rows = grid.rows;
    mask.cols = grid.cols;
    mask.probs = patch_probs;
    mask.labels.reserve(patch_probs.size());
    const std::size_t num_classes = patch_probs.empty() ? 0 : patch_probs.front().size();
    for (const auto& p : patch_probs) {
        if (p.size() != num_classes) throw DataError("reassemble_mask: inconsistent class count");
        mask.labels.push_back(argmax(p));
    }
    return mask;
}

Image color_correct(const Image& image) {
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    const std::size_t n = static_cast<std::size_t>(image.height) * image.width;
    if (n == 0) return image;
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) mean[c] += image.data[i * 3 + c];
    }
    for (auto& m : mean) m /= static_cast<double>(n);
    const double overall = (mean[0] + mean[1] + mean[2]) / 3.0;
    if (overall <= 0.0) return image;

    Image out = image;
    for (int c = 0; c < 3; ++c) {
        if (mean[c] <= 0.0) continue;  // empty channel cannot be rescaled
        const double gain = overall / mean[c];
        for (std::size_t i = 0; i < n; ++i) {
            const double v = image.data[i * 3 + c] * gain;
            out.data[i * 3 + c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return out;
}

LabeledImage color_correct(const LabeledImage& image) {
    LabeledImage out = image;
    out.pixels = color_correct(image.pixels);
    return out;
}

std::string mask_to_json(const ClassMask& mask) {
    json j;
    j["source_id"] = mask.source_id;
    j["rows"] = mask.rows;
    j["cols"] = mask.cols;
    json labels = json::array();
    json probs = json::array();
    for (int r = 0; r < mask.rows; ++r) {
        json lrow = json::array();
        json prow = json::array();
        for (int c = 0; c < mask.cols; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * mask.cols + c;
            lrow.push_back(mask.labels[i]);
            if (!mask.probs.empty()) prow.push_back(mask.probs[i]);
        }
        labels.push_back(std::move(lrow));
        probs.push_back(std::move(prow));
    }
    j["labels"] = std::move(labels);
    if (!mask.probs.empty()) j["probs"] = std::move(probs);
    return j.dump();
}

ClassMask mask_from_json(const std::string& text) {
    ClassMask mask;
    try {
        const json j = json::parse(text);
        mask.source_id = j.at("source_id").get<std::string>();
        mask.rows = j.at("rows").get<int>();
        mask.cols = j.at("cols").get<int>();
        const auto& labels = j.at("labels");
        if (static_cast<int>(labels.size()) != mask.rows) throw DataError("labels row count mismatch");
        for (const auto& row : labels) {
            if (static_cast<int>(row.size()) != mask.cols) throw DataError("labels column count mismatch");
            for (const auto& v : row) mask.labels.push_back(v.get<ClassId>());
        }
        if (j.contains("probs")) {
            for (const auto& row : j.at("probs")) {
                for (const auto& cell : row) mask.probs.push_back(cell.get<std::vector<double>>());
            }
            if (mask.probs.size() != mask.labels.size()) throw DataError("probs cell count mismatch");
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed mask JSON: ") + e.what());
    }
    return mask;
}

void write_mask(const ClassMask& mask, const fs::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write mask " + file.string());
    out << mask_to_json(mask) << '\n';
}

ClassMask read_mask(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open mask " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return mask_from_json(ss.str());
    } catch (const DataError& e) {
        throw DataError(file.string() + ": " + e.what());
    }
}

void write_mask_png(const ClassMask& mask, const fs::path& file, int cell_px) {
    static const std::array<cv::Vec3b, 4> palette{
        cv::Vec3b(203, 192, 255),  // pink
        cv::Vec3b(0, 160, 0),      // green
        cv::Vec3b(0, 165, 255),    // orange
        cv::Vec3b(0, 255, 255),    // yellow
    };
    cv::Mat bgr(mask.rows * cell_px, mask.cols * cell_px, CV_8UC3);
    for (int r = 0; r < mask.rows; ++r) {
        for (int c = 0; c < mask.cols; ++c) {
            const ClassId id = mask.label(r, c);
            cv::Vec3b colour = id >= 0 && id < static_cast<int>(palette.size())
                                   ? palette[id]
                                   : cv::Vec3b(128, 128, 128);
            bgr(cv::Rect(c * cell_px, r * cell_px, cell_px, cell_px)).setTo(colour);
        }
    }
    write_bgr(bgr, file);
}

}  // namespace seagrid
