#include "seagrid/encoder.hpp"

#include "seagrid/augment.hpp"
#include "seagrid/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace seagrid {

Matrix PatchEncoder::encode_all(std::span<const Patch> patches) const {
    Matrix out(static_cast<Eigen::Index>(patches.size()), dim());
    for (std::size_t i = 0; i < patches.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = encode(patches[i]).transpose();
    return out;
}

Eigen::VectorXd PixelEncoder::encode(const Patch& patch) const {
    const Image small = resize_bilinear(patch.pixels, size_, size_);
    Eigen::VectorXd v(dim());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 2.0 * small.data[static_cast<std::size_t>(i)] - 1.0;
    return v;
}

Eigen::VectorXd PrecomputedEncoder::encode(const Patch& patch) const {
    auto it = table_.rows.find({patch.parent_id, patch.row, patch.col});
    if (it == table_.rows.end()) {
        throw DataError("no precomputed feature for " + patch.parent_id + " (" + std::to_string(patch.row) +
                        "," + std::to_string(patch.col) + ")");
    }
    return it->second;
}

void PrecomputedEncoder::require_coverage(std::span<const Patch> patches) const {
    std::string missing;
    std::size_t count = 0;
    for (const auto& p : patches) {
        if (table_.rows.count({p.parent_id, p.row, p.col}) == 0) {
            if (count < 20) missing += "\n  " + p.parent_id + " (" + std::to_string(p.row) + "," + std::to_string(p.col) + ")";
            ++count;
        }
    }
    if (count > 0) {
        throw DataError(std::to_string(count) + " patches lack precomputed features:" + missing +
                        (count > 20 ? "\n  ..." : ""));
    }
}

std::string format_real(double v) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(n));
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_real(const std::string& s, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse number '" + s + "'");
    }
}

int parse_int(const std::string& s, std::size_t line_no) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse integer '" + s + "'");
    }
    return v;
}

}  // namespace

FeatureTable load_precomputed_features(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open feature file " + file.string());
    FeatureTable table;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split_csv(line);
        if (!header_seen) {
            header_seen = true;
            if (cells.size() < 4 || cells[0] != "source_id" || cells[1] != "row" || cells[2] != "col") {
                throw DataError(file.string() + ":" + std::to_string(line_no) +
                                ": expected header source_id,row,col,f0,...");
            }
            table.dim = static_cast<int>(cells.size()) - 3;
            continue;
        }
        if (static_cast<int>(cells.size()) - 3 != table.dim) {
            throw DataError(file.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(table.dim) + " features, found " +
                            std::to_string(static_cast<int>(cells.size()) - 3));
        }
        FeatureVector v(table.dim);
        for (int k = 0; k < table.dim; ++k) v[k] = parse_real(cells[3 + k], line_no);
        PatchKey key{cells[0], parse_int(cells[1], line_no), parse_int(cells[2], line_no)};
        if (!table.rows.emplace(key, std::move(v)).second) {
            throw DataError(file.string() + ":" + std::to_string(line_no) + ": duplicate patch " + cells[0]);
        }
    }
    if (!header_seen) throw DataError("feature file " + file.string() + " is empty");
    return table;
}

void write_precomputed_features(const FeatureTable& table, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write feature file " + file.string());
    out << "source_id,row,col";
    for (int k = 0; k < table.dim; ++k) out << ",f" << k;
    out << '\n';
    for (const auto& [key, v] : table.rows) {
        out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key);
        for (Eigen::Index k = 0; k < v.size(); ++k) out << ',' << format_real(v[k]);
        out << '\n';
    }
}

}  // namespace seagrid
