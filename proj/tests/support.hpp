#pragma once

#include "seagrid/image.hpp"
#include "seagrid/model.hpp"

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

namespace testsupport {

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("seagrid_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline seagrid::Matrix random_matrix(int rows, int cols, seagrid::Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    seagrid::Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

inline seagrid::Image constant_image(int h, int w, float r, float g, float b) {
    seagrid::Image img(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.at(y, x, 0) = r;
            img.at(y, x, 1) = g;
            img.at(y, x, 2) = b;
        }
    }
    return img;
}

inline seagrid::Image noise_image(int h, int w, seagrid::Rng& rng) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    seagrid::Image img(h, w);
    for (auto& v : img.data) v = u(rng);
    return img;
}

}  // namespace testsupport
