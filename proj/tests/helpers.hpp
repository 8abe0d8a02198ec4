#pragma once

#include <cstdio>
#include <filesystem>
#include <string>

#include "wm/image.hpp"
#include "wm/rng.hpp"

namespace wmtest {

/// Temporary directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("wmkit_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline wm::RgbImage constant_image(int w, int h, float r, float g, float b) {
    wm::RgbImage img(w, h);
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        img.samples[i * 3] = r;
        img.samples[i * 3 + 1] = g;
        img.samples[i * 3 + 2] = b;
    }
    return img;
}

inline wm::RgbImage noise_image(uint64_t seed, int w, int h) {
    wm::Rng rng(seed);
    wm::RgbImage img(w, h);
    for (auto& sample : img.samples) sample = static_cast<float>(rng.uniform());
    return img;
}

} // namespace wmtest
