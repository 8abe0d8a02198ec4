#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wm {

/// Single-channel raster, row-major real samples.
struct ImagePlane {
    int width = 0;
    int height = 0;
    std::vector<float> samples; // width * height

    ImagePlane() = default;
    ImagePlane(int w, int h, float fill = 0.0f)
        : width(w), height(h), samples(static_cast<size_t>(w) * h, fill) {}

    float& at(int x, int y) { return samples[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return samples[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return samples.size(); }
};

/// Interleaved RGB raster, samples in [0,1]. Grayscale inputs are stored with
/// all three channels equal.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<float> samples; // 3 * width * height, RGB interleaved

    RgbImage() = default;
    RgbImage(int w, int h, float fill = 0.0f)
        : width(w), height(h), samples(static_cast<size_t>(w) * h * 3, fill) {}

    float& at(int x, int y, int c) { return samples[(static_cast<size_t>(y) * width + x) * 3 + c]; }
    float at(int x, int y, int c) const {
        return samples[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

/// Decodes a PNG or JPEG byte stream. 8-bit samples map to [0,1] by v/255.
RgbImage load_image(const std::vector<uint8_t>& bytes);
RgbImage load_image_file(const std::string& path);

/// Encodes as 8-bit PNG (v -> round(v*255), clamped).
std::vector<uint8_t> save_png(const RgbImage& img);
void save_png_file(const RgbImage& img, const std::string& path);

/// Encodes as baseline JPEG at the standard 1-100 quality scale.
std::vector<uint8_t> save_jpeg(const RgbImage& img, int quality);
void save_jpeg_file(const RgbImage& img, const std::string& path, int quality);

/// Rec.601 luma: 0.299 R + 0.587 G + 0.114 B.
ImagePlane to_luma(const RgbImage& img);

/// Reinserts a modified luma, keeping per-channel chroma offsets unchanged:
/// out_c = clamp(in_c + (luma' - luma(in))).
RgbImage from_luma(const ImagePlane& luma, const RgbImage& original);

inline float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }

} // namespace wm
