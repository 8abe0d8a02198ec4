#include "wm/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "wm/codec.hpp"
#include "wm/rng.hpp"

namespace wm {
namespace {

double lattice_value(uint64_t seed, int64_t ix, int64_t iy) {
    SplitMix64 sm(seed ^ (static_cast<uint64_t>(static_cast<uint32_t>(ix)) |
                          (static_cast<uint64_t>(static_cast<uint32_t>(iy)) << 32)));
    sm.next();
    return static_cast<double>(sm.next() >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(uint64_t seed, double x, double y) {
    double fx = std::floor(x), fy = std::floor(y);
    int64_t ix = static_cast<int64_t>(fx), iy = static_cast<int64_t>(fy);
    double tx = smoothstep(x - fx), ty = smoothstep(y - fy);
    double v00 = lattice_value(seed, ix, iy);
    double v10 = lattice_value(seed, ix + 1, iy);
    double v01 = lattice_value(seed, ix, iy + 1);
    double v11 = lattice_value(seed, ix + 1, iy + 1);
    double a = v00 + (v10 - v00) * tx;
    double b = v01 + (v11 - v01) * tx;
    return a + (b - a) * ty;
}

double fbm(uint64_t seed, double x, double y, int octaves) {
    double amplitude = 1.0, total = 0.0, norm = 0.0;
    for (int o = 0; o < octaves; ++o) {
        total += amplitude * value_noise(mix_seed(seed, o), x, y);
        norm += amplitude;
        amplitude *= 0.55;
        x *= 2.03;
        y *= 2.03;
    }
    return total / norm;
}

struct Shape {
    double cx, cy, rx, ry, angle, softness;
    double color[3];
    double texture_amp;
    uint64_t texture_seed;
    bool rectangular;
};

RgbImage render_photo(uint64_t seed, int width, int height) {
    Rng rng(seed);
    RgbImage img(width, height);

    // Sky/backdrop gradient between two random colors.
    double top[3], bottom[3];
    for (int c = 0; c < 3; ++c) {
        top[c] = rng.uniform(0.35, 0.95);
        bottom[c] = rng.uniform(0.05, 0.75);
    }
    double horizon = rng.uniform(0.45, 0.8);
    uint64_t base_tex = rng.next_u64();
    double base_tex_amp = rng.uniform(0.02, 0.10);
    double base_scale = rng.uniform(3.0, 9.0);

    // Ground band with its own palette and rougher texture.
    double ground[3];
    for (int c = 0; c < 3; ++c) ground[c] = rng.uniform(0.1, 0.6);
    uint64_t ground_tex = rng.next_u64();
    double ground_tex_amp = rng.uniform(0.06, 0.18);
    double ground_scale = rng.uniform(8.0, 24.0);

    int shape_count = 4 + static_cast<int>(rng.below(9));
    std::vector<Shape> shapes(shape_count);
    for (auto& shape : shapes) {
        shape.cx = rng.uniform(0.05, 0.95) * width;
        shape.cy = rng.uniform(0.05, 0.95) * height;
        shape.rx = rng.uniform(0.04, 0.28) * width;
        shape.ry = rng.uniform(0.04, 0.28) * height;
        shape.angle = rng.uniform(0.0, M_PI);
        shape.softness = rng.uniform(0.02, 0.25);
        for (int c = 0; c < 3; ++c) shape.color[c] = rng.uniform(0.05, 0.95);
        shape.texture_amp = rng.uniform(0.02, 0.15);
        shape.texture_seed = rng.next_u64();
        shape.rectangular = rng.coin();
    }

    // Fine material texture (fabric, foliage, grain): mid-frequency noise
    // gated by a slow field so parts of the scene stay smooth, as in
    // photographs.
    uint64_t fine_seed = rng.next_u64();
    uint64_t gate_seed = rng.next_u64();
    double fine_scale = rng.uniform(40.0, 120.0);
    double fine_amp = rng.uniform(0.02, 0.06);
    double gate_bias = rng.uniform(0.2, 0.5);

    uint64_t grain_seed = rng.next_u64();
    Rng grain(grain_seed);

    for (int y = 0; y < height; ++y) {
        double v = static_cast<double>(y) / height;
        for (int x = 0; x < width; ++x) {
            double u = static_cast<double>(x) / width;
            double px[3];
            if (v < horizon) {
                double t = v / horizon;
                double tex = (fbm(base_tex, u * base_scale, v * base_scale, 5) - 0.5) * base_tex_amp;
                for (int c = 0; c < 3; ++c) px[c] = top[c] + (bottom[c] - top[c]) * t + tex;
            } else {
                double tex =
                    (fbm(ground_tex, u * ground_scale, v * ground_scale, 5) - 0.5) * ground_tex_amp;
                for (int c = 0; c < 3; ++c) px[c] = ground[c] + tex;
            }

            for (const auto& shape : shapes) {
                double dx = x - shape.cx, dy = y - shape.cy;
                double rx = std::cos(shape.angle) * dx + std::sin(shape.angle) * dy;
                double ry = -std::sin(shape.angle) * dx + std::cos(shape.angle) * dy;
                double d;
                if (shape.rectangular) {
                    d = std::max(std::fabs(rx) / shape.rx, std::fabs(ry) / shape.ry);
                } else {
                    d = std::sqrt(rx * rx / (shape.rx * shape.rx) + ry * ry / (shape.ry * shape.ry));
                }
                if (d >= 1.0 + shape.softness) continue;
                double alpha = d <= 1.0 - shape.softness
                                   ? 1.0
                                   : smoothstep((1.0 + shape.softness - d) / (2.0 * shape.softness));
                double tex = (fbm(shape.texture_seed, (x - shape.cx) / 24.0, (y - shape.cy) / 24.0,
                                  4) -
                              0.5) *
                             shape.texture_amp;
                for (int c = 0; c < 3; ++c) {
                    px[c] = px[c] * (1.0 - alpha) + (shape.color[c] + tex) * alpha;
                }
            }

            double gate = fbm(gate_seed, u * 4.0, v * 4.0, 3) - gate_bias;
            gate = gate <= 0.0 ? 0.0 : (gate >= 0.35 ? 1.0 : smoothstep(gate / 0.35));
            double fine = (value_noise(fine_seed, u * fine_scale, v * fine_scale) - 0.5) +
                          0.5 * (value_noise(fine_seed ^ 0x5a5aULL, u * fine_scale * 2.7,
                                             v * fine_scale * 2.7) -
                                 0.5);
            double texture = gate * fine_amp * fine;

            // Mild vignette and sensor grain.
            double du = u - 0.5, dv = v - 0.5;
            double vignette = 1.0 - 0.25 * (du * du + dv * dv) * 2.0;
            for (int c = 0; c < 3; ++c) {
                double value = (px[c] + texture) * vignette + 0.003 * grain.normal();
                img.at(x, y, c) = clamp01(static_cast<float>(value));
            }
        }
    }
    return img;
}

} // namespace

RgbImage synthetic_photo(uint64_t seed, int width, int height) {
    CodecConfig filter_config;
    for (int attempt = 0; attempt < 16; ++attempt) {
        RgbImage img = render_photo(mix_seed(seed, attempt * 0x9e3779b9ULL), width, height);
        if (should_watermark(img, filter_config)) return img;
    }
    return render_photo(seed, width, height); // unreachable in practice
}

std::vector<RgbImage> synthetic_corpus(uint64_t seed, int count, int width, int height) {
    std::vector<RgbImage> corpus;
    corpus.reserve(count);
    for (int i = 0; i < count; ++i) {
        corpus.push_back(synthetic_photo(mix_seed(seed, 0xC0u, i), width, height));
    }
    return corpus;
}

void write_corpus_dir(const std::string& directory, uint64_t seed, int count, int width,
                      int height) {
    for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "photo_%04d.png", i);
        save_png_file(synthetic_photo(mix_seed(seed, 0xC0u, i), width, height),
                      directory + "/" + name);
    }
}

} // namespace wm
