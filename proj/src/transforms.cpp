#include "wm/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <json.hpp>

#include "wm/error.hpp"
#include "wm/geometry.hpp"
#include "wm/resize.hpp"
#include "wm/rng.hpp"

namespace wm {
namespace {

constexpr float kPadGray = 0.5f;

uint64_t strength_seed(const TransformSpec& spec, uint64_t rng_seed) {
    return mix_seed(rng_seed, fnv1a64(spec.id), 0x5752u); // 'WR'
}

uint64_t noise_seed(const TransformSpec& spec, uint64_t rng_seed) {
    return mix_seed(rng_seed, fnv1a64(spec.id), 0x4e5au); // 'NZ'
}

// ---- pointwise color helpers -------------------------------------------------

RgbImage map_samples(const RgbImage& img, const std::function<float(float)>& fn) {
    RgbImage out(img.width, img.height);
    for (size_t i = 0; i < img.samples.size(); ++i) out.samples[i] = clamp01(fn(img.samples[i]));
    return out;
}

RgbImage apply_brightness(const RgbImage& img, double factor) {
    return map_samples(img, [&](float v) { return static_cast<float>(v * factor); });
}

RgbImage apply_contrast(const RgbImage& img, double factor) {
    return map_samples(img, [&](float v) { return static_cast<float>((v - 0.5) * factor + 0.5); });
}

RgbImage apply_exposure(const RgbImage& img, double gamma) {
    return map_samples(img, [&](float v) {
        return static_cast<float>(std::pow(static_cast<double>(v), gamma));
    });
}

RgbImage apply_saturation(const RgbImage& img, double factor) {
    RgbImage out(img.width, img.height);
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        const float* px = &img.samples[i * 3];
        double luma = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        for (int c = 0; c < 3; ++c) {
            out.samples[i * 3 + c] = clamp01(static_cast<float>(luma + factor * (px[c] - luma)));
        }
    }
    return out;
}

RgbImage apply_grayscale(const RgbImage& img) {
    RgbImage out(img.width, img.height);
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        const float* px = &img.samples[i * 3];
        float luma = static_cast<float>(0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]);
        for (int c = 0; c < 3; ++c) out.samples[i * 3 + c] = luma;
    }
    return out;
}

// Hue rotation in YIQ space; luma is untouched before clamping.
RgbImage apply_hue(const RgbImage& img, double turns) {
    double angle = turns * 2.0 * M_PI;
    double ca = std::cos(angle), sa = std::sin(angle);
    RgbImage out(img.width, img.height);
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        const float* px = &img.samples[i * 3];
        double r = px[0], g = px[1], b = px[2];
        double y = 0.299 * r + 0.587 * g + 0.114 * b;
        double iq_i = 0.595716 * r - 0.274453 * g - 0.321263 * b;
        double iq_q = 0.211456 * r - 0.522591 * g + 0.311135 * b;
        double i2 = ca * iq_i - sa * iq_q;
        double q2 = sa * iq_i + ca * iq_q;
        out.samples[i * 3 + 0] = clamp01(static_cast<float>(y + 0.956296 * i2 + 0.621024 * q2));
        out.samples[i * 3 + 1] = clamp01(static_cast<float>(y - 0.272122 * i2 - 0.647381 * q2));
        out.samples[i * 3 + 2] = clamp01(static_cast<float>(y - 1.106989 * i2 + 1.704615 * q2));
    }
    return out;
}

// Five fixed filter pipelines; index 5 is the highest-contrast one.
struct FilterRecipe {
    double gain[3];
    double lift;
    double gamma;
    double contrast;
    double saturation;
};

constexpr FilterRecipe kFilters[5] = {
    {{1.06, 1.01, 0.93}, 0.02, 1.00, 1.05, 0.95}, // warm fade
    {{0.95, 1.00, 1.08}, 0.00, 1.00, 1.08, 1.05}, // cool shift
    {{1.03, 0.99, 0.94}, 0.05, 1.10, 0.92, 0.80}, // vintage
    {{1.00, 1.00, 1.00}, 0.03, 1.00, 1.10, 0.55}, // washed mono
    {{1.02, 1.00, 0.98}, 0.00, 0.95, 1.35, 1.15}, // high contrast
};

RgbImage apply_instagram(const RgbImage& img, int index) {
    const FilterRecipe& recipe = kFilters[std::clamp(index - 1, 0, 4)];
    RgbImage out(img.width, img.height);
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        double px[3];
        for (int c = 0; c < 3; ++c) {
            double v = img.samples[i * 3 + c] * recipe.gain[c] + recipe.lift;
            v = std::pow(std::max(v, 0.0), recipe.gamma);
            px[c] = (v - 0.5) * recipe.contrast + 0.5;
        }
        double luma = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        for (int c = 0; c < 3; ++c) {
            out.samples[i * 3 + c] =
                clamp01(static_cast<float>(luma + recipe.saturation * (px[c] - luma)));
        }
    }
    return out;
}

// ---- quality -----------------------------------------------------------------

RgbImage apply_jpeg(const RgbImage& img, double quality) {
    int q = static_cast<int>(std::lround(quality));
    return load_image(save_jpeg(img, q));
}

RgbImage apply_gaussian_blur(const RgbImage& img, double sigma) {
    int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& w : kernel) w /= sum;

    auto clampi = [](int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };
    RgbImage mid(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    acc += kernel[k + radius] * img.at(clampi(x + k, img.width), y, c);
                }
                mid.at(x, y, c) = static_cast<float>(acc);
            }
        }
    }
    RgbImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    acc += kernel[k + radius] * mid.at(x, clampi(y + k, img.height), c);
                }
                out.at(x, y, c) = clamp01(static_cast<float>(acc));
            }
        }
    }
    return out;
}

RgbImage apply_median(const RgbImage& img, int radius) {
    RgbImage out(img.width, img.height);
    const int window = 2 * radius + 1;
    std::vector<float> values(static_cast<size_t>(window) * window);
    auto clampi = [](int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                size_t k = 0;
                for (int dy = -radius; dy <= radius; ++dy) {
                    for (int dx = -radius; dx <= radius; ++dx) {
                        values[k++] =
                            img.at(clampi(x + dx, img.width), clampi(y + dy, img.height), c);
                    }
                }
                auto mid = values.begin() + values.size() / 2;
                std::nth_element(values.begin(), mid, values.end());
                out.at(x, y, c) = *mid;
            }
        }
    }
    return out;
}

RgbImage apply_sharpness(const RgbImage& img, double factor) {
    RgbImage blurred = apply_gaussian_blur(img, 1.0);
    RgbImage out(img.width, img.height);
    for (size_t i = 0; i < img.samples.size(); ++i) {
        double v = img.samples[i] + (factor - 1.0) * (img.samples[i] - blurred.samples[i]);
        out.samples[i] = clamp01(static_cast<float>(v));
    }
    return out;
}

// ---- noise -------------------------------------------------------------------

RgbImage apply_gaussian_noise(const RgbImage& img, double sigma, uint64_t seed) {
    Rng rng(seed);
    RgbImage out(img.width, img.height);
    for (size_t i = 0; i < img.samples.size(); ++i) {
        out.samples[i] = clamp01(static_cast<float>(img.samples[i] + sigma * rng.normal()));
    }
    return out;
}

// Photon-budget model: the budget is chosen so the mid-gray standard
// deviation matches the configured sigma.
RgbImage apply_shot_noise(const RgbImage& img, double sigma, uint64_t seed) {
    Rng rng(seed);
    const double budget = 0.5 / (sigma * sigma);
    RgbImage out(img.width, img.height);
    for (size_t i = 0; i < img.samples.size(); ++i) {
        double photons = static_cast<double>(rng.poisson(img.samples[i] * budget));
        out.samples[i] = clamp01(static_cast<float>(photons / budget));
    }
    return out;
}

RgbImage apply_impulse_noise(const RgbImage& img, double fraction, uint64_t seed) {
    Rng rng(seed);
    RgbImage out = img;
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        if (rng.uniform() < fraction) {
            float v = rng.coin() ? 1.0f : 0.0f; // salt or pepper, whole pixel
            for (int c = 0; c < 3; ++c) out.samples[i * 3 + c] = v;
        }
    }
    return out;
}

RgbImage apply_speckle_noise(const RgbImage& img, double sigma, uint64_t seed) {
    Rng rng(seed);
    RgbImage out(img.width, img.height);
    for (size_t i = 0; i < img.samples.size(); ++i) {
        out.samples[i] =
            clamp01(static_cast<float>(img.samples[i] * (1.0 + sigma * rng.normal())));
    }
    return out;
}

// ---- spatial -----------------------------------------------------------------

RgbImage apply_flip_lr(const RgbImage& img) {
    RgbImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
        }
    }
    return out;
}

RgbImage apply_flip_ud(const RgbImage& img) {
    RgbImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, img.height - 1 - y, c);
        }
    }
    return out;
}

// Quarter rotations: out(x, y) = in(N-1-y, x) is one 90-degree step.
RgbImage apply_quarter_rotation(const RgbImage& img, int degrees) {
    int steps = ((degrees / 90) % 4 + 4) % 4;
    RgbImage current = img;
    for (int s = 0; s < steps; ++s) {
        RgbImage next(current.height, current.width);
        for (int y = 0; y < next.height; ++y) {
            for (int x = 0; x < next.width; ++x) {
                for (int c = 0; c < 3; ++c) {
                    next.at(x, y, c) = current.at(current.width - 1 - y, x, c);
                }
            }
        }
        current = std::move(next);
    }
    return current;
}

RgbImage warp_rotation(const RgbImage& img, double deg, bool expand) {
    int out_w = img.width, out_h = img.height;
    if (expand) geom::rotated_canvas(img.width, img.height, deg, out_w, out_h);
    // Inverse of geom::rotate_expand_forward: src = R(-deg) * (dst - c_out) + c_in.
    double rad = deg * M_PI / 180.0;
    double c = std::cos(rad), s = std::sin(rad);
    double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
    double ox = (out_w - 1) / 2.0, oy = (out_h - 1) / 2.0;
    RgbImage out(out_w, out_h, kPadGray);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            double dx = x - ox, dy = y - oy;
            double sx = c * dx + s * dy + cx;
            double sy = -s * dx + c * dy + cy;
            if (sx < -0.5 || sy < -0.5 || sx > img.width - 0.5 || sy > img.height - 0.5) continue;
            int ix = static_cast<int>(std::floor(sx));
            int iy = static_cast<int>(std::floor(sy));
            double fx = sx - ix, fy = sy - iy;
            for (int ch = 0; ch < 3; ++ch) {
                auto sample = [&](int px, int py) {
                    px = px < 0 ? 0 : (px >= img.width ? img.width - 1 : px);
                    py = py < 0 ? 0 : (py >= img.height ? img.height - 1 : py);
                    return static_cast<double>(img.at(px, py, ch));
                };
                double v = (1 - fx) * (1 - fy) * sample(ix, iy) +
                           fx * (1 - fy) * sample(ix + 1, iy) +
                           (1 - fx) * fy * sample(ix, iy + 1) + fx * fy * sample(ix + 1, iy + 1);
                out.at(x, y, ch) = clamp01(static_cast<float>(v));
            }
        }
    }
    return out;
}

RgbImage apply_resize_transform(const RgbImage& img, double scale) {
    int w = std::max(1, static_cast<int>(std::lround(img.width * scale)));
    int h = std::max(1, static_cast<int>(std::lround(img.height * scale)));
    return resize(img, w, h, ResizeMethod::bicubic);
}

RgbImage apply_crop_resize(const RgbImage& img, double retention) {
    int cw = 0, ch = 0, x0 = 0, y0 = 0;
    geom::center_crop_box(img.width, img.height, retention, cw, ch, x0, y0);
    RgbImage crop(cw, ch);
    for (int y = 0; y < ch; ++y) {
        for (int x = 0; x < cw; ++x) {
            for (int c = 0; c < 3; ++c) crop.at(x, y, c) = img.at(x0 + x, y0 + y, c);
        }
    }
    return resize(crop, img.width, img.height, ResizeMethod::bicubic);
}

RgbImage apply_zoom_out(const RgbImage& img, double factor) {
    int iw = std::max(1, static_cast<int>(std::lround(img.width / factor)));
    int ih = std::max(1, static_cast<int>(std::lround(img.height / factor)));
    RgbImage inner = resize(img, iw, ih, ResizeMethod::bicubic);
    RgbImage out(img.width, img.height, kPadGray);
    int x0 = (img.width - iw) / 2, y0 = (img.height - ih) / 2;
    for (int y = 0; y < ih; ++y) {
        for (int x = 0; x < iw; ++x) {
            for (int c = 0; c < 3; ++c) out.at(x0 + x, y0 + y, c) = inner.at(x, y, c);
        }
    }
    return out;
}

// ---- overlays ------------------------------------------------------------

// Icons are rasterized procedurally from analytic shapes (4x supersampling),
// so the overlay set ships with the code and needs no binary assets.
enum class Icon { smiley, heart, star, sun, shocked, drop };

struct IconColor {
    float r, g, b;
};

bool icon_hit(Icon icon, double x, double y, IconColor& color) {
    // Local coordinates in [-1, 1]^2, y pointing down.
    double rr = x * x + y * y;
    switch (icon) {
        case Icon::smiley: {
            if (rr > 1.0) return false;
            color = {1.0f, 0.85f, 0.1f};
            double ex = std::fabs(x) - 0.35, ey = y + 0.25;
            if (ex * ex + ey * ey < 0.02) color = {0.15f, 0.1f, 0.05f};
            if (rr > 0.4 && rr < 0.72 && y > 0.25) color = {0.15f, 0.1f, 0.05f};
            return true;
        }
        case Icon::heart: {
            double yy = -y + 0.2;
            double f = x * x + yy * yy - 0.55;
            if (f * f * f - x * x * yy * yy * yy < 0.0) {
                color = {0.9f, 0.15f, 0.2f};
                return true;
            }
            return false;
        }
        case Icon::star: {
            double angle = std::atan2(y, x);
            double radius = std::sqrt(rr);
            double lobe = std::fmod(angle * 5.0 / (2.0 * M_PI) + 5.0, 1.0);
            double spike = std::fabs(lobe - 0.5) * 2.0; // 0 at spike center
            double limit = 0.45 + 0.55 * (1.0 - spike);
            if (radius < limit) {
                color = {1.0f, 0.8f, 0.15f};
                return true;
            }
            return false;
        }
        case Icon::sun: {
            if (rr < 0.45) {
                color = {1.0f, 0.65f, 0.1f};
                return true;
            }
            double angle = std::atan2(y, x);
            double lobe = std::fmod(angle * 8.0 / (2.0 * M_PI) + 8.0, 1.0);
            if (rr < 1.0 && std::fabs(lobe - 0.5) < 0.12) {
                color = {1.0f, 0.75f, 0.2f};
                return true;
            }
            return false;
        }
        case Icon::shocked: {
            if (rr > 1.0) return false;
            color = {0.95f, 0.75f, 0.3f};
            double ex = std::fabs(x) - 0.35, ey = y + 0.3;
            if (ex * ex + ey * ey < 0.03) color = {1.0f, 1.0f, 1.0f};
            if (ex * ex + ey * ey < 0.008) color = {0.1f, 0.1f, 0.1f};
            double mx = x, my = y - 0.45;
            if (mx * mx + my * my < 0.04) color = {0.2f, 0.1f, 0.1f};
            return true;
        }
        case Icon::drop: {
            double yy = (y + 0.2) / 1.2;
            double width = 0.75 * (0.5 + 0.5 * yy);
            if (yy > -0.8 && yy < 0.8 && std::fabs(x) < width * std::sqrt(std::max(0.0, 1.0 - yy * yy)) + 0.05 * (1.0 + yy)) {
                color = {0.25f, 0.5f, 0.95f};
                return true;
            }
            return false;
        }
    }
    return false;
}

void blend_icon(RgbImage& img, Icon icon, int cx, int cy, int size) {
    int half = size / 2;
    for (int y = cy - half; y <= cy + half; ++y) {
        if (y < 0 || y >= img.height) continue;
        for (int x = cx - half; x <= cx + half; ++x) {
            if (x < 0 || x >= img.width) continue;
            double coverage = 0.0;
            IconColor color{0, 0, 0};
            IconColor last{0, 0, 0};
            for (int sy = 0; sy < 2; ++sy) {
                for (int sx = 0; sx < 2; ++sx) {
                    double lx = (x + 0.25 + 0.5 * sx - cx) / half;
                    double ly = (y + 0.25 + 0.5 * sy - cy) / half;
                    if (icon_hit(icon, lx, ly, last)) {
                        coverage += 0.25;
                        color = last;
                    }
                }
            }
            if (coverage <= 0.0) continue;
            float a = static_cast<float>(coverage);
            img.at(x, y, 0) = clamp01(img.at(x, y, 0) * (1 - a) + color.r * a);
            img.at(x, y, 1) = clamp01(img.at(x, y, 1) * (1 - a) + color.g * a);
            img.at(x, y, 2) = clamp01(img.at(x, y, 2) * (1 - a) + color.b * a);
        }
    }
}

RgbImage apply_emoji_overlay(const RgbImage& img, double area_fraction, uint64_t seed) {
    Rng rng(seed);
    RgbImage out = img;
    const double target = area_fraction * img.width * img.height;
    double covered = 0.0;
    int guard = 0;
    while (covered < target && guard++ < 256) {
        int size = static_cast<int>(
            rng.uniform(img.width / 16.0, img.width / 8.0));
        size = std::max(8, size);
        int cx = static_cast<int>(rng.uniform(size / 2.0, img.width - size / 2.0));
        int cy = static_cast<int>(rng.uniform(size / 2.0, img.height - size / 2.0));
        Icon icon = static_cast<Icon>(rng.below(6));
        blend_icon(out, icon, cx, cy, size);
        covered += static_cast<double>(size) * size * 0.6; // rough glyph coverage
    }
    return out;
}

// Classic 5x7 column-encoded uppercase font.
constexpr uint8_t kFont5x7[26][5] = {
    {0x7E, 0x11, 0x11, 0x11, 0x7E}, {0x7F, 0x49, 0x49, 0x49, 0x36},
    {0x3E, 0x41, 0x41, 0x41, 0x22}, {0x7F, 0x41, 0x41, 0x22, 0x1C},
    {0x7F, 0x49, 0x49, 0x49, 0x41}, {0x7F, 0x09, 0x09, 0x09, 0x01},
    {0x3E, 0x41, 0x49, 0x49, 0x7A}, {0x7F, 0x08, 0x08, 0x08, 0x7F},
    {0x00, 0x41, 0x7F, 0x41, 0x00}, {0x20, 0x40, 0x41, 0x3F, 0x01},
    {0x7F, 0x08, 0x14, 0x22, 0x41}, {0x7F, 0x40, 0x40, 0x40, 0x40},
    {0x7F, 0x02, 0x0C, 0x02, 0x7F}, {0x7F, 0x04, 0x08, 0x10, 0x7F},
    {0x3E, 0x41, 0x41, 0x41, 0x3E}, {0x7F, 0x09, 0x09, 0x09, 0x06},
    {0x3E, 0x41, 0x51, 0x21, 0x5E}, {0x7F, 0x09, 0x19, 0x29, 0x46},
    {0x46, 0x49, 0x49, 0x49, 0x31}, {0x01, 0x01, 0x7F, 0x01, 0x01},
    {0x3F, 0x40, 0x40, 0x40, 0x3F}, {0x1F, 0x20, 0x40, 0x20, 0x1F},
    {0x3F, 0x40, 0x38, 0x40, 0x3F}, {0x63, 0x14, 0x08, 0x14, 0x63},
    {0x07, 0x08, 0x70, 0x08, 0x07}, {0x61, 0x51, 0x49, 0x45, 0x43},
};

RgbImage apply_text_overlay(const RgbImage& img, double opacity, uint64_t seed) {
    Rng rng(seed);
    RgbImage out = img;
    const int scale = std::max(2, img.height / 72);
    const float alpha = static_cast<float>(opacity);
    for (int word = 0; word < 3; ++word) {
        int letters = 4 + static_cast<int>(rng.below(4));
        int word_width = letters * 6 * scale;
        int x0 = static_cast<int>(rng.uniform(0.0, std::max(1.0, img.width - word_width - 1.0)));
        int y0 = static_cast<int>(rng.uniform(0.0, std::max(1.0, img.height - 8.0 * scale)));
        for (int li = 0; li < letters; ++li) {
            int glyph = static_cast<int>(rng.below(26));
            for (int col = 0; col < 5; ++col) {
                uint8_t bits = kFont5x7[glyph][col];
                for (int row = 0; row < 7; ++row) {
                    if (!(bits & (1 << row))) continue;
                    for (int dy = 0; dy < scale; ++dy) {
                        for (int dx = 0; dx < scale; ++dx) {
                            int px = x0 + (li * 6 + col) * scale + dx;
                            int py = y0 + row * scale + dy;
                            if (px < 0 || px >= img.width || py < 0 || py >= img.height) continue;
                            for (int c = 0; c < 3; ++c) {
                                out.at(px, py, c) =
                                    clamp01(out.at(px, py, c) * (1 - alpha) + alpha);
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

// ---- catalog ---------------------------------------------------------------

std::vector<TransformSpec> build_catalog() {
    using C = TransformCategory;
    std::vector<TransformSpec> all;
    auto add = [&](std::string id, C cat, std::optional<std::pair<double, double>> range,
                   std::optional<double> worst, std::vector<double> choices, std::string units) {
        all.push_back({std::move(id), cat, range, worst, std::move(choices), std::move(units)});
    };

    add("all rotations", C::Spatial, {{90.0, 270.0}}, 180.0, {90.0, 180.0, 270.0}, "degrees");
    add("brightness", C::Color, {{0.5, 1.5}}, 0.5, {}, "factor");
    add("combined", C::Combination, std::nullopt, std::nullopt, {}, "");
    add("combined nocrop", C::Combination, std::nullopt, std::nullopt, {}, "");
    add("combined nocrop rotate", C::Combination, std::nullopt, std::nullopt, {}, "");
    add("combined rotate", C::Combination, std::nullopt, std::nullopt, {}, "");
    add("contrast", C::Color, {{0.5, 1.5}}, 0.5, {}, "factor");
    add("crop resize", C::Spatial, {{0.6, 0.95}}, 0.6, {}, "retained area fraction");
    add("denoise", C::Quality, {{1.0, 2.0}}, 2.0, {1.0, 2.0}, "median radius");
    add("emoji overlay", C::Overlay, {{0.02, 0.10}}, 0.10, {}, "covered area fraction");
    add("exposure", C::Color, {{0.5, 2.0}}, 2.0, {}, "gamma");
    add("file format", C::Quality, {{40.0, 95.0}}, 40.0, {}, "jpeg quality");
    add("flip left-right", C::Spatial, std::nullopt, std::nullopt, {}, "");
    add("flip up-down", C::Spatial, std::nullopt, std::nullopt, {}, "");
    add("gaussian blur", C::Quality, {{0.5, 2.0}}, 2.0, {}, "sigma px");
    add("gaussian noise", C::Noise, {{0.01, 0.05}}, 0.05, {}, "sigma");
    add("grayscale", C::Color, std::nullopt, std::nullopt, {}, "");
    add("hue", C::Color, {{-0.1, 0.1}}, 0.1, {}, "turns");
    add("identity", C::Identity, std::nullopt, std::nullopt, {}, "");
    add("impulse noise", C::Noise, {{0.005, 0.02}}, 0.02, {}, "pixel fraction");
    add("instagram", C::Color, {{1.0, 5.0}}, 5.0, {1.0, 2.0, 3.0, 4.0, 5.0}, "filter index");
    add("light text overlay", C::Overlay, {{0.2, 0.5}}, 0.5, {}, "opacity");
    add("resize", C::Spatial, {{0.5, 1.5}}, 0.5, {}, "scale");
    add("rotation", C::Spatial, {{5.0, 30.0}}, 30.0, {}, "degrees (random sign)");
    add("saturation", C::Color, {{0.5, 1.5}}, 0.5, {}, "factor");
    add("sharpness", C::Quality, {{1.0, 2.0}}, 2.0, {}, "factor");
    add("shot noise", C::Noise, {{0.01, 0.05}}, 0.05, {}, "equivalent sigma");
    add("small rotation", C::Spatial, {{-2.0, 2.0}}, 2.0, {}, "degrees");
    add("speckle noise", C::Noise, {{0.01, 0.05}}, 0.05, {}, "sigma");
    add("zoom out", C::Spatial, {{1.1, 1.5}}, 1.5, {}, "pad factor");
    return all;
}

double resolve_strength(const TransformSpec& spec, StrengthMode mode, uint64_t rng_seed) {
    if (mode == StrengthMode::worst) {
        if (!spec.worst_strength) raise(ErrorCode::NoStrength, spec.id + " has no strength");
        return *spec.worst_strength;
    }
    return sample_strength(spec, rng_seed);
}

RgbImage apply_combined(const std::string& id, StrengthMode mode, const RgbImage& img,
                        uint64_t rng_seed) {
    const bool with_crop = id == "combined" || id == "combined rotate";
    const bool with_rotation = id == "combined rotate" || id == "combined nocrop rotate";
    RgbImage current = img;
    // Constituents apply right to left: rotation, then JPEG, then brightness,
    // then crop resize.
    if (with_rotation) {
        current = apply(transform_by_id("rotation"), mode, current, mix_seed(rng_seed, 1));
    }
    current = apply(transform_by_id("file format"), mode, current, mix_seed(rng_seed, 2));
    current = apply(transform_by_id("brightness"), mode, current, mix_seed(rng_seed, 3));
    if (with_crop) {
        current = apply(transform_by_id("crop resize"), mode, current, mix_seed(rng_seed, 4));
    }
    return current;
}

} // namespace

const char* category_name(TransformCategory category) {
    switch (category) {
        case TransformCategory::Color: return "Color";
        case TransformCategory::Combination: return "Combination";
        case TransformCategory::Noise: return "Noise";
        case TransformCategory::Overlay: return "Overlay";
        case TransformCategory::Quality: return "Quality";
        case TransformCategory::Spatial: return "Spatial";
        case TransformCategory::Identity: return "Identity";
    }
    return "Unknown";
}

const std::vector<TransformSpec>& list_transforms() {
    static const std::vector<TransformSpec> catalog = build_catalog();
    return catalog;
}

const TransformSpec& transform_by_id(const std::string& id) {
    for (const auto& spec : list_transforms()) {
        if (spec.id == id) return spec;
    }
    raise(ErrorCode::InvalidConfig, "unknown transform: " + id);
}

double sample_strength(const TransformSpec& spec, uint64_t rng_seed) {
    if (!spec.strength_range) raise(ErrorCode::NoStrength, spec.id + " is parameter-free");
    Rng rng(strength_seed(spec, rng_seed));
    if (!spec.choices.empty()) {
        return spec.choices[rng.below(spec.choices.size())];
    }
    return rng.uniform(spec.strength_range->first, spec.strength_range->second);
}

RgbImage apply(const TransformSpec& spec, StrengthMode mode, const RgbImage& img,
               uint64_t rng_seed) {
    const std::string& id = spec.id;
    if (id == "identity") return img;
    if (id == "flip left-right") return apply_flip_lr(img);
    if (id == "flip up-down") return apply_flip_ud(img);
    if (id == "grayscale") return apply_grayscale(img);
    if (spec.category == TransformCategory::Combination) {
        return apply_combined(id, mode, img, rng_seed);
    }

    const double strength = resolve_strength(spec, mode, rng_seed);
    const uint64_t nseed = noise_seed(spec, rng_seed);

    if (id == "brightness") return apply_brightness(img, strength);
    if (id == "contrast") return apply_contrast(img, strength);
    if (id == "saturation") return apply_saturation(img, strength);
    if (id == "hue") return apply_hue(img, strength);
    if (id == "exposure") return apply_exposure(img, strength);
    if (id == "instagram") return apply_instagram(img, static_cast<int>(std::lround(strength)));
    if (id == "file format") return apply_jpeg(img, strength);
    if (id == "gaussian blur") return apply_gaussian_blur(img, strength);
    if (id == "denoise") return apply_median(img, static_cast<int>(std::lround(strength)));
    if (id == "sharpness") return apply_sharpness(img, strength);
    if (id == "gaussian noise") return apply_gaussian_noise(img, strength, nseed);
    if (id == "shot noise") return apply_shot_noise(img, strength, nseed);
    if (id == "impulse noise") return apply_impulse_noise(img, strength, nseed);
    if (id == "speckle noise") return apply_speckle_noise(img, strength, nseed);
    if (id == "all rotations") {
        return apply_quarter_rotation(img, static_cast<int>(std::lround(strength)));
    }
    if (id == "rotation") {
        double angle = strength;
        if (mode == StrengthMode::random) {
            Rng rng(mix_seed(nseed, 0x5349u)); // sign stream
            if (rng.coin()) angle = -angle;
        }
        return warp_rotation(img, angle, /*expand=*/true);
    }
    if (id == "small rotation") return warp_rotation(img, strength, /*expand=*/false);
    if (id == "resize") return apply_resize_transform(img, strength);
    if (id == "crop resize") return apply_crop_resize(img, strength);
    if (id == "zoom out") return apply_zoom_out(img, strength);
    if (id == "emoji overlay") return apply_emoji_overlay(img, strength, nseed);
    if (id == "light text overlay") return apply_text_overlay(img, strength, nseed);

    raise(ErrorCode::InvalidConfig, "unhandled transform: " + id);
}

std::string catalog_json() {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& spec : list_transforms()) {
        nlohmann::json entry;
        entry["id"] = spec.id;
        entry["category"] = category_name(spec.category);
        if (spec.strength_range) {
            entry["strength_range"] = {spec.strength_range->first, spec.strength_range->second};
        } else {
            entry["strength_range"] = nullptr;
        }
        if (spec.worst_strength) {
            entry["worst_strength"] = *spec.worst_strength;
        } else {
            entry["worst_strength"] = nullptr;
        }
        if (!spec.choices.empty()) entry["choices"] = spec.choices;
        entry["units"] = spec.units;
        entries.push_back(entry);
    }
    doc["transforms"] = entries;
    return doc.dump(2) + "\n";
}

} // namespace wm
