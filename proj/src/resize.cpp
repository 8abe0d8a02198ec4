#include "wm/resize.hpp"

#include <cmath>
#include <vector>

#include "wm/error.hpp"

namespace wm {
namespace {

double kernel_bilinear(double x) {
    x = std::fabs(x);
    return x < 1.0 ? 1.0 - x : 0.0;
}

// Keys cubic with a = -0.5.
double kernel_bicubic(double x) {
    constexpr double a = -0.5;
    x = std::fabs(x);
    if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
    return 0.0;
}

struct Tap {
    int start;                   // first source index
    std::vector<double> weights; // normalized
};

// Precomputes taps for one axis. When downscaling the kernel is stretched by
// the inverse scale so it acts as a low-pass filter.
std::vector<Tap> build_taps(int src_size, int dst_size, ResizeMethod method) {
    const double support_base = method == ResizeMethod::bilinear ? 1.0 : 2.0;
    const double scale = static_cast<double>(src_size) / dst_size;
    const double filter_scale = scale > 1.0 ? scale : 1.0;
    const double support = support_base * filter_scale;

    std::vector<Tap> taps(dst_size);
    for (int d = 0; d < dst_size; ++d) {
        double center = (d + 0.5) * scale - 0.5;
        int lo = static_cast<int>(std::floor(center - support + 1e-9));
        int hi = static_cast<int>(std::ceil(center + support - 1e-9));
        Tap tap;
        tap.start = lo;
        tap.weights.reserve(static_cast<size_t>(hi - lo + 1));
        double sum = 0.0;
        for (int s = lo; s <= hi; ++s) {
            double x = (s - center) / filter_scale;
            double w = method == ResizeMethod::bilinear ? kernel_bilinear(x) : kernel_bicubic(x);
            tap.weights.push_back(w);
            sum += w;
        }
        if (sum != 0.0) {
            for (double& w : tap.weights) w /= sum;
        }
        taps[d] = std::move(tap);
    }
    return taps;
}

inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

// Resamples `channels` interleaved planes. Values stay in double until the
// final store; `clamp` restricts to [0,1].
std::vector<float> resample(const std::vector<float>& src, int sw, int sh, int channels, int dw,
                            int dh, ResizeMethod method, bool clamp) {
    auto taps_x = build_taps(sw, dw, method);
    auto taps_y = build_taps(sh, dh, method);

    // Horizontal pass into double intermediate.
    std::vector<double> mid(static_cast<size_t>(dw) * sh * channels);
    for (int y = 0; y < sh; ++y) {
        const float* row = src.data() + static_cast<size_t>(y) * sw * channels;
        double* out = mid.data() + static_cast<size_t>(y) * dw * channels;
        for (int x = 0; x < dw; ++x) {
            const Tap& tap = taps_x[x];
            for (int c = 0; c < channels; ++c) {
                double acc = 0.0;
                for (size_t k = 0; k < tap.weights.size(); ++k) {
                    int sx = clamp_index(tap.start + static_cast<int>(k), sw);
                    acc += tap.weights[k] * row[static_cast<size_t>(sx) * channels + c];
                }
                out[static_cast<size_t>(x) * channels + c] = acc;
            }
        }
    }

    std::vector<float> dst(static_cast<size_t>(dw) * dh * channels);
    for (int y = 0; y < dh; ++y) {
        const Tap& tap = taps_y[y];
        float* out = dst.data() + static_cast<size_t>(y) * dw * channels;
        for (int x = 0; x < dw; ++x) {
            for (int c = 0; c < channels; ++c) {
                double acc = 0.0;
                for (size_t k = 0; k < tap.weights.size(); ++k) {
                    int sy = clamp_index(tap.start + static_cast<int>(k), sh);
                    acc += tap.weights[k] *
                           mid[(static_cast<size_t>(sy) * dw + x) * channels + c];
                }
                float v = static_cast<float>(acc);
                out[static_cast<size_t>(x) * channels + c] = clamp ? clamp01(v) : v;
            }
        }
    }
    return dst;
}

} // namespace

RgbImage resize(const RgbImage& img, int w, int h, ResizeMethod method) {
    if (w < 1 || h < 1) raise(ErrorCode::InvalidConfig, "resize target must be >= 1");
    if (w == img.width && h == img.height) {
        // Identity geometry: taps reduce to a single unit weight, so copying
        // is exact and cheaper.
        return img;
    }
    RgbImage out(w, h);
    out.samples = resample(img.samples, img.width, img.height, 3, w, h, method, true);
    return out;
}

ImagePlane resize_plane(const ImagePlane& plane, int w, int h, ResizeMethod method) {
    if (w < 1 || h < 1) raise(ErrorCode::InvalidConfig, "resize target must be >= 1");
    if (w == plane.width && h == plane.height) return plane;
    ImagePlane out(w, h);
    out.samples = resample(plane.samples, plane.width, plane.height, 1, w, h, method, true);
    return out;
}

ImagePlane resize_plane_raw(const ImagePlane& plane, int w, int h, ResizeMethod method) {
    if (w < 1 || h < 1) raise(ErrorCode::InvalidConfig, "resize target must be >= 1");
    if (w == plane.width && h == plane.height) return plane;
    ImagePlane out(w, h);
    out.samples = resample(plane.samples, plane.width, plane.height, 1, w, h, method, false);
    return out;
}

} // namespace wm
