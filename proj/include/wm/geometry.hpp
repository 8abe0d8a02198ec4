#pragma once

#include <cmath>

namespace wm::geom {

// Shared geometric conventions for the spatial transforms and the decoder's
// re-synchronization search. Pixel centers sit at integer coordinates; the
// image center is ((w-1)/2, (h-1)/2).

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// Output canvas of a rotation that expands to fit the rotated content.
inline void rotated_canvas(int w, int h, double deg, int& out_w, int& out_h) {
    double rad = deg * M_PI / 180.0;
    double c = std::fabs(std::cos(rad));
    double s = std::fabs(std::sin(rad));
    out_w = static_cast<int>(std::lround(w * c + h * s));
    out_h = static_cast<int>(std::lround(w * s + h * c));
}

/// Maps a source-image coordinate to the expanded rotated canvas. Content
/// rotates counterclockwise by `deg`.
inline Vec2 rotate_expand_forward(int w, int h, int out_w, int out_h, double deg, double x,
                                  double y) {
    double rad = deg * M_PI / 180.0;
    double c = std::cos(rad);
    double s = std::sin(rad);
    double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    double ox = (out_w - 1) / 2.0, oy = (out_h - 1) / 2.0;
    double dx = x - cx, dy = y - cy;
    return {c * dx - s * dy + ox, s * dx + c * dy + oy};
}

/// Same-canvas rotation (small-rotation model), source -> destination.
inline Vec2 rotate_same_forward(int w, int h, double deg, double x, double y) {
    return rotate_expand_forward(w, h, w, h, deg, x, y);
}

/// Center crop box for a retained area fraction; the box is
/// round(side * sqrt(retention)) per axis, offset by integer floor centering.
inline void center_crop_box(int w, int h, double retention, int& cw, int& ch, int& x0, int& y0) {
    double side = std::sqrt(retention);
    cw = static_cast<int>(std::lround(w * side));
    ch = static_cast<int>(std::lround(h * side));
    if (cw < 1) cw = 1;
    if (ch < 1) ch = 1;
    if (cw > w) cw = w;
    if (ch > h) ch = h;
    x0 = (w - cw) / 2;
    y0 = (h - ch) / 2;
}

/// Coordinate mapping of the toolkit's separable resize: destination pixel d
/// samples source coordinate (d + 0.5) * src/dst - 0.5.
inline double resize_to_source(double dest_coord, int src_size, int dst_size) {
    return (dest_coord + 0.5) * (static_cast<double>(src_size) / dst_size) - 0.5;
}

inline double resize_to_dest(double src_coord, int src_size, int dst_size) {
    return (src_coord + 0.5) * (static_cast<double>(dst_size) / src_size) - 0.5;
}

} // namespace wm::geom
