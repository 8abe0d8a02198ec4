#pragma once

#include <vector>

#include "wm/image.hpp"

namespace wm {

/// 8x8 block coefficients of a plane. Dimensions are padded up to multiples
/// of 8 (edge replicate); `coef` is row-major over the padded raster with
/// each 8x8 tile holding its orthonormal DCT-II coefficients in place.
struct BlockDct {
    int width = 0;         // padded
    int height = 0;        // padded
    int source_width = 0;  // pre-padding
    int source_height = 0;
    std::vector<double> coef;

    double at(int x, int y) const { return coef[static_cast<size_t>(y) * width + x]; }
    double& at(int x, int y) { return coef[static_cast<size_t>(y) * width + x]; }
};

BlockDct block_dct(const ImagePlane& plane);

/// Inverse transform, cropped back to the source dimensions. Output samples
/// are not clamped; callers quantize or clamp as needed.
ImagePlane block_idct(const BlockDct& coefficients);

/// In-place 2-D orthonormal DCT of one 8x8 tile (row-major, stride 8).
void dct_8x8(double block[64]);
void idct_8x8(double block[64]);

} // namespace wm
