#pragma once

#include "wm/image.hpp"

namespace wm {

enum class ResizeMethod { bilinear, bicubic };

/// Separable resampling. Bicubic uses the a = -0.5 kernel; edges replicate.
/// Downscaling widens the kernel support by the scale factor so frequencies
/// above the new Nyquist are attenuated rather than aliased.
/// Output samples are clamped to [0,1].
RgbImage resize(const RgbImage& img, int w, int h, ResizeMethod method);

/// Plane variant used by the codec; clamps like the RGB overload.
ImagePlane resize_plane(const ImagePlane& plane, int w, int h, ResizeMethod method);

/// Unclamped variant for signed data (e.g. watermark residuals).
ImagePlane resize_plane_raw(const ImagePlane& plane, int w, int h, ResizeMethod method);

} // namespace wm
