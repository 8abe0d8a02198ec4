#include "wm/dct.hpp"

namespace wm {
namespace {

// 8-point orthonormal DCT-II basis, frozen as literals so results do not
// depend on the platform's cos implementation.
constexpr double kBasis[8][8] = {
    {0.35355339059327376, 0.35355339059327376, 0.35355339059327376, 0.35355339059327376,
     0.35355339059327376, 0.35355339059327376, 0.35355339059327376, 0.35355339059327376},
    {0.49039264020161522, 0.41573480615127262, 0.27778511650980111, 0.097545161008064134,
     -0.097545161008064134, -0.27778511650980111, -0.41573480615127262, -0.49039264020161522},
    {0.46193976625564338, 0.19134171618254489, -0.19134171618254489, -0.46193976625564338,
     -0.46193976625564338, -0.19134171618254489, 0.19134171618254489, 0.46193976625564338},
    {0.41573480615127262, -0.097545161008064134, -0.49039264020161522, -0.27778511650980111,
     0.27778511650980111, 0.49039264020161522, 0.097545161008064134, -0.41573480615127262},
    {0.35355339059327376, -0.35355339059327376, -0.35355339059327376, 0.35355339059327376,
     0.35355339059327376, -0.35355339059327376, -0.35355339059327376, 0.35355339059327376},
    {0.27778511650980111, -0.49039264020161522, 0.097545161008064134, 0.41573480615127262,
     -0.41573480615127262, -0.097545161008064134, 0.49039264020161522, -0.27778511650980111},
    {0.19134171618254489, -0.46193976625564338, 0.46193976625564338, -0.19134171618254489,
     -0.19134171618254489, 0.46193976625564338, -0.46193976625564338, 0.19134171618254489},
    {0.097545161008064134, -0.27778511650980111, 0.41573480615127262, -0.49039264020161522,
     0.49039264020161522, -0.41573480615127262, 0.27778511650980111, -0.097545161008064134},
};

inline void transform_rows(const double in[64], double out[64], bool inverse) {
    for (int r = 0; r < 8; ++r) {
        const double* row = in + r * 8;
        for (int k = 0; k < 8; ++k) {
            double acc = 0.0;
            if (inverse) {
                for (int i = 0; i < 8; ++i) acc += kBasis[i][k] * row[i];
            } else {
                for (int i = 0; i < 8; ++i) acc += kBasis[k][i] * row[i];
            }
            out[r * 8 + k] = acc;
        }
    }
}

inline void transpose(double m[64]) {
    for (int r = 0; r < 8; ++r) {
        for (int c = r + 1; c < 8; ++c) {
            double tmp = m[r * 8 + c];
            m[r * 8 + c] = m[c * 8 + r];
            m[c * 8 + r] = tmp;
        }
    }
}

void apply_2d(double block[64], bool inverse) {
    double tmp[64];
    transform_rows(block, tmp, inverse);
    transpose(tmp);
    transform_rows(tmp, block, inverse);
    transpose(block);
}

inline int pad_up(int n) { return (n + 7) & ~7; }

} // namespace

void dct_8x8(double block[64]) { apply_2d(block, false); }
void idct_8x8(double block[64]) { apply_2d(block, true); }

BlockDct block_dct(const ImagePlane& plane) {
    BlockDct out;
    out.source_width = plane.width;
    out.source_height = plane.height;
    out.width = pad_up(plane.width);
    out.height = pad_up(plane.height);
    out.coef.resize(static_cast<size_t>(out.width) * out.height);

    double block[64];
    for (int by = 0; by < out.height; by += 8) {
        for (int bx = 0; bx < out.width; bx += 8) {
            for (int y = 0; y < 8; ++y) {
                int sy = by + y;
                if (sy >= plane.height) sy = plane.height - 1; // edge replicate
                for (int x = 0; x < 8; ++x) {
                    int sx = bx + x;
                    if (sx >= plane.width) sx = plane.width - 1;
                    block[y * 8 + x] = plane.at(sx, sy);
                }
            }
            dct_8x8(block);
            for (int y = 0; y < 8; ++y) {
                for (int x = 0; x < 8; ++x) out.at(bx + x, by + y) = block[y * 8 + x];
            }
        }
    }
    return out;
}

ImagePlane block_idct(const BlockDct& coefficients) {
    ImagePlane out(coefficients.source_width, coefficients.source_height);
    double block[64];
    for (int by = 0; by < coefficients.height; by += 8) {
        for (int bx = 0; bx < coefficients.width; bx += 8) {
            for (int y = 0; y < 8; ++y) {
                for (int x = 0; x < 8; ++x) block[y * 8 + x] = coefficients.at(bx + x, by + y);
            }
            idct_8x8(block);
            for (int y = 0; y < 8 && by + y < out.height; ++y) {
                for (int x = 0; x < 8 && bx + x < out.width; ++x) {
                    out.at(bx + x, by + y) = static_cast<float>(block[y * 8 + x]);
                }
            }
        }
    }
    return out;
}

} // namespace wm
