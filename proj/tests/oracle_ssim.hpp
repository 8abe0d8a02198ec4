#pragma once

// Independent SSIM reference used only by tests: naive per-window evaluation
// with its own Gaussian weights and luma conversion, sharing no code with the
// library implementation.

#include <cmath>
#include <vector>

#include "wm/image.hpp"

namespace wmtest {

inline double oracle_ssim(const wm::RgbImage& a, const wm::RgbImage& b) {
    const int w = a.width, h = a.height;
    std::vector<double> la(static_cast<size_t>(w) * h), lb(la.size());
    for (size_t i = 0; i < la.size(); ++i) {
        la[i] = 0.299 * a.samples[i * 3] + 0.587 * a.samples[i * 3 + 1] +
                0.114 * a.samples[i * 3 + 2];
        lb[i] = 0.299 * b.samples[i * 3] + 0.587 * b.samples[i * 3 + 1] +
                0.114 * b.samples[i * 3 + 2];
    }

    double weights[11][11];
    double total = 0.0;
    for (int y = 0; y < 11; ++y) {
        for (int x = 0; x < 11; ++x) {
            double dx = x - 5, dy = y - 5;
            weights[y][x] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
            total += weights[y][x];
        }
    }
    for (auto& row : weights) {
        for (double& v : row) v /= total;
    }

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double acc = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + 11 <= h; ++y0) {
        for (int x0 = 0; x0 + 11 <= w; ++x0) {
            double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
            for (int y = 0; y < 11; ++y) {
                for (int x = 0; x < 11; ++x) {
                    double wgt = weights[y][x];
                    double va = la[static_cast<size_t>(y0 + y) * w + x0 + x];
                    double vb = lb[static_cast<size_t>(y0 + y) * w + x0 + x];
                    mx += wgt * va;
                    my += wgt * vb;
                    sxx += wgt * va * va;
                    syy += wgt * vb * vb;
                    sxy += wgt * va * vb;
                }
            }
            double vx = sxx - mx * mx, vy = syy - my * my, cov = sxy - mx * my;
            acc += ((2 * mx * my + c1) * (2 * cov + c2)) /
                   ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return acc / count;
}

} // namespace wmtest
