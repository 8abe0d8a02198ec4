#include "wm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wm/error.hpp"

namespace wm {
namespace {

// 11-tap Gaussian (sigma 1.5), frozen as literals.
constexpr int kWin = 11;
constexpr double kGauss[kWin] = {
    0.0010283800844791099, 0.0075987581352391842, 0.036000772128430824, 0.10936068950970001,
    0.2130055377112537,    0.26601172486179434,   0.2130055377112537,   0.10936068950970001,
    0.036000772128430824,  0.0075987581352391842, 0.0010283800844791099};

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

// Separable valid-region Gaussian filter: rows then columns, output
// (w-10) x (h-10).
std::vector<double> gauss_valid(const std::vector<double>& plane, int w, int h, int& ow, int& oh) {
    ow = w - (kWin - 1);
    oh = h - (kWin - 1);
    std::vector<double> rows(static_cast<size_t>(ow) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWin; ++k) acc += kGauss[k] * plane[static_cast<size_t>(y) * w + x + k];
            rows[static_cast<size_t>(y) * ow + x] = acc;
        }
    }
    std::vector<double> out(static_cast<size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWin; ++k) acc += kGauss[k] * rows[static_cast<size_t>(y + k) * ow + x];
            out[static_cast<size_t>(y) * ow + x] = acc;
        }
    }
    return out;
}

double ssim_from_stats(double mu_x, double mu_y, double xx, double yy, double xy) {
    double var_x = xx - mu_x * mu_x;
    double var_y = yy - mu_y * mu_y;
    double cov = xy - mu_x * mu_y;
    return ((2.0 * mu_x * mu_y + kC1) * (2.0 * cov + kC2)) /
           ((mu_x * mu_x + mu_y * mu_y + kC1) * (var_x + var_y + kC2));
}

int sign_of(double v) { return v >= 0.0 ? 1 : -1; } // sign(0) = +1

void require_same_length(size_t a, size_t b) {
    if (a != b) raise(ErrorCode::LengthMismatch, "logit vector and code differ in length");
}

} // namespace

double psnr(const RgbImage& a, const RgbImage& b) {
    if (a.width != b.width || a.height != b.height) {
        raise(ErrorCode::DimensionMismatch, "psnr needs equal dimensions");
    }
    double acc = 0.0;
    for (size_t i = 0; i < a.samples.size(); ++i) {
        double d = static_cast<double>(a.samples[i]) - b.samples[i];
        acc += d * d;
    }
    double mse = acc / static_cast<double>(a.samples.size());
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const RgbImage& a, const RgbImage& b) {
    if (a.width != b.width || a.height != b.height) {
        raise(ErrorCode::DimensionMismatch, "ssim needs equal dimensions");
    }
    const ImagePlane la = to_luma(a);
    const ImagePlane lb = to_luma(b);
    const int w = a.width, h = a.height;
    const size_t n = la.size();

    if (w < kWin || h < kWin) {
        // Degenerate case: a single uniform-weight window over the image.
        double mu_x = 0, mu_y = 0, xx = 0, yy = 0, xy = 0;
        for (size_t i = 0; i < n; ++i) {
            double x = la.samples[i], y = lb.samples[i];
            mu_x += x;
            mu_y += y;
            xx += x * x;
            yy += y * y;
            xy += x * y;
        }
        double inv = 1.0 / static_cast<double>(n);
        return ssim_from_stats(mu_x * inv, mu_y * inv, xx * inv, yy * inv, xy * inv);
    }

    std::vector<double> px(n), py(n), pxx(n), pyy(n), pxy(n);
    for (size_t i = 0; i < n; ++i) {
        double x = la.samples[i], y = lb.samples[i];
        px[i] = x;
        py[i] = y;
        pxx[i] = x * x;
        pyy[i] = y * y;
        pxy[i] = x * y;
    }
    int ow = 0, oh = 0;
    auto mx = gauss_valid(px, w, h, ow, oh);
    auto my = gauss_valid(py, w, h, ow, oh);
    auto mxx = gauss_valid(pxx, w, h, ow, oh);
    auto myy = gauss_valid(pyy, w, h, ow, oh);
    auto mxy = gauss_valid(pxy, w, h, ow, oh);

    double acc = 0.0;
    const size_t windows = static_cast<size_t>(ow) * oh;
    for (size_t i = 0; i < windows; ++i) {
        acc += ssim_from_stats(mx[i], my[i], mxx[i], myy[i], mxy[i]);
    }
    return acc / static_cast<double>(windows);
}

double bit_accuracy(const std::vector<double>& logits, const PayloadCode& code) {
    require_same_length(logits.size(), code.bits.size());
    if (logits.empty()) raise(ErrorCode::LengthMismatch, "empty logit vector");
    size_t matches = 0;
    for (size_t i = 0; i < logits.size(); ++i) {
        if (sign_of(logits[i]) == code.bits[i]) ++matches;
    }
    return static_cast<double>(matches) / static_cast<double>(logits.size());
}

int code_accuracy(const std::vector<double>& logits, const PayloadCode& code) {
    require_same_length(logits.size(), code.bits.size());
    for (size_t i = 0; i < logits.size(); ++i) {
        if (sign_of(logits[i]) != code.bits[i]) return 0;
    }
    return 1;
}

int bit_count_score(const std::vector<double>& logits, const PayloadCode& reference) {
    require_same_length(logits.size(), reference.bits.size());
    int matches = 0;
    for (size_t i = 0; i < logits.size(); ++i) {
        if (sign_of(logits[i]) == reference.bits[i]) ++matches;
    }
    return matches;
}

namespace {

double mean_fpr_exclusive(const std::vector<std::vector<double>>& sets, double kappa) {
    double acc = 0.0;
    for (const auto& set : sets) {
        size_t above = 0;
        for (double v : set) {
            if (v > kappa) ++above;
        }
        acc += static_cast<double>(above) / static_cast<double>(set.size());
    }
    return acc / static_cast<double>(sets.size());
}

double mean_fpr_inclusive(const std::vector<std::vector<double>>& sets, double kappa) {
    double acc = 0.0;
    for (const auto& set : sets) {
        size_t above = 0;
        for (double v : set) {
            if (v >= kappa) ++above;
        }
        acc += static_cast<double>(above) / static_cast<double>(set.size());
    }
    return acc / static_cast<double>(sets.size());
}

std::vector<double> pooled_sorted(const std::vector<std::vector<double>>& sets) {
    std::vector<double> pooled;
    for (const auto& set : sets) pooled.insert(pooled.end(), set.begin(), set.end());
    std::sort(pooled.begin(), pooled.end());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
    return pooled;
}

void validate_negative_sets(const std::vector<std::vector<double>>& sets, double target_fpr) {
    for (const auto& set : sets) {
        if (set.empty()) raise(ErrorCode::InsufficientNegatives, "empty negative score set");
    }
    if (sets.empty()) raise(ErrorCode::InsufficientNegatives, "no negative score sets");
    if (target_fpr < 0.0 || target_fpr > 1.0) {
        raise(ErrorCode::InvalidConfig, "target FPR must lie in [0,1]");
    }
}

} // namespace

OperatingPoint calibrate_kappa(const std::vector<std::vector<double>>& neg_scores_per_transform,
                               double target_fpr) {
    validate_negative_sets(neg_scores_per_transform, target_fpr);
    size_t total = 0;
    for (const auto& set : neg_scores_per_transform) total += set.size();
    if (target_fpr > 0.0 && static_cast<double>(total) < 1.0 / target_fpr) {
        raise(ErrorCode::InsufficientNegatives,
              "need at least 1/target_fpr negative scores in total");
    }
    auto values = pooled_sorted(neg_scores_per_transform);

    // Candidates: midpoints between adjacent distinct order statistics plus
    // one unit outside each extreme.
    std::vector<double> candidates;
    candidates.push_back(values.front() - 1.0);
    for (size_t i = 0; i + 1 < values.size(); ++i) {
        candidates.push_back(0.5 * (values[i] + values[i + 1]));
    }
    candidates.push_back(values.back() + 1.0);

    for (double kappa : candidates) {
        if (mean_fpr_exclusive(neg_scores_per_transform, kappa) <= target_fpr) {
            return OperatingPoint{kappa};
        }
    }
    return OperatingPoint{values.back() + 1.0};
}

KappaBoundary calibrate_kappa_boundary(
    const std::vector<std::vector<double>>& neg_scores_per_transform, double target_fpr) {
    validate_negative_sets(neg_scores_per_transform, target_fpr);
    auto values = pooled_sorted(neg_scores_per_transform);

    // Exclusive convention (flag score > kappa): the mean FPR only changes at
    // the distinct negative values, so the minimal feasible threshold is one
    // of them (or below the minimum when everything is feasible).
    KappaBoundary boundary;
    boundary.exclusive = values.back(); // FPR(max) = 0 always holds
    {
        std::vector<double> candidates;
        candidates.push_back(values.front() - 1.0);
        candidates.insert(candidates.end(), values.begin(), values.end());
        for (double kappa : candidates) {
            if (mean_fpr_exclusive(neg_scores_per_transform, kappa) <= target_fpr) {
                boundary.exclusive = kappa;
                break;
            }
        }
    }

    // Inclusive convention (flag score >= kappa): the FPR drops just past each
    // value, so the minimal feasible threshold is a value or its successor.
    boundary.inclusive = std::nextafter(values.back(), std::numeric_limits<double>::infinity());
    {
        std::vector<double> candidates;
        candidates.push_back(values.front() - 1.0);
        for (double v : values) {
            candidates.push_back(v);
            candidates.push_back(std::nextafter(v, std::numeric_limits<double>::infinity()));
        }
        for (double kappa : candidates) {
            if (mean_fpr_inclusive(neg_scores_per_transform, kappa) <= target_fpr) {
                boundary.inclusive = kappa;
                break;
            }
        }
    }
    return boundary;
}

TprBracket tpr_at_fpr(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores,
                      double target_fpr) {
    if (pos_scores.empty() || neg_scores.empty()) {
        raise(ErrorCode::EmptyScores, "tpr_at_fpr needs nonempty score sets");
    }
    if (target_fpr < 0.0 || target_fpr > 1.0) {
        raise(ErrorCode::InvalidConfig, "target FPR must lie in [0,1]");
    }
    auto boundary = calibrate_kappa_boundary({neg_scores}, target_fpr);

    size_t above_excl = 0, above_incl = 0;
    for (double v : pos_scores) {
        if (v > boundary.exclusive) ++above_excl;
        if (v >= boundary.inclusive) ++above_incl;
    }
    double tpr_excl = static_cast<double>(above_excl) / static_cast<double>(pos_scores.size());
    double tpr_incl = static_cast<double>(above_incl) / static_cast<double>(pos_scores.size());
    return TprBracket{std::min(tpr_excl, tpr_incl), std::max(tpr_excl, tpr_incl)};
}

} // namespace wm
