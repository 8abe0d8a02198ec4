#pragma once

#include <string>
#include <vector>

#include "wm/codec.hpp"
#include "wm/image.hpp"

namespace wm {

/// The single detection threshold shared by every transform in a run.
struct OperatingPoint {
    double kappa = 0.0;
};

struct ScoreSample {
    double score = 0.0;
    bool watermarked = false;
    std::string transform_id;
    bool worst_mode = false;
};

/// 10*log10(1/MSE) over [0,1] samples; +infinity when the images are equal.
double psnr(const RgbImage& a, const RgbImage& b);

/// SSIM on luma: 11x11 Gaussian window (sigma 1.5), C1=0.01^2, C2=0.03^2,
/// mean over valid windows (Wang et al. formulation).
double ssim(const RgbImage& a, const RgbImage& b);

/// Fraction of payload bits whose logit sign matches the code; sign(0) = +1.
double bit_accuracy(const std::vector<double>& logits, const PayloadCode& code);

/// 1 iff every bit matches.
int code_accuracy(const std::vector<double>& logits, const PayloadCode& code);

/// Number of matching signs; the detection-score proxy for payload-only schemes.
int bit_count_score(const std::vector<double>& logits, const PayloadCode& reference);

/// Smallest threshold whose mean false positive rate across the per-transform
/// negative score sets is <= target_fpr. The threshold is placed at the
/// midpoint between adjacent pooled order statistics (one unit outside the
/// extremes at the boundary).
OperatingPoint calibrate_kappa(const std::vector<std::vector<double>>& neg_scores_per_transform,
                               double target_fpr);

/// The pair of boundary thresholds whose tie conventions bound the TPR
/// bracket: `exclusive` flags score > kappa, `inclusive` flags score >= kappa.
struct KappaBoundary {
    double exclusive = 0.0;
    double inclusive = 0.0;
};

KappaBoundary calibrate_kappa_boundary(
    const std::vector<std::vector<double>>& neg_scores_per_transform, double target_fpr);

/// TPR range over the thresholds adjacent to the FPR-feasibility boundary.
/// Ties in the negative scores make the boundary non-unique; the bracket ends
/// are the two tie conventions (equal when there are no ties).
struct TprBracket {
    double lo = 0.0;
    double hi = 0.0;
};

TprBracket tpr_at_fpr(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores,
                      double target_fpr);

} // namespace wm
