#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "oracle_ssim.hpp"
#include "wm/error.hpp"
#include "wm/metrics.hpp"
#include "wm/rng.hpp"

using namespace wm;

TEST_CASE("psnr closed forms") {
    RgbImage x = wmtest::noise_image(1, 16, 16);
    CHECK(std::isinf(psnr(x, x)));

    // Every sample differs by exactly 1/255.
    RgbImage a = wmtest::constant_image(16, 16, 0.4f, 0.4f, 0.4f);
    RgbImage b = wmtest::constant_image(16, 16, 0.4f + 1.0f / 255.0f, 0.4f + 1.0f / 255.0f,
                                        0.4f + 1.0f / 255.0f);
    CHECK(psnr(a, b) == doctest::Approx(20.0 * std::log10(255.0)).epsilon(1e-6));
    CHECK(psnr(a, b) == doctest::Approx(psnr(b, a)));

    RgbImage wrong(8, 8);
    CHECK_THROWS_AS((void)psnr(a, wrong), Error);
}

TEST_CASE("ssim identical and constant closed forms") {
    RgbImage x = wmtest::noise_image(2, 32, 32);
    CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-12));

    RgbImage zero = wmtest::constant_image(32, 32, 0.0f, 0.0f, 0.0f);
    RgbImage one = wmtest::constant_image(32, 32, 1.0f, 1.0f, 1.0f);
    const double c1 = 1e-4;
    CHECK(ssim(zero, one) == doctest::Approx(c1 / (1.0 + c1)).epsilon(1e-9));
}

TEST_CASE("ssim matches the independent reference on random pairs") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        RgbImage a = wmtest::noise_image(1000 + trial, 64, 64);
        RgbImage b = a;
        double amp = 0.01 + 0.2 * rng.uniform();
        for (auto& v : b.samples) {
            v = clamp01(v + static_cast<float>(amp * (rng.uniform() - 0.5)));
        }
        CHECK(ssim(a, b) == doctest::Approx(wmtest::oracle_ssim(a, b)).epsilon(1e-4));
    }
}

TEST_CASE("bit accuracy and the sign(0)=+1 convention") {
    PayloadCode code;
    code.bits = {1, 1, 1, 1, -1, -1, -1, -1};
    std::vector<double> logits = {0.5, 0.1, 2.0, 0.01, -0.5, -0.1, -2.0, -0.01};
    CHECK(bit_accuracy(logits, code) == doctest::Approx(1.0));
    CHECK(code_accuracy(logits, code) == 1);

    std::vector<double> half = {0.5, 0.1, -2.0, -0.01, 0.5, 0.1, -2.0, -0.01};
    CHECK(bit_accuracy(half, code) == doctest::Approx(0.5));
    CHECK(code_accuracy(half, code) == 0);

    PayloadCode neg;
    neg.bits = {-1};
    CHECK(bit_accuracy({0.0}, neg) == doctest::Approx(0.0)); // sign(0) = +1 counts as mismatch
    CHECK(bit_accuracy({0.0}, PayloadCode{{1}}) == doctest::Approx(1.0));

    CHECK_THROWS_AS((void)bit_accuracy({0.1, 0.2}, neg), Error);
}

TEST_CASE("code accuracy never exceeds bit accuracy on a sample set") {
    Rng rng(5);
    double bit_sum = 0.0, code_sum = 0.0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        PayloadCode code = PayloadCode::random(t, 16);
        std::vector<double> logits(16);
        for (auto& v : logits) v = rng.uniform() - 0.45;
        bit_sum += bit_accuracy(logits, code);
        code_sum += code_accuracy(logits, code);
    }
    CHECK(code_sum / trials <= bit_sum / trials);
}

TEST_CASE("bit_count_score basics and Monte Carlo expectation") {
    PayloadCode code = PayloadCode::random(9, 64);
    std::vector<double> perfect(64);
    for (int i = 0; i < 64; ++i) perfect[i] = code.bits[i] * 0.3;
    CHECK(bit_count_score(perfect, code) == 64);

    std::vector<double> complement(64);
    for (int i = 0; i < 64; ++i) complement[i] = -code.bits[i] * 0.3;
    CHECK(bit_count_score(complement, code) == 0);

    // Random logits vs random code: expectation C/2 (Monte Carlo, 1e4 trials,
    // 3 sigma band around 32 for C = 64).
    Rng rng(123);
    double total = 0.0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        PayloadCode c = PayloadCode::random(50000 + t, 64);
        std::vector<double> logits(64);
        for (auto& v : logits) v = rng.normal();
        total += bit_count_score(logits, c);
    }
    double mean = total / trials;
    double sigma = 4.0 / std::sqrt(static_cast<double>(trials)); // sd of one trial = sqrt(64)/2
    CHECK(std::fabs(mean - 32.0) < 3.0 * sigma);
}

TEST_CASE("calibrate_kappa worked examples") {
    // neg {0.1, 0.2, 0.3}, target 33.4%: kappa in (0.2, 0.3]
    OperatingPoint op = calibrate_kappa({{0.1, 0.2, 0.3}}, 0.334);
    CHECK(op.kappa > 0.2);
    CHECK(op.kappa <= 0.3);

    // all negatives equal: kappa just above, FPR 0
    OperatingPoint tied = calibrate_kappa({{0.5, 0.5, 0.5}}, 0.0);
    CHECK(tied.kappa > 0.5);

    // target 0 puts kappa above the maximum
    OperatingPoint zero = calibrate_kappa({{0.1, 0.9, 0.4}}, 0.0);
    CHECK(zero.kappa > 0.9);

    CHECK_THROWS_AS((void)calibrate_kappa({{0.1}}, 0.001), Error);
}

TEST_CASE("calibrated kappa is monotone non-increasing in target fpr") {
    Rng rng(31);
    std::vector<std::vector<double>> sets(3);
    for (auto& set : sets) {
        set.resize(80);
        for (auto& v : set) v = rng.normal();
    }
    double previous = std::numeric_limits<double>::infinity();
    for (double target : {0.005, 0.01, 0.05, 0.1, 0.3, 0.8}) {
        double kappa = calibrate_kappa(sets, target).kappa;
        CHECK(kappa <= previous);
        previous = kappa;
    }
}

TEST_CASE("tpr_at_fpr worked examples") {
    TprBracket b1 = tpr_at_fpr({0.9, 0.8, 0.7}, {0.1, 0.2, 0.3}, 0.001);
    CHECK(b1.lo == doctest::Approx(1.0));
    CHECK(b1.hi == doctest::Approx(1.0));

    TprBracket b2 = tpr_at_fpr({0.5, 0.9}, {0.5, 0.5}, 0.0);
    CHECK(b2.lo == doctest::Approx(0.5));
    CHECK(b2.hi == doctest::Approx(0.5));

    TprBracket b3 = tpr_at_fpr({0.5, 0.9}, {0.5, 0.5}, 1.0);
    CHECK(b3.hi == doctest::Approx(1.0)); // bracket widens to include 100%

    // pos = neg, target 50%: bracket contains 50%
    TprBracket b4 = tpr_at_fpr({0.3, 0.7}, {0.3, 0.7}, 0.5);
    CHECK(b4.lo <= 0.5);
    CHECK(b4.hi >= 0.5);

    CHECK_THROWS_AS((void)tpr_at_fpr({}, {0.1}, 0.5), Error);
}

namespace {

// Brute-force oracle: enumerate every candidate threshold under both tie
// conventions and take the minimal feasible one per convention.
TprBracket brute_force_bracket(const std::vector<double>& pos, const std::vector<double>& neg,
                               double target) {
    std::vector<double> candidates;
    for (double v : neg) {
        candidates.push_back(v);
        candidates.push_back(std::nextafter(v, std::numeric_limits<double>::infinity()));
    }
    double lo = *std::min_element(neg.begin(), neg.end()) - 1.0;
    candidates.push_back(lo);
    std::sort(candidates.begin(), candidates.end());

    auto fpr_excl = [&](double k) {
        size_t n = 0;
        for (double v : neg) n += v > k;
        return double(n) / neg.size();
    };
    auto fpr_incl = [&](double k) {
        size_t n = 0;
        for (double v : neg) n += v >= k;
        return double(n) / neg.size();
    };
    double best_excl = std::numeric_limits<double>::quiet_NaN();
    double best_incl = std::numeric_limits<double>::quiet_NaN();
    for (double k : candidates) {
        if (std::isnan(best_excl) && fpr_excl(k) <= target) best_excl = k;
        if (std::isnan(best_incl) && fpr_incl(k) <= target) best_incl = k;
    }
    auto tpr_excl = [&](double k) {
        size_t n = 0;
        for (double v : pos) n += v > k;
        return double(n) / pos.size();
    };
    auto tpr_incl = [&](double k) {
        size_t n = 0;
        for (double v : pos) n += v >= k;
        return double(n) / pos.size();
    };
    double a = tpr_excl(best_excl), b = tpr_incl(best_incl);
    return {std::min(a, b), std::max(a, b)};
}

} // namespace

TEST_CASE("tpr_at_fpr equals brute-force enumeration on random instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        size_t n_pos = 1 + rng.below(40);
        size_t n_neg = 1 + rng.below(40);
        std::vector<double> pos(n_pos), neg(n_neg);
        // Coarse grid values force plenty of ties.
        for (auto& v : pos) v = static_cast<double>(rng.below(8)) / 4.0 + 0.1;
        for (auto& v : neg) v = static_cast<double>(rng.below(8)) / 4.0;
        double target = static_cast<double>(rng.below(101)) / 100.0;

        TprBracket fast = tpr_at_fpr(pos, neg, target);
        TprBracket slow = brute_force_bracket(pos, neg, target);
        CHECK(fast.lo == doctest::Approx(slow.lo).epsilon(1e-12));
        CHECK(fast.hi == doctest::Approx(slow.hi).epsilon(1e-12));
    }
}
