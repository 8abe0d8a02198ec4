#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "wm/decision.hpp"
#include "wm/error.hpp"
#include "wm/rng.hpp"

using namespace wm;

TEST_CASE("conformal p-value counting on n=9") {
    std::vector<double> calib = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

    // Score above every calibration value: no H0 sample counted.
    CHECK(conformal_p(0.95, calib, HypothesisKind::H0) == doctest::Approx(0.1));
    // Score below every calibration value: all nine counted.
    CHECK(conformal_p(0.05, calib, HypothesisKind::H0) == doctest::Approx(1.0));

    // Tie inclusion: a score equal to one calibration value counts it.
    double with_tie = conformal_p(0.5, calib, HypothesisKind::H0);
    double without_tie = conformal_p(0.5 + 1e-9, calib, HypothesisKind::H0);
    CHECK(with_tie == doctest::Approx((1.0 + 5.0) / 10.0)); // {0.5..0.9} counted
    CHECK(without_tie == doctest::Approx((1.0 + 4.0) / 10.0));

    // H1 flips the comparison.
    CHECK(conformal_p(0.95, calib, HypothesisKind::H1) == doctest::Approx(1.0));
    CHECK(conformal_p(0.05, calib, HypothesisKind::H1) == doctest::Approx(0.1));

    CHECK_THROWS_AS((void)conformal_p(0.5, {}, HypothesisKind::H0), Error);
}

TEST_CASE("p-values live on the 1/(n+1) grid") {
    Rng rng(41);
    std::vector<double> calib(99);
    for (auto& v : calib) v = rng.normal();
    std::sort(calib.begin(), calib.end());
    for (int trial = 0; trial < 500; ++trial) {
        double p = conformal_p(rng.normal(), calib, HypothesisKind::H0);
        double scaled = p * 100.0;
        CHECK(std::fabs(scaled - std::round(scaled)) < 1e-9);
        CHECK(p >= 1.0 / 100.0);
        CHECK(p <= 1.0);
    }
}

namespace {

CalibrationSet make_calibration(uint64_t seed, int n, double null_mean, double marked_mean) {
    Rng rng(seed);
    CalibrationSet calib;
    for (int i = 0; i < n; ++i) {
        calib.scores0.push_back(null_mean + rng.normal());
        calib.scores1.push_back(marked_mean + rng.normal());
    }
    calib.normalize();
    return calib;
}

} // namespace

TEST_CASE("decide rule table") {
    CalibrationSet calib = make_calibration(7, 999, 0.0, 50.0);

    // High score: H0 rejected, H1 retained.
    Decision d1 = decide(49.0, calib, 0.01);
    CHECK(d1.verdict == Verdict::watermarked);
    CHECK(d1.rho0 <= 0.01);
    CHECK(d1.rho1 > 0.01);

    // Low score: H1 rejected, H0 retained.
    Decision d2 = decide(0.5, calib, 0.01);
    CHECK(d2.verdict == Verdict::not_watermarked);

    // Mid score: neither rejected -> abstain.
    Decision d3 = decide(25.0, calib, 0.01);
    CHECK(d3.verdict == Verdict::abstain);

    // Conflicting score when the classes overlap -> abstain.
    CalibrationSet overlapping = make_calibration(8, 999, 0.0, 0.1);
    Decision d4 = decide(25.0, overlapping, 0.01);
    CHECK(d4.rho0 <= 0.01);
    CHECK(d4.rho1 <= 0.01);
    CHECK(d4.verdict == Verdict::abstain);

    CalibrationSet tiny = make_calibration(9, 50, 0.0, 50.0);
    CHECK_THROWS_AS((void)decide(1.0, tiny, 0.01), Error);
}

TEST_CASE("holm step-down worked example") {
    PayloadTest result = test_payload({0.01, 0.04}, 0.05, MtMethod::holm);
    CHECK(result.reject_global);
    CHECK(result.rejected == std::vector<bool>{true, true});

    PayloadTest stop = test_payload({0.03, 0.04}, 0.05, MtMethod::holm);
    CHECK_FALSE(stop.reject_global); // 0.03 > 0.05/2 stops the step-down
    CHECK(stop.rejected == std::vector<bool>{false, false});
}

TEST_CASE("hochberg step-up worked example") {
    // p_(2) = 0.04 <= 0.05 rejects everything below it.
    PayloadTest result = test_payload({0.03, 0.04}, 0.05, MtMethod::hochberg);
    CHECK(result.reject_global);
    CHECK(result.rejected == std::vector<bool>{true, true});
}

TEST_CASE("simes global worked example") {
    PayloadTest result = test_payload({0.02, 0.03, 0.2}, 0.05, MtMethod::simes);
    CHECK(result.reject_global); // p_(2) = 0.03 <= 2*0.05/3
    CHECK(result.rejected.empty());

    PayloadTest keep = test_payload({0.02, 0.2, 0.9}, 0.05, MtMethod::simes);
    CHECK_FALSE(keep.reject_global);
}

TEST_CASE("all p = 1 rejects nothing under any method") {
    std::vector<double> ones(16, 1.0);
    for (MtMethod method : {MtMethod::holm, MtMethod::hochberg, MtMethod::simes}) {
        CHECK_FALSE(test_payload(ones, 0.05, method).reject_global);
    }
    CHECK_THROWS_AS((void)test_payload({0.5, 1.5}, 0.05, MtMethod::holm), Error);
    CHECK_THROWS_AS((void)test_payload({}, 0.05, MtMethod::holm), Error);
}

TEST_CASE("multiple-testing decisions match hand-executed oracles") {
    // Twenty vectors with hand-computed global decisions at alpha = 0.05.
    struct Case {
        std::vector<double> p;
        bool holm, hochberg, simes;
    };
    const std::vector<Case> cases = {
        // singletons: every method reduces to p <= alpha
        {{0.049}, true, true, true},
        {{0.051}, false, false, false},
        // pairs
        {{0.01, 0.04}, true, true, true},       // 0.01 <= 0.025
        {{0.03, 0.04}, false, true, true},      // hochberg: p(2)=0.04<=0.05; simes same
        {{0.03, 0.06}, false, false, false},    // 0.03>0.025, 0.06>0.05
        {{0.02, 0.9}, true, true, true},        // 0.02 <= 0.025
        {{0.026, 0.9}, false, false, false},    // 0.026 > 0.025 and 0.9 > 0.05
        // triples
        {{0.02, 0.03, 0.2}, false, false, true},   // simes: 0.03 <= 0.0333
        {{0.016, 0.03, 0.2}, true, true, true},    // holm: 0.016 <= 0.0167
        {{0.02, 0.04, 0.2}, false, false, false},  // 0.04 > 0.0333, 0.2 > 0.05
        {{0.2, 0.3, 0.04}, false, false, false},   // sorted 0.04,0.2,0.3: every simes rung fails
        {{0.01, 0.02, 0.03}, true, true, true},
        {{1.0, 1.0, 1.0}, false, false, false},
        // quads
        {{0.012, 0.02, 0.9, 0.9}, true, true, true},   // 0.012 <= 0.0125
        {{0.013, 0.02, 0.9, 0.9}, false, false, true}, // simes k=2: 0.02 <= 0.025
        {{0.01, 0.025, 0.0375, 0.05}, true, true, true}, // simes ladder exactly at k*alpha/4
        {{0.02, 0.03, 0.04, 0.05}, false, true, true},   // hochberg: p(4)=0.05<=0.05
        {{0.0125, 0.9, 0.9, 0.9}, true, true, true},     // boundary 0.05/4
        {{0.06, 0.06, 0.06, 0.06}, false, false, false},
        {{0.0, 0.5, 0.6, 0.7}, true, true, true},        // zero p-value always rejects
    };
    int index = 0;
    for (const auto& test_case : cases) {
        INFO("case " << index);
        CHECK(test_payload(test_case.p, 0.05, MtMethod::holm).reject_global == test_case.holm);
        CHECK(test_payload(test_case.p, 0.05, MtMethod::hochberg).reject_global ==
              test_case.hochberg);
        CHECK(test_payload(test_case.p, 0.05, MtMethod::simes).reject_global == test_case.simes);
        ++index;
    }
    CHECK(index == 20);
}

TEST_CASE("lowering a p-value never flips reject to accept") {
    Rng rng(55);
    for (int trial = 0; trial < 200; ++trial) {
        size_t m = 1 + rng.below(12);
        std::vector<double> p(m);
        for (auto& v : p) v = rng.uniform();
        double alpha = 0.01 + 0.2 * rng.uniform();
        for (MtMethod method : {MtMethod::holm, MtMethod::hochberg, MtMethod::simes}) {
            bool before = test_payload(p, alpha, method).reject_global;
            std::vector<double> lowered = p;
            size_t which = rng.below(m);
            lowered[which] *= rng.uniform();
            bool after = test_payload(lowered, alpha, method).reject_global;
            if (before) CHECK(after); // monotone
        }
    }
}

TEST_CASE("conformal validity: super-uniform under exchangeability") {
    Rng rng(303);
    std::vector<double> calib(999);
    for (auto& v : calib) v = rng.normal();
    std::sort(calib.begin(), calib.end());

    const int draws = 10000;
    int hits_001 = 0, hits_005 = 0, hits_010 = 0;
    for (int i = 0; i < draws; ++i) {
        double p = conformal_p(rng.normal(), calib, HypothesisKind::H0);
        hits_001 += p <= 0.01;
        hits_005 += p <= 0.05;
        hits_010 += p <= 0.10;
    }
    auto tolerance = [&](double alpha) { return alpha + 3.0 * std::sqrt(alpha / draws); };
    CHECK(hits_001 / double(draws) <= tolerance(0.01));
    CHECK(hits_005 / double(draws) <= tolerance(0.05));
    CHECK(hits_010 / double(draws) <= tolerance(0.10));
}

namespace {

// Synthetic per-bit calibration: correct-sign logits with a weak tail, as a
// transformed corpus produces.
CalibrationSet payload_calibration(uint64_t seed, int n) {
    Rng rng(seed);
    CalibrationSet calib;
    calib.scores0 = {0.0};
    calib.scores1 = {1.0};
    for (int i = 0; i < n; ++i) {
        double v = 0.2 + 0.08 * rng.normal();
        if (rng.uniform() < 0.01) v = -0.05 + 0.04 * rng.normal(); // bit-error tail
        calib.per_bit_pooled.push_back(v);
    }
    calib.normalize();
    return calib;
}

} // namespace

TEST_CASE("match_payloads: unique, ambiguous, and disjoint registries") {
    CalibrationSet calib = payload_calibration(11, 12800);
    PayloadCode code_a = PayloadCode::random(1, 64);
    PayloadCode code_b = code_a;
    code_b.bits[17] = static_cast<int8_t>(-code_b.bits[17]); // differs in one bit
    PayloadCode code_far = PayloadCode::random(2, 64);
    int distance = 0;
    for (int i = 0; i < 64; ++i) distance += code_far.bits[i] != code_a.bits[i];
    REQUIRE(distance >= 24); // constructed far payload

    // Clean logits for code_a.
    std::vector<double> logits(64);
    for (int i = 0; i < 64; ++i) logits[i] = 0.2 * code_a.bits[i];

    std::vector<RegistryEntryView> registry = {{"alice", &code_a}};
    MatchResult unique = match_payloads(logits, registry, calib, 0.05);
    CHECK(unique.status == MatchResult::Status::matched);
    CHECK(*unique.customer_id == "alice");
    CHECK(unique.accepted_count == 1);

    // A weak logit on the differing bit leaves both codes accepted.
    std::vector<double> weak = logits;
    weak[17] = 0.0;
    std::vector<RegistryEntryView> two = {{"alice", &code_a}, {"bob", &code_b}};
    MatchResult ambiguous = match_payloads(weak, two, calib, 0.05);
    CHECK(ambiguous.status == MatchResult::Status::abstain);
    CHECK(ambiguous.accepted_count == 2);

    // A registry disjoint from the embedded code matches nothing.
    std::vector<RegistryEntryView> disjoint = {{"carol", &code_far}};
    MatchResult none = match_payloads(logits, disjoint, calib, 0.05);
    CHECK(none.status == MatchResult::Status::none);
    CHECK(none.accepted_count == 0);

    CHECK_THROWS_AS((void)match_payloads(logits, {}, calib, 0.05), Error);
}
