#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wm/codec.hpp"

namespace wm {

enum class HypothesisKind { H0, H1 }; // H0: not watermarked, H1: watermarked

/// Held-out detection-score samples for the conformal decision rule, plus the
/// pooled per-bit calibration used for payload matching. Score arrays are
/// kept sorted.
struct CalibrationSet {
    std::vector<double> scores0; // non-watermarked detection scores
    std::vector<double> scores1; // watermarked detection scores
    // Correct-sign bit logits (c_i * logit_i) pooled across bit positions;
    // bit carriers are constructed symmetrically so positions are
    // exchangeable, and pooling gives per-bit p-values useful resolution.
    std::vector<double> per_bit_pooled;
    std::string provenance_dataset;
    std::string provenance_transform_policy;

    void normalize(); // sorts all arrays
    std::string to_json_text() const;
    static CalibrationSet from_json_text(const std::string& text);
    std::string content_hash() const; // sha256 of the canonical JSON
};

enum class Verdict { watermarked, not_watermarked, abstain };

const char* verdict_name(Verdict verdict);

struct Decision {
    Verdict verdict = Verdict::abstain;
    double rho0 = 1.0;
    double rho1 = 1.0;
    double alpha = 0.0;
};

/// Rank-based conformal p-value against a sorted calibration sample:
/// rho_k = (1 + #{i : (2k-1) * score >= (2k-1) * calib_i}) / (n + 1).
double conformal_p(double score, const std::vector<double>& sorted_calib, HypothesisKind k);

/// Two-sided conformal rule with abstention: reject H_k iff rho_k <= alpha;
/// watermarked iff H0 rejected alone, not_watermarked iff H1 rejected alone,
/// abstain on conflict or no evidence.
Decision decide(double score, const CalibrationSet& calib, double alpha);

enum class MtMethod { holm, hochberg, simes };

MtMethod mt_method_from_name(const std::string& name);
const char* mt_method_name(MtMethod method);

/// Multiple-testing outcome for the global null "the payload is the original
/// one". `rejected` has per-hypothesis decisions for Holm/Hochberg; Simes is
/// a global-only test and leaves it empty.
struct PayloadTest {
    bool reject_global = false;
    std::vector<bool> rejected;
};

PayloadTest test_payload(const std::vector<double>& bit_pvalues, double alpha, MtMethod method);

/// Registry matching by per-bit conformal p-values; abstains when several
/// registered payloads are accepted (the count doubles as a tamper signal).
struct MatchResult {
    enum class Status { matched, abstain, none } status = Status::none;
    std::optional<PayloadCode> code; // set when matched
    std::optional<std::string> customer_id;
    int accepted_count = 0;
};

struct RegistryEntryView {
    std::string customer_id;
    const PayloadCode* code;
};

MatchResult match_payloads(const std::vector<double>& bit_logits,
                           const std::vector<RegistryEntryView>& registry,
                           const CalibrationSet& calib, double alpha,
                           MtMethod method = MtMethod::holm);

} // namespace wm
