#include "wm/decision.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "wm/error.hpp"
#include "wm/util.hpp"

namespace wm {

void CalibrationSet::normalize() {
    std::sort(scores0.begin(), scores0.end());
    std::sort(scores1.begin(), scores1.end());
    std::sort(per_bit_pooled.begin(), per_bit_pooled.end());
}

std::string CalibrationSet::to_json_text() const {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["scores0"] = scores0;
    doc["scores1"] = scores1;
    doc["per_bit_pooled"] = per_bit_pooled;
    doc["provenance"] = {{"dataset", provenance_dataset},
                         {"transform_policy", provenance_transform_policy}};
    return doc.dump(2) + "\n";
}

CalibrationSet CalibrationSet::from_json_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::MalformedFile, "calibration file is not valid JSON");
    }
    CalibrationSet calib;
    try {
        calib.scores0 = doc.at("scores0").get<std::vector<double>>();
        calib.scores1 = doc.at("scores1").get<std::vector<double>>();
        if (doc.contains("per_bit_pooled")) {
            calib.per_bit_pooled = doc["per_bit_pooled"].get<std::vector<double>>();
        }
        if (doc.contains("provenance")) {
            calib.provenance_dataset = doc["provenance"].value("dataset", "");
            calib.provenance_transform_policy = doc["provenance"].value("transform_policy", "");
        }
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::MalformedFile, "calibration file missing required fields");
    }
    calib.normalize();
    return calib;
}

std::string CalibrationSet::content_hash() const { return sha256_hex(to_json_text()); }

double conformal_p(double score, const std::vector<double>& sorted_calib, HypothesisKind k) {
    if (sorted_calib.empty()) raise(ErrorCode::EmptyCalibration, "empty calibration set");
    const size_t n = sorted_calib.size();
    size_t count = 0;
    if (k == HypothesisKind::H1) {
        // #{i : score >= calib_i}
        count = static_cast<size_t>(
            std::upper_bound(sorted_calib.begin(), sorted_calib.end(), score) -
            sorted_calib.begin());
    } else {
        // (2k-1) = -1 flips the comparison: #{i : score <= calib_i}
        count = n - static_cast<size_t>(
                        std::lower_bound(sorted_calib.begin(), sorted_calib.end(), score) -
                        sorted_calib.begin());
    }
    return static_cast<double>(1 + count) / static_cast<double>(n + 1);
}

Decision decide(double score, const CalibrationSet& calib, double alpha) {
    if (alpha <= 0.0 || alpha >= 1.0) raise(ErrorCode::InvalidConfig, "alpha must be in (0,1)");
    // p-value granularity is 1/(n+1); below that threshold the test can never
    // reject and the rule degenerates to always-abstain.
    if (static_cast<double>(calib.scores0.size() + 1) < 1.0 / alpha ||
        static_cast<double>(calib.scores1.size() + 1) < 1.0 / alpha) {
        raise(ErrorCode::InsufficientCalibration,
              "calibration sets need at least 1/alpha - 1 scores");
    }
    Decision decision;
    decision.alpha = alpha;
    decision.rho0 = conformal_p(score, calib.scores0, HypothesisKind::H0);
    decision.rho1 = conformal_p(score, calib.scores1, HypothesisKind::H1);
    const bool reject0 = decision.rho0 <= alpha;
    const bool reject1 = decision.rho1 <= alpha;
    if (reject0 && !reject1) {
        decision.verdict = Verdict::watermarked;
    } else if (!reject0 && reject1) {
        decision.verdict = Verdict::not_watermarked;
    } else {
        decision.verdict = Verdict::abstain; // conflict or no evidence
    }
    return decision;
}

const char* verdict_name(Verdict verdict) {
    switch (verdict) {
        case Verdict::watermarked: return "watermarked";
        case Verdict::not_watermarked: return "not_watermarked";
        case Verdict::abstain: return "abstain";
    }
    return "unknown";
}

MtMethod mt_method_from_name(const std::string& name) {
    if (name == "holm") return MtMethod::holm;
    if (name == "hochberg") return MtMethod::hochberg;
    if (name == "simes") return MtMethod::simes;
    raise(ErrorCode::InvalidConfig, "unknown multiple-testing method: " + name);
}

const char* mt_method_name(MtMethod method) {
    switch (method) {
        case MtMethod::holm: return "holm";
        case MtMethod::hochberg: return "hochberg";
        case MtMethod::simes: return "simes";
    }
    return "unknown";
}

PayloadTest test_payload(const std::vector<double>& bit_pvalues, double alpha, MtMethod method) {
    if (bit_pvalues.empty()) raise(ErrorCode::InvalidPValue, "empty p-value vector");
    for (double p : bit_pvalues) {
        if (!(p >= 0.0 && p <= 1.0)) raise(ErrorCode::InvalidPValue, "p-values must be in [0,1]");
    }
    const size_t m = bit_pvalues.size();
    std::vector<size_t> order(m);
    for (size_t i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return bit_pvalues[a] < bit_pvalues[b]; });

    PayloadTest result;
    result.rejected.assign(m, false);

    if (method == MtMethod::simes) {
        // Global test: reject iff any p_(k) <= k * alpha / m.
        for (size_t k = 0; k < m; ++k) {
            if (bit_pvalues[order[k]] <= static_cast<double>(k + 1) * alpha / m) {
                result.reject_global = true;
                break;
            }
        }
        result.rejected.clear(); // Simes makes no per-hypothesis decisions
        return result;
    }

    if (method == MtMethod::holm) {
        // Step-down: stop at the first p_(k) above alpha / (m - k + 1).
        for (size_t k = 0; k < m; ++k) {
            double threshold = alpha / static_cast<double>(m - k);
            if (bit_pvalues[order[k]] <= threshold) {
                result.rejected[order[k]] = true;
                result.reject_global = true;
            } else {
                break;
            }
        }
        return result;
    }

    // Hochberg step-up: find the largest k with p_(k) <= alpha / (m - k + 1).
    size_t cut = 0;
    bool any = false;
    for (size_t k = m; k-- > 0;) {
        double threshold = alpha / static_cast<double>(m - k);
        if (bit_pvalues[order[k]] <= threshold) {
            cut = k;
            any = true;
            break;
        }
    }
    if (any) {
        result.reject_global = true;
        for (size_t k = 0; k <= cut; ++k) result.rejected[order[k]] = true;
    }
    return result;
}

MatchResult match_payloads(const std::vector<double>& bit_logits,
                           const std::vector<RegistryEntryView>& registry,
                           const CalibrationSet& calib, double alpha, MtMethod method) {
    if (registry.empty()) raise(ErrorCode::EmptyRegistry, "payload registry is empty");
    if (calib.per_bit_pooled.empty()) {
        raise(ErrorCode::EmptyCalibration, "per-bit calibration unavailable");
    }

    MatchResult result;
    std::vector<double> pvalues(bit_logits.size());
    for (const auto& entry : registry) {
        if (entry.code->length() != static_cast<int>(bit_logits.size())) {
            raise(ErrorCode::LengthMismatch, "registry code length does not match logits");
        }
        // p-value of "bit i equals c_i": rank of the hypothesis-signed logit
        // within the correct-sign calibration sample (low tail = evidence
        // against).
        for (size_t i = 0; i < bit_logits.size(); ++i) {
            double signed_logit = entry.code->bits[i] * bit_logits[i];
            pvalues[i] = conformal_p(signed_logit, calib.per_bit_pooled, HypothesisKind::H1);
        }
        if (!test_payload(pvalues, alpha, method).reject_global) {
            ++result.accepted_count;
            if (result.accepted_count == 1) {
                result.code = *entry.code;
                result.customer_id = entry.customer_id;
            }
        }
    }

    if (result.accepted_count == 1) {
        result.status = MatchResult::Status::matched;
    } else if (result.accepted_count > 1) {
        result.status = MatchResult::Status::abstain;
        result.code.reset();
        result.customer_id.reset();
    } else {
        result.status = MatchResult::Status::none;
    }
    return result;
}

} // namespace wm
