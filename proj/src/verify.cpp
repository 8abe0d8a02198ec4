#include "wm/verify.hpp"

#include "wm/error.hpp"
#include "wm/metrics.hpp"

namespace wm {

VerifyOutcome verify_image(const RgbImage& img, const VerifyContext& context) {
    VerifyOutcome outcome;
    outcome.decoded = context.codec->decode(img);
    outcome.decision = decide(outcome.decoded.detection_logit, *context.calibration, context.alpha);

    if (context.registry && !context.registry->entries().empty() &&
        !context.calibration->per_bit_pooled.empty()) {
        std::vector<RegistryEntryView> views;
        views.reserve(context.registry->entries().size());
        for (const auto& entry : context.registry->entries()) {
            views.push_back({entry.customer_id, &entry.code});
        }
        outcome.match = match_payloads(outcome.decoded.bit_logits, views, *context.calibration,
                                       context.alpha, context.method);
        outcome.nearest = context.registry->decode_id(outcome.decoded.bit_logits);
        if (outcome.match->status == MatchResult::Status::matched) {
            outcome.bit_accuracy_vs_matched =
                bit_accuracy(outcome.decoded.bit_logits, *outcome.match->code);
        }
    }
    return outcome;
}

nlohmann::json outcome_json(const VerifyOutcome& outcome, const VerifyContext& context) {
    nlohmann::json doc;
    doc["verdict"] = verdict_name(outcome.decision.verdict);
    doc["rho0"] = outcome.decision.rho0;
    doc["rho1"] = outcome.decision.rho1;
    doc["alpha"] = outcome.decision.alpha;
    if (outcome.match) {
        doc["accepted_count"] = outcome.match->accepted_count;
        if (outcome.match->status == MatchResult::Status::matched) {
            doc["matched_payload"] = *outcome.match->customer_id;
        } else {
            doc["matched_payload"] = nullptr;
        }
        if (outcome.bit_accuracy_vs_matched) {
            doc["bit_accuracy_vs_matched"] = *outcome.bit_accuracy_vs_matched;
        }
        if (outcome.nearest) {
            doc["nearest_payload"] = {{"customer_id", outcome.nearest->customer_id},
                                      {"version", outcome.nearest->version},
                                      {"distance", outcome.nearest->distance},
                                      {"tie", outcome.nearest->tie}};
        }
    }
    if (!context.redact_logits) {
        doc["detection_logit"] = outcome.decoded.detection_logit;
        doc["bit_logits"] = outcome.decoded.bit_logits;
        doc["alignment"] = outcome.decoded.alignment.name();
    }
    return doc;
}

int verdict_exit_code(Verdict verdict) {
    switch (verdict) {
        case Verdict::watermarked: return 0;
        case Verdict::not_watermarked: return 3;
        case Verdict::abstain: return 4;
    }
    return 1;
}

} // namespace wm
