#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "wm/codec.hpp"
#include "wm/decision.hpp"
#include "wm/payload.hpp"

namespace wm {

/// Everything a verification decision needs; the CLI and the HTTP service
/// share this single code path so their verdicts cannot diverge.
struct VerifyContext {
    std::shared_ptr<const Codec> codec;
    std::shared_ptr<const CalibrationSet> calibration;
    std::shared_ptr<const PayloadRegistry> registry; // may be null
    double alpha = 0.01;
    MtMethod method = MtMethod::holm;
    bool redact_logits = false;
};

struct VerifyOutcome {
    Decision decision;
    DecodeResult decoded;
    std::optional<MatchResult> match;              // registry matching outcome
    std::optional<PayloadRegistry::IdMatch> nearest; // Hamming nearest entry
    std::optional<double> bit_accuracy_vs_matched;
};

VerifyOutcome verify_image(const RgbImage& img, const VerifyContext& context);

/// The detect JSON emitted by both the CLI and the service. Raw detector
/// logits are omitted when the context redacts them.
nlohmann::json outcome_json(const VerifyOutcome& outcome, const VerifyContext& context);

/// Exit-code contract: 0 watermarked, 3 not_watermarked, 4 abstain.
int verdict_exit_code(Verdict verdict);

} // namespace wm
