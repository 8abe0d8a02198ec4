#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wm/image.hpp"

namespace wm {

/// 32 bytes of entropy plus a short identifier. Carriers derived from a key
/// are reproducible across runs and platforms.
struct SecretKey {
    std::array<uint8_t, 32> bytes{};
    std::string key_id;

    /// Four little-endian 64-bit words of the key material.
    std::array<uint64_t, 4> words() const;

    static SecretKey generate(uint64_t seed, const std::string& key_id);
    static SecretKey from_json_text(const std::string& text);
    std::string to_json_text() const;
};

/// One mid-frequency coefficient position inside an 8x8 block, with the
/// relative embedding weight applied to it.
struct BandIndex {
    int u = 0;
    int v = 0;
    double weight = 1.0;
};

struct CodecConfig {
    int working_resolution = 512;   // square working raster, multiple of 8
    int payload_length = 64;        // C
    double psnr_floor = 42.0;       // dB, enforced per image at working resolution
    std::vector<BandIndex> band;    // defaults to 3 <= u+v <= 5
    double base_strength = 1.0;     // nominal amplitude before the PSNR backstop
    double masking_exponent = 0.6;  // strength_b = base * activity^exponent
    double detection_gain = 4.0;    // detection carrier gain relative to bit carriers
    double activity_floor = 0.002;  // lower bound on the block activity estimate
    // Absolute cap on the per-block watermark RMS (pixel domain):
    // cap = floor + scale * activity + scale_hi * max(0, activity - knee).
    // The gentle low-activity slope keeps the mark below the contrast
    // visibility threshold in smooth and lightly textured regions; the knee
    // restores amplitude in strong texture, where masking hides it.
    double ssim_cap_scale = 0.18;
    double ssim_cap_floor = 0.0024;
    double ssim_cap_knee = 0.02;
    double ssim_cap_scale_hi = 0.55;
    // Per-image quality guard: the residual is shrunk until the working
    // resolution SSIM clears this floor (the caps above make the starting
    // point close, so at most a few shrink steps run).
    double ssim_floor = 0.9812;
    // Wiener-style decoder weighting: slots are scaled by
    // activity / (activity^2 + decode_noise_floor^2), which tapers blocks
    // whose band energy sits near the compression noise floor.
    double decode_noise_floor = 0.01;

    CodecConfig();

    int blocks_per_side() const { return working_resolution / 8; }
    size_t slot_count() const {
        return static_cast<size_t>(blocks_per_side()) * blocks_per_side() * band.size();
    }
    void validate() const;
    uint64_t content_hash() const;

    static std::vector<BandIndex> default_band();
};

/// C-length payload over {-1,+1}.
struct PayloadCode {
    std::vector<int8_t> bits;

    int length() const { return static_cast<int>(bits.size()); }
    std::string to_string() const;                     // '+'/'-' per bit
    static PayloadCode from_string(const std::string&); // inverse of to_string
    static PayloadCode random(uint64_t seed, int length);

    bool operator==(const PayloadCode& other) const { return bits == other.bits; }
};

/// The C+1 keyed spreading sequences; [0] is the detection carrier, [1..C]
/// the bit carriers. All are +-1 valued, length = slot count at the working
/// resolution, and pairwise correlations are bounded by 3/sqrt(L) by
/// construction (violating sequences are deterministically re-drawn).
struct CarrierSet {
    size_t length = 0;
    int payload_length = 0;
    std::vector<std::vector<int8_t>> seq;

    /// Signed integer dot product of two carriers.
    static long long dot(const std::vector<int8_t>& a, const std::vector<int8_t>& b);
};

CarrierSet derive_carriers(const SecretKey& key, const CodecConfig& config);

/// Geometric hypothesis selected by the decoder search.
struct AlignmentHypothesis {
    enum class Kind {
        identity,
        flip_left_right,
        flip_up_down,
        rotate90,
        rotate180,
        rotate270,
        rotate_grid,    // +-30 degrees in 2 degree steps, expanded-canvas model
        rotate_noexpand,// small-rotation model (same canvas)
        crop_rescale,   // center crop at a retention from {0.9, 0.8, 0.7, 0.6}
    };
    Kind kind = Kind::identity;
    double angle_deg = 0.0;  // rotate_* kinds
    double retention = 1.0;  // crop_rescale
    std::string name() const;
};

struct DecodeResult {
    double detection_logit = 0.0;      // variance-stabilized Fisher z of the best correlation
    std::vector<double> bit_logits;    // per-bit normalized correlations under the alignment
    AlignmentHypothesis alignment;
    double correlation = 0.0;          // normalized correlation of the chosen hypothesis
    size_t slots_used = 0;
};

/// Corner-case filter: refuses near-uniform content (luma stddev < 0.01 or
/// more than 98% of pixels within 1/255 of the modal luma).
bool should_watermark(const RgbImage& img, const CodecConfig& config);

/// Bicubically rescales a working-resolution watermark delta to the native
/// size. Identity when sizes already match.
RgbImage rescale_residual(const RgbImage& residual, int native_w, int native_h);

/// Long-lived embed/decode context holding the derived carriers.
class Codec {
public:
    Codec(SecretKey key, CodecConfig config);

    const SecretKey& key() const { return key_; }
    const CodecConfig& config() const { return config_; }
    const CarrierSet& carriers() const { return carriers_; }

    bool watermarkable(const RgbImage& img) const { return should_watermark(img, config_); }

    /// Keyed spread-spectrum embed. Output has the input's dimensions; PSNR
    /// at the working resolution is >= config.psnr_floor for every image.
    RgbImage embed(const RgbImage& img, const PayloadCode& code) const;

    /// Blind decode with geometric re-synchronization.
    DecodeResult decode(const RgbImage& img) const;

    /// The decoder's geometric search set, in evaluation order.
    static std::vector<AlignmentHypothesis> search_set();

private:
    SecretKey key_;
    CodecConfig config_;
    CarrierSet carriers_;
};

/// Free-function forms of the codec operations (derive carriers per call).
RgbImage embed(const RgbImage& img, const PayloadCode& code, const SecretKey& key,
               const CodecConfig& config);
DecodeResult decode_logits(const RgbImage& img, const SecretKey& key, const CodecConfig& config);

} // namespace wm
