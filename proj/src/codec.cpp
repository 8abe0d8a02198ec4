#include "wm/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include <json.hpp>

#include "wm/dct.hpp"
#include "wm/error.hpp"
#include "wm/geometry.hpp"
#include "wm/resize.hpp"
#include "wm/metrics.hpp"
#include "wm/rng.hpp"
#include "wm/util.hpp"

namespace wm {
namespace {

constexpr double kPsnrMarginDb = 0.05; // headroom above the floor before clamping

std::vector<int8_t> generate_sequence(const std::array<uint64_t, 4>& key_words, uint64_t config_hash,
                                      int carrier_index, uint64_t nonce, size_t length) {
    SplitMix64 sm(key_words[0]);
    sm.state ^= key_words[1];
    uint64_t a = sm.next();
    sm.state ^= key_words[2];
    uint64_t b = sm.next();
    sm.state ^= key_words[3];
    uint64_t c = sm.next();
    uint64_t seed = mix_seed(mix_seed(a ^ b, c ^ config_hash),
                             (static_cast<uint64_t>(carrier_index) << 32) ^ nonce);
    Rng rng(seed);
    std::vector<int8_t> seq(length);
    for (auto& bit : seq) bit = (rng.next_u64() >> 63) ? int8_t{1} : int8_t{-1};
    return seq;
}

struct SlotVector {
    std::vector<int> index;   // slot indices with valid data
    std::vector<double> value; // activity-normalized, weighted band coefficients
    double norm_sq = 0.0;
};

struct Hypothesis {
    AlignmentHypothesis spec;
    // Affine map from working-grid coordinates to received-raster coordinates
    // (after the decoder's resize to the working resolution), or a pure
    // permutation for flips and quarter rotations.
    enum class Mode { permutation, affine } mode = Mode::permutation;
    int perm_kind = 0; // 0 identity, 1 fliplr, 2 flipud, 3 rot90, 4 rot180, 5 rot270
    double m00 = 1, m01 = 0, m02 = 0;
    double m10 = 0, m11 = 1, m12 = 0;
    bool restrict_to_box = false;
    int box_x0 = 0, box_y0 = 0, box_x1 = 0, box_y1 = 0; // valid region in working coords
};

// The decoder models "received = tau(original)". Reconstruction samples the
// received raster at tau(p) for each working-grid position p.
Hypothesis make_affine(const AlignmentHypothesis& spec, int wr) {
    Hypothesis h;
    h.spec = spec;
    h.mode = Hypothesis::Mode::affine;
    if (spec.kind == AlignmentHypothesis::Kind::rotate_grid) {
        int out_w = 0, out_h = 0;
        geom::rotated_canvas(wr, wr, spec.angle_deg, out_w, out_h);
        // p -> rotated canvas -> resized-to-working raster
        double rad = spec.angle_deg * M_PI / 180.0;
        double c = std::cos(rad), s = std::sin(rad);
        double cx = (wr - 1) / 2.0;
        double ox = (out_w - 1) / 2.0, oy = (out_h - 1) / 2.0;
        double sx = static_cast<double>(wr) / out_w, sy = static_cast<double>(wr) / out_h;
        // q' = R(p - c) + o ; q = (q' + 0.5) * wr/out - 0.5
        h.m00 = c * sx;
        h.m01 = -s * sx;
        h.m02 = ((-c * cx + s * cx + ox) + 0.5) * sx - 0.5;
        h.m10 = s * sy;
        h.m11 = c * sy;
        h.m12 = ((-s * cx - c * cx + oy) + 0.5) * sy - 0.5;
    } else if (spec.kind == AlignmentHypothesis::Kind::rotate_noexpand) {
        double rad = spec.angle_deg * M_PI / 180.0;
        double c = std::cos(rad), s = std::sin(rad);
        double cx = (wr - 1) / 2.0;
        h.m00 = c;
        h.m01 = -s;
        h.m02 = -c * cx + s * cx + cx;
        h.m10 = s;
        h.m11 = c;
        h.m12 = -s * cx - c * cx + cx;
    } else if (spec.kind == AlignmentHypothesis::Kind::crop_rescale) {
        int cw = 0, ch = 0, x0 = 0, y0 = 0;
        geom::center_crop_box(wr, wr, spec.retention, cw, ch, x0, y0);
        // p inside the crop box -> position in the resized-back raster
        double sx = static_cast<double>(wr) / cw, sy = static_cast<double>(wr) / ch;
        h.m00 = sx;
        h.m01 = 0;
        h.m02 = (-x0 + 0.5) * sx - 0.5;
        h.m10 = 0;
        h.m11 = sy;
        h.m12 = (-y0 + 0.5) * sy - 0.5;
        h.restrict_to_box = true;
        h.box_x0 = x0;
        h.box_y0 = y0;
        h.box_x1 = x0 + cw;
        h.box_y1 = y0 + ch;
    }
    return h;
}

void warp_plane(const ImagePlane& src, const Hypothesis& h, ImagePlane& dst,
                std::vector<uint8_t>& pixel_valid) {
    const int wr = src.width;
    dst.width = wr;
    dst.height = wr;
    dst.samples.resize(src.samples.size());
    pixel_valid.assign(src.samples.size(), 1);

    if (h.mode == Hypothesis::Mode::permutation) {
        for (int y = 0; y < wr; ++y) {
            for (int x = 0; x < wr; ++x) {
                int sx = x, sy = y;
                // Quarter rotations follow out(x,y) = in(N-1-y, x); the
                // decoder applies the inverse permutation.
                switch (h.perm_kind) {
                    case 0: break;
                    case 1: sx = wr - 1 - x; break;                    // flip left-right
                    case 2: sy = wr - 1 - y; break;                    // flip up-down
                    case 3: sx = y; sy = wr - 1 - x; break;            // undo rotate90
                    case 4: sx = wr - 1 - x; sy = wr - 1 - y; break;   // undo rotate180
                    case 5: sx = wr - 1 - y; sy = x; break;            // undo rotate270
                }
                dst.at(x, y) = src.at(sx, sy);
            }
        }
        return;
    }

    for (int y = 0; y < wr; ++y) {
        for (int x = 0; x < wr; ++x) {
            size_t at = static_cast<size_t>(y) * wr + x;
            if (h.restrict_to_box &&
                (x < h.box_x0 || x >= h.box_x1 || y < h.box_y0 || y >= h.box_y1)) {
                dst.samples[at] = 0.5f;
                pixel_valid[at] = 0;
                continue;
            }
            double qx = h.m00 * x + h.m01 * y + h.m02;
            double qy = h.m10 * x + h.m11 * y + h.m12;
            if (qx < -0.5 || qy < -0.5 || qx > wr - 0.5 || qy > wr - 0.5) {
                dst.samples[at] = 0.5f;
                pixel_valid[at] = 0;
                continue;
            }
            int ix = static_cast<int>(std::floor(qx));
            int iy = static_cast<int>(std::floor(qy));
            double fx = qx - ix, fy = qy - iy;
            auto sample = [&](int sx, int sy) {
                sx = sx < 0 ? 0 : (sx >= wr ? wr - 1 : sx);
                sy = sy < 0 ? 0 : (sy >= wr ? wr - 1 : sy);
                return static_cast<double>(src.at(sx, sy));
            };
            double v = (1 - fx) * (1 - fy) * sample(ix, iy) + fx * (1 - fy) * sample(ix + 1, iy) +
                       (1 - fx) * fy * sample(ix, iy + 1) + fx * fy * sample(ix + 1, iy + 1);
            dst.samples[at] = static_cast<float>(v);
        }
    }
}

} // namespace

std::array<uint64_t, 4> SecretKey::words() const {
    std::array<uint64_t, 4> out{};
    for (int w = 0; w < 4; ++w) {
        uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[w * 8 + i];
        out[w] = v;
    }
    return out;
}

SecretKey SecretKey::generate(uint64_t seed, const std::string& key_id) {
    SecretKey key;
    key.key_id = key_id;
    Rng rng(mix_seed(seed, fnv1a64(key_id)));
    for (auto& byte : key.bytes) byte = static_cast<uint8_t>(rng.next_u64() & 0xff);
    return key;
}

SecretKey SecretKey::from_json_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::MalformedFile, "key file is not valid JSON");
    }
    if (!doc.contains("key_id") || !doc.contains("key")) {
        raise(ErrorCode::MalformedFile, "key file missing key_id/key");
    }
    SecretKey key;
    key.key_id = doc["key_id"].get<std::string>();
    auto material = base64_decode(doc["key"].get<std::string>());
    if (material.size() != 32) raise(ErrorCode::MalformedFile, "key material must be 32 bytes");
    std::copy(material.begin(), material.end(), key.bytes.begin());
    return key;
}

std::string SecretKey::to_json_text() const {
    nlohmann::json doc;
    doc["key_id"] = key_id;
    doc["key"] = base64_encode(std::vector<uint8_t>(bytes.begin(), bytes.end()));
    return doc.dump(2) + "\n";
}

CodecConfig::CodecConfig() : band(default_band()) {}

std::vector<BandIndex> CodecConfig::default_band() {
    // Mid-frequency diagonals 3 <= u+v <= 5, ordered by (u+v, u). Lower
    // diagonals carry more weight: they survive compression and filtering
    // better and have smaller JPEG quantization steps.
    std::vector<BandIndex> band;
    for (int sum = 3; sum <= 5; ++sum) {
        double weight = sum == 3 ? 1.0 : (sum == 4 ? 0.3 : 0.15);
        for (int u = 0; u <= sum; ++u) {
            int v = sum - u;
            if (u > 7 || v > 7) continue;
            band.push_back({u, v, weight});
        }
    }
    return band;
}

void CodecConfig::validate() const {
    if (payload_length < 8) raise(ErrorCode::InvalidConfig, "payload length must be >= 8");
    if (psnr_floor <= 30.0) raise(ErrorCode::InvalidConfig, "psnr floor must exceed 30 dB");
    if (working_resolution < 64 || working_resolution % 8 != 0) {
        raise(ErrorCode::InvalidConfig, "working resolution must be a multiple of 8, >= 64");
    }
    if (band.empty()) raise(ErrorCode::InvalidConfig, "coefficient band is empty");
    for (const auto& idx : band) {
        if (idx.u == 0 && idx.v == 0) raise(ErrorCode::InvalidConfig, "band must exclude DC");
        if (idx.u < 0 || idx.u > 7 || idx.v < 0 || idx.v > 7) {
            raise(ErrorCode::InvalidConfig, "band index outside 8x8 block");
        }
        if (idx.weight <= 0.0) raise(ErrorCode::InvalidConfig, "band weight must be positive");
    }
    if (base_strength <= 0.0 || detection_gain <= 0.0 || activity_floor <= 0.0) {
        raise(ErrorCode::InvalidConfig, "strength parameters must be positive");
    }
}

uint64_t CodecConfig::content_hash() const {
    std::string repr = "wr=" + std::to_string(working_resolution) +
                       ";C=" + std::to_string(payload_length) +
                       ";psnr=" + format_fixed(psnr_floor, 6) +
                       ";base=" + format_fixed(base_strength, 6) +
                       ";mask=" + format_fixed(masking_exponent, 6) +
                       ";gain=" + format_fixed(detection_gain, 6) +
                       ";floor=" + format_fixed(activity_floor, 6) +
                       ";cap=" + format_fixed(ssim_cap_scale, 6) + "," +
                       format_fixed(ssim_cap_floor, 6) + "," + format_fixed(ssim_cap_knee, 6) +
                       "," + format_fixed(ssim_floor, 6) +
                       "," + format_fixed(ssim_cap_scale_hi, 6) +
                       ";dnf=" + format_fixed(decode_noise_floor, 6) + ";band=";
    for (const auto& idx : band) {
        repr += std::to_string(idx.u) + "," + std::to_string(idx.v) + "," +
                format_fixed(idx.weight, 6) + ";";
    }
    return fnv1a64(repr);
}

std::string PayloadCode::to_string() const {
    std::string out;
    out.reserve(bits.size());
    for (int8_t bit : bits) out.push_back(bit > 0 ? '+' : '-');
    return out;
}

PayloadCode PayloadCode::from_string(const std::string& text) {
    PayloadCode code;
    code.bits.reserve(text.size());
    for (char c : text) {
        if (c == '+') code.bits.push_back(1);
        else if (c == '-') code.bits.push_back(-1);
        else raise(ErrorCode::MalformedFile, "payload code characters must be + or -");
    }
    return code;
}

PayloadCode PayloadCode::random(uint64_t seed, int length) {
    PayloadCode code;
    code.bits.resize(length);
    Rng rng(seed);
    for (auto& bit : code.bits) bit = rng.coin() ? int8_t{1} : int8_t{-1};
    return code;
}

long long CarrierSet::dot(const std::vector<int8_t>& a, const std::vector<int8_t>& b) {
    long long acc = 0;
    for (size_t i = 0; i < a.size(); ++i) acc += static_cast<int>(a[i]) * b[i];
    return acc;
}

CarrierSet derive_carriers(const SecretKey& key, const CodecConfig& config) {
    config.validate();
    CarrierSet set;
    set.length = config.slot_count();
    set.payload_length = config.payload_length;
    set.seq.resize(config.payload_length + 1);

    const auto words = key.words();
    const uint64_t cfg_hash = config.content_hash();
    const long long bound = static_cast<long long>(std::floor(3.0 * std::sqrt(set.length)));

    for (int k = 0; k <= config.payload_length; ++k) {
        uint64_t nonce = 0;
        while (true) {
            set.seq[k] = generate_sequence(words, cfg_hash, k, nonce, set.length);
            bool ok = true;
            for (int j = 0; j < k; ++j) {
                if (std::llabs(CarrierSet::dot(set.seq[j], set.seq[k])) > bound) {
                    ok = false;
                    break;
                }
            }
            if (ok) break;
            ++nonce; // deterministic re-draw
        }
    }
    return set;
}

bool should_watermark(const RgbImage& img, const CodecConfig&) {
    ImagePlane luma = to_luma(img);
    const size_t n = luma.size();
    if (n == 0) return false;

    double sum = 0.0, sum_sq = 0.0;
    std::array<uint32_t, 256> histogram{};
    for (float v : luma.samples) {
        sum += v;
        sum_sq += static_cast<double>(v) * v;
        int bin = static_cast<int>(v * 255.0f + 0.5f);
        bin = bin < 0 ? 0 : (bin > 255 ? 255 : bin);
        ++histogram[bin];
    }
    double mean = sum / n;
    double variance = std::max(0.0, sum_sq / n - mean * mean);
    if (std::sqrt(variance) < 0.01) return false;

    int modal_bin = 0;
    for (int i = 1; i < 256; ++i) {
        if (histogram[i] > histogram[modal_bin]) modal_bin = i;
    }
    double modal_value = modal_bin / 255.0;
    size_t near_modal = 0;
    const double tolerance = 1.0 / 255.0 + 1e-9;
    for (float v : luma.samples) {
        if (std::fabs(v - modal_value) <= tolerance) ++near_modal;
    }
    return static_cast<double>(near_modal) / n <= 0.98;
}

RgbImage rescale_residual(const RgbImage& residual, int native_w, int native_h) {
    if (residual.width == native_w && residual.height == native_h) return residual;
    RgbImage out(native_w, native_h);
    // Channels are resized independently and left unclamped: a residual is a
    // signed delta, clamping happens when it is added to the native image.
    ImagePlane channel(residual.width, residual.height);
    for (int c = 0; c < 3; ++c) {
        for (size_t i = 0; i < channel.size(); ++i) channel.samples[i] = residual.samples[i * 3 + c];
        ImagePlane scaled = resize_plane_raw(channel, native_w, native_h, ResizeMethod::bicubic);
        for (size_t i = 0; i < scaled.size(); ++i) out.samples[i * 3 + c] = scaled.samples[i];
    }
    return out;
}

Codec::Codec(SecretKey key, CodecConfig config)
    : key_(std::move(key)), config_(std::move(config)), carriers_(derive_carriers(key_, config_)) {}

RgbImage Codec::embed(const RgbImage& img, const PayloadCode& code) const {
    if (code.length() != config_.payload_length) {
        raise(ErrorCode::CodeLengthMismatch, "payload code length does not match config");
    }
    if (img.width < 64 || img.height < 64) {
        raise(ErrorCode::ImageTooSmall, "watermarking needs at least 64x64");
    }
    if (!should_watermark(img, config_)) {
        raise(ErrorCode::NotWatermarkable, "content filtered as a corner case");
    }

    const int wr = config_.working_resolution;
    const bool native_is_working = img.width == wr && img.height == wr;
    const RgbImage work = native_is_working ? img : resize(img, wr, wr, ResizeMethod::bicubic);
    const ImagePlane luma = to_luma(work);
    BlockDct coef = block_dct(luma);

    const int nb = config_.blocks_per_side();
    const size_t band_size = config_.band.size();
    const size_t slots = carriers_.length;

    // Per-slot carrier mix: detection carrier at detection_gain plus the
    // code-signed bit carriers.
    std::vector<double> mix(slots, 0.0);
    {
        const auto& det = carriers_.seq[0];
        for (size_t s = 0; s < slots; ++s) mix[s] = config_.detection_gain * det[s];
        for (int i = 0; i < config_.payload_length; ++i) {
            const auto& carrier = carriers_.seq[i + 1];
            const double sign = code.bits[i];
            for (size_t s = 0; s < slots; ++s) mix[s] += sign * carrier[s];
        }
    }

    // Block activity map, then a 4-neighborhood minimum: strength falls off
    // next to flat blocks so the watermark does not bleed into smooth regions
    // at texture boundaries.
    std::vector<double> activity(static_cast<size_t>(nb) * nb, 0.0);
    for (int by = 0; by < nb; ++by) {
        for (int bx = 0; bx < nb; ++bx) {
            double band_energy = 0.0;
            for (size_t j = 0; j < band_size; ++j) {
                double v = coef.at(bx * 8 + config_.band[j].v, by * 8 + config_.band[j].u);
                band_energy += v * v;
            }
            double a = std::sqrt(band_energy / band_size);
            activity[static_cast<size_t>(by) * nb + bx] =
                a < config_.activity_floor ? config_.activity_floor : a;
        }
    }

    std::vector<double> delta(slots, 0.0);
    double delta_energy = 0.0;
    for (int by = 0; by < nb; ++by) {
        for (int bx = 0; bx < nb; ++bx) {
            const size_t block = static_cast<size_t>(by) * nb + bx;
            double masked = activity[block];
            if (bx > 0) masked = std::min(masked, activity[block - 1]);
            if (bx + 1 < nb) masked = std::min(masked, activity[block + 1]);
            if (by > 0) masked = std::min(masked, activity[block - nb]);
            if (by + 1 < nb) masked = std::min(masked, activity[block + nb]);
            double strength = config_.base_strength * std::pow(masked, config_.masking_exponent);
            for (size_t j = 0; j < band_size; ++j) {
                size_t s = block * band_size + j;
                double d = strength * config_.band[j].weight * mix[s];
                delta[s] = d;
                delta_energy += d * d;
            }
        }
    }

    // Waterfill the PSNR budget over blocks: a single global scale, with each
    // block's pixel-domain RMS clamped at its visibility cap. The scale is
    // bisected so the total spent energy meets the floor exactly (or the caps
    // exhaust first, leaving PSNR above the floor).
    const double pixel_count = static_cast<double>(wr) * wr;
    const double budget_energy =
        std::pow(10.0, -(config_.psnr_floor + kPsnrMarginDb) / 10.0) * pixel_count;
    const size_t block_count = static_cast<size_t>(nb) * nb;
    std::vector<double> block_rms(block_count, 0.0), block_cap(block_count, 0.0);
    for (size_t block = 0; block < block_count; ++block) {
        double energy = 0.0;
        for (size_t j = 0; j < band_size; ++j) {
            double d = delta[block * band_size + j];
            energy += d * d;
        }
        block_rms[block] = std::sqrt(energy / 64.0);
        block_cap[block] =
            config_.ssim_cap_floor + config_.ssim_cap_scale * activity[block] +
            config_.ssim_cap_scale_hi * std::max(0.0, activity[block] - config_.ssim_cap_knee);
    }
    auto spent_energy = [&](double s) {
        double total = 0.0;
        for (size_t block = 0; block < block_count; ++block) {
            double rms = std::min(s * block_rms[block], block_cap[block]);
            total += 64.0 * rms * rms;
        }
        return total;
    };
    double scale;
    const double cap_energy = spent_energy(std::numeric_limits<double>::infinity());
    if (cap_energy <= budget_energy || delta_energy <= 0.0) {
        scale = std::numeric_limits<double>::infinity(); // every block at its cap
    } else {
        double lo_scale = 0.0;
        double hi_scale = std::sqrt(budget_energy / delta_energy);
        while (spent_energy(hi_scale) < budget_energy) hi_scale *= 2.0;
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo_scale + hi_scale);
            (spent_energy(mid) < budget_energy ? lo_scale : hi_scale) = mid;
        }
        scale = lo_scale;
    }

    for (int by = 0; by < nb; ++by) {
        for (int bx = 0; bx < nb; ++bx) {
            const size_t block = static_cast<size_t>(by) * nb + bx;
            double factor = scale;
            if (block_rms[block] > 0.0 && scale * block_rms[block] > block_cap[block]) {
                factor = block_cap[block] / block_rms[block];
            }
            if (!std::isfinite(factor)) factor = 0.0;
            for (size_t j = 0; j < band_size; ++j) {
                size_t s = block * band_size + j;
                coef.at(bx * 8 + config_.band[j].v, by * 8 + config_.band[j].u) +=
                    factor * delta[s];
            }
        }
    }

    ImagePlane marked = block_idct(coef);
    ImagePlane residual(wr, wr);
    for (size_t i = 0; i < residual.size(); ++i) {
        residual.samples[i] = marked.samples[i] - luma.samples[i];
    }

    // Quality guard: shrink the residual until the working-resolution SSIM
    // clears the configured floor. Terminates because SSIM -> 1 as the
    // residual vanishes.
    double shrink = 1.0;
    ImagePlane candidate(wr, wr);
    RgbImage out_work;
    for (int iteration = 0; iteration < 6; ++iteration) {
        for (size_t i = 0; i < candidate.size(); ++i) {
            candidate.samples[i] =
                luma.samples[i] + static_cast<float>(shrink * residual.samples[i]);
        }
        out_work = from_luma(candidate, work);
        double quality = ssim(work, out_work);
        if (quality >= config_.ssim_floor) break;
        double deficit_ratio = (1.0 - config_.ssim_floor) / (1.0 - quality);
        shrink *= std::clamp(0.95 * std::sqrt(deficit_ratio), 0.3, 0.95);
    }

    if (native_is_working) {
        return out_work;
    }
    for (size_t i = 0; i < residual.size(); ++i) {
        residual.samples[i] = static_cast<float>(shrink * residual.samples[i]);
    }
    ImagePlane native_residual =
        resize_plane_raw(residual, img.width, img.height, ResizeMethod::bicubic);
    RgbImage out = img;
    for (size_t i = 0; i < native_residual.size(); ++i) {
        float d = native_residual.samples[i];
        for (int c = 0; c < 3; ++c) out.samples[i * 3 + c] = clamp01(img.samples[i * 3 + c] + d);
    }
    return out;
}

std::vector<AlignmentHypothesis> Codec::search_set() {
    using Kind = AlignmentHypothesis::Kind;
    std::vector<AlignmentHypothesis> set;
    set.push_back({Kind::identity, 0.0, 1.0});
    set.push_back({Kind::flip_left_right, 0.0, 1.0});
    set.push_back({Kind::flip_up_down, 0.0, 1.0});
    set.push_back({Kind::rotate90, 90.0, 1.0});
    set.push_back({Kind::rotate180, 180.0, 1.0});
    set.push_back({Kind::rotate270, 270.0, 1.0});
    for (int deg = -30; deg <= 30; deg += 2) {
        if (deg == 0) continue;
        set.push_back({Kind::rotate_grid, static_cast<double>(deg), 1.0});
    }
    // The +-2 degree grid points also get a same-canvas variant matching the
    // small-rotation transform.
    set.push_back({Kind::rotate_noexpand, 2.0, 1.0});
    set.push_back({Kind::rotate_noexpand, -2.0, 1.0});
    for (double retention : {0.9, 0.8, 0.7, 0.6}) {
        set.push_back({Kind::crop_rescale, 0.0, retention});
    }
    return set;
}

DecodeResult Codec::decode(const RgbImage& img) const {
    if (img.width < 64 || img.height < 64) {
        raise(ErrorCode::ImageTooSmall, "decoding needs at least 64x64");
    }
    const int wr = config_.working_resolution;
    const RgbImage work =
        (img.width == wr && img.height == wr) ? img : resize(img, wr, wr, ResizeMethod::bicubic);
    const ImagePlane luma = to_luma(work);

    const int nb = config_.blocks_per_side();
    const size_t band_size = config_.band.size();
    const auto& detection = carriers_.seq[0];

    DecodeResult best;
    best.detection_logit = -std::numeric_limits<double>::infinity();
    SlotVector best_slots;

    ImagePlane warped;
    std::vector<uint8_t> pixel_valid;
    SlotVector slots;
    slots.index.reserve(carriers_.length);
    slots.value.reserve(carriers_.length);
    std::vector<double> band_buffer;
    std::vector<int> block_of_slot;
    std::vector<double> block_activity;
    std::vector<double> scratch_activity;
    band_buffer.reserve(carriers_.length);
    block_of_slot.reserve(carriers_.length);
    block_activity.reserve(static_cast<size_t>(nb) * nb);

    for (const auto& hyp_spec : search_set()) {
        Hypothesis hyp;
        switch (hyp_spec.kind) {
            case AlignmentHypothesis::Kind::identity:
                hyp.spec = hyp_spec; hyp.perm_kind = 0; break;
            case AlignmentHypothesis::Kind::flip_left_right:
                hyp.spec = hyp_spec; hyp.perm_kind = 1; break;
            case AlignmentHypothesis::Kind::flip_up_down:
                hyp.spec = hyp_spec; hyp.perm_kind = 2; break;
            case AlignmentHypothesis::Kind::rotate90:
                hyp.spec = hyp_spec; hyp.perm_kind = 3; break;
            case AlignmentHypothesis::Kind::rotate180:
                hyp.spec = hyp_spec; hyp.perm_kind = 4; break;
            case AlignmentHypothesis::Kind::rotate270:
                hyp.spec = hyp_spec; hyp.perm_kind = 5; break;
            default:
                hyp = make_affine(hyp_spec, wr);
                break;
        }

        warp_plane(luma, hyp, warped, pixel_valid);

        slots.index.clear();
        slots.value.clear();
        slots.norm_sq = 0.0;

        // Pass 1: band coefficients and the activity of every valid block.
        band_buffer.clear();
        block_of_slot.clear();
        block_activity.clear();
        double activity_sum = 0.0;
        double block[64];
        for (int by = 0; by < nb; ++by) {
            for (int bx = 0; bx < nb; ++bx) {
                bool valid = true;
                if (hyp.mode == Hypothesis::Mode::affine) {
                    for (int y = 0; y < 8 && valid; ++y) {
                        const uint8_t* row =
                            pixel_valid.data() + static_cast<size_t>(by * 8 + y) * wr + bx * 8;
                        for (int x = 0; x < 8; ++x) {
                            if (!row[x]) { valid = false; break; }
                        }
                    }
                }
                if (!valid) continue;
                for (int y = 0; y < 8; ++y) {
                    const float* row =
                        warped.samples.data() + static_cast<size_t>(by * 8 + y) * wr + bx * 8;
                    for (int x = 0; x < 8; ++x) block[y * 8 + x] = row[x];
                }
                dct_8x8(block);
                double band_energy = 0.0;
                const size_t slot_base = (static_cast<size_t>(by) * nb + bx) * band_size;
                for (size_t j = 0; j < band_size; ++j) {
                    double v = block[config_.band[j].u * 8 + config_.band[j].v];
                    band_energy += v * v;
                    band_buffer.push_back(v);
                    block_of_slot.push_back(static_cast<int>(slot_base + j));
                }
                double activity = std::sqrt(band_energy / band_size);
                if (activity < config_.activity_floor) activity = config_.activity_floor;
                block_activity.push_back(activity);
                activity_sum += activity;
            }
        }
        if (block_activity.empty()) continue;

        // The Wiener floor tracks the upper end of the activity distribution:
        // compression leaves crisp blocks crisp (their quantization noise is
        // what the floor must suppress), while a global low-pass attenuates
        // every block and the floor must fall with them.
        (void)activity_sum;
        scratch_activity.assign(block_activity.begin(), block_activity.end());
        size_t p90 = scratch_activity.size() * 9 / 10;
        if (p90 >= scratch_activity.size()) p90 = scratch_activity.size() - 1;
        std::nth_element(scratch_activity.begin(), scratch_activity.begin() + p90,
                         scratch_activity.end());
        const double top_activity = scratch_activity[p90];
        double noise_floor = config_.decode_noise_floor * std::min(top_activity / 0.05, 1.0);
        if (noise_floor < 0.0015) noise_floor = 0.0015;

        double corr_acc = 0.0;
        for (size_t b = 0; b < block_activity.size(); ++b) {
            const double activity = block_activity[b];
            const double gain = activity /
                                (activity * activity + noise_floor * noise_floor);
            for (size_t j = 0; j < band_size; ++j) {
                size_t k = b * band_size + j;
                int s = block_of_slot[k];
                double v = config_.band[j].weight * band_buffer[k] * gain;
                slots.index.push_back(s);
                slots.value.push_back(v);
                slots.norm_sq += v * v;
                corr_acc += v * detection[s];
            }
        }

        const size_t n = slots.value.size();
        if (n < 64 || slots.norm_sq <= 0.0) continue;
        double corr = corr_acc / (std::sqrt(slots.norm_sq) * std::sqrt(static_cast<double>(n)));
        corr = std::clamp(corr, -(1.0 - 1e-12), 1.0 - 1e-12);
        double z = std::atanh(corr) * std::sqrt(std::max<double>(static_cast<double>(n) - 3.0, 1.0));
        if (z > best.detection_logit) {
            best.detection_logit = z;
            best.correlation = corr;
            best.alignment = hyp_spec;
            best.slots_used = n;
            std::swap(best_slots.index, slots.index);
            std::swap(best_slots.value, slots.value);
            best_slots.norm_sq = slots.norm_sq;
        }
    }

    best.bit_logits.assign(config_.payload_length, 0.0);
    const double denom =
        std::sqrt(best_slots.norm_sq) * std::sqrt(static_cast<double>(best_slots.value.size()));
    if (denom > 0.0) {
        for (int i = 0; i < config_.payload_length; ++i) {
            const auto& carrier = carriers_.seq[i + 1];
            double acc = 0.0;
            for (size_t k = 0; k < best_slots.value.size(); ++k) {
                acc += best_slots.value[k] * carrier[best_slots.index[k]];
            }
            best.bit_logits[i] = acc / denom;
        }
    }
    return best;
}

std::string AlignmentHypothesis::name() const {
    switch (kind) {
        case Kind::identity: return "identity";
        case Kind::flip_left_right: return "flip_left_right";
        case Kind::flip_up_down: return "flip_up_down";
        case Kind::rotate90: return "rotate90";
        case Kind::rotate180: return "rotate180";
        case Kind::rotate270: return "rotate270";
        case Kind::rotate_grid: return "rotate" + format_fixed(angle_deg, 0);
        case Kind::rotate_noexpand: return "small_rotate" + format_fixed(angle_deg, 0);
        case Kind::crop_rescale: return "crop" + format_fixed(retention, 2);
    }
    return "unknown";
}

RgbImage embed(const RgbImage& img, const PayloadCode& code, const SecretKey& key,
               const CodecConfig& config) {
    return Codec(key, config).embed(img, code);
}

DecodeResult decode_logits(const RgbImage& img, const SecretKey& key, const CodecConfig& config) {
    return Codec(key, config).decode(img);
}

} // namespace wm
