#include "wm/payload.hpp"

#include <algorithm>

#include <json.hpp>

#include "wm/error.hpp"
#include "wm/rng.hpp"
#include "wm/util.hpp"

namespace wm {
namespace {

int hamming(const std::vector<int8_t>& a, const std::vector<int8_t>& b) {
    int distance = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) ++distance;
    }
    return distance;
}

} // namespace

PayloadRegistry::PayloadRegistry(int version_bits, int message_bits, int redundancy, int d_min,
                                 uint64_t codeword_seed)
    : version_bits_(version_bits),
      message_bits_(message_bits),
      redundancy_(redundancy),
      d_min_(d_min),
      codeword_seed_(codeword_seed) {
    if (version_bits_ < 0 || message_bits_ < 1 || redundancy_ < 1 || d_min_ < 0) {
        raise(ErrorCode::InvalidConfig, "invalid registry layout");
    }
}

PayloadCode PayloadRegistry::build_code(const std::string& customer_id, uint32_t version,
                                        uint32_t attempt) const {
    if (version_bits_ > 0 && version >= (1u << version_bits_)) {
        raise(ErrorCode::InvalidConfig, "version does not fit the header");
    }
    PayloadCode code;
    code.bits.resize(code_length());
    for (int j = 0; j < version_bits_; ++j) {
        code.bits[j] = ((version >> j) & 1u) ? int8_t{1} : int8_t{-1};
    }
    // Message codeword depends on the id only (the version lives in the
    // header); the attempt counter re-draws codewords that would land within
    // d_min of an already registered one.
    Rng rng(mix_seed(codeword_seed_, fnv1a64(customer_id), attempt));
    std::vector<int8_t> message(message_bits_);
    for (auto& bit : message) bit = rng.coin() ? int8_t{1} : int8_t{-1};
    for (int rep = 0; rep < redundancy_; ++rep) {
        for (int j = 0; j < message_bits_; ++j) {
            code.bits[version_bits_ + rep * message_bits_ + j] = message[j];
        }
    }
    return code;
}

PayloadCode PayloadRegistry::assign_code(const std::string& customer_id, uint32_t version) {
    if (const RegistryEntry* existing = find(customer_id, version)) return existing->code;

    const uint64_t capacity = message_bits_ >= 63 ? UINT64_MAX : (1ULL << message_bits_);
    if (entries_.size() >= capacity) {
        raise(ErrorCode::CapacityExhausted, "registry is at 2^message_bits entries");
    }
    for (uint32_t attempt = 0; attempt < 64; ++attempt) {
        PayloadCode code = build_code(customer_id, version, attempt);
        bool clear = true;
        for (const auto& entry : entries_) {
            int distance = 0;
            for (size_t i = 0; i < code.bits.size(); ++i) {
                if (code.bits[i] != entry.code.bits[i]) ++distance;
            }
            if (distance < d_min_) {
                clear = false;
                break;
            }
        }
        if (clear) {
            entries_.push_back({customer_id, version, code});
            return code;
        }
    }
    raise(ErrorCode::DistanceViolation,
          "no codeword for " + customer_id + " clears d_min against the registry");
}

const RegistryEntry* PayloadRegistry::find(const std::string& customer_id,
                                           uint32_t version) const {
    for (const auto& entry : entries_) {
        if (entry.customer_id == customer_id && entry.version == version) return &entry;
    }
    return nullptr;
}

std::vector<int8_t> PayloadRegistry::vote_reduce(const std::vector<double>& bit_logits) const {
    if (static_cast<int>(bit_logits.size()) != code_length()) {
        raise(ErrorCode::LengthMismatch, "logit vector does not match registry layout");
    }
    std::vector<int8_t> reduced(version_bits_ + message_bits_);
    for (int j = 0; j < version_bits_; ++j) {
        reduced[j] = bit_logits[j] >= 0.0 ? int8_t{1} : int8_t{-1};
    }
    for (int j = 0; j < message_bits_; ++j) {
        int votes = 0;
        double logit_sum = 0.0;
        for (int rep = 0; rep < redundancy_; ++rep) {
            double logit = bit_logits[version_bits_ + rep * message_bits_ + j];
            votes += logit >= 0.0 ? 1 : -1;
            logit_sum += logit;
        }
        int8_t bit;
        if (votes > 0) {
            bit = 1;
        } else if (votes < 0) {
            bit = -1;
        } else {
            bit = logit_sum >= 0.0 ? int8_t{1} : int8_t{-1}; // vote tie: soft combine
        }
        reduced[version_bits_ + j] = bit;
    }
    return reduced;
}

std::vector<int8_t> PayloadRegistry::reduced_bits(const PayloadCode& code) const {
    std::vector<int8_t> reduced(version_bits_ + message_bits_);
    for (int j = 0; j < version_bits_; ++j) reduced[j] = code.bits[j];
    for (int j = 0; j < message_bits_; ++j) reduced[version_bits_ + j] = code.bits[version_bits_ + j];
    return reduced;
}

PayloadRegistry::IdMatch PayloadRegistry::decode_id(const std::vector<double>& bit_logits) const {
    if (entries_.empty()) raise(ErrorCode::EmptyRegistry, "registry has no entries");
    std::vector<int8_t> voted = vote_reduce(bit_logits);

    IdMatch best;
    int best_distance = code_length() + 1;
    for (const auto& entry : entries_) {
        int distance = hamming(voted, reduced_bits(entry.code));
        if (distance < best_distance) {
            best.customer_id = entry.customer_id;
            best.version = entry.version;
            best.distance = distance;
            best.tie = false;
            best_distance = distance;
        } else if (distance == best_distance) {
            best.tie = true;
            if (entry.customer_id < best.customer_id) {
                best.customer_id = entry.customer_id;
                best.version = entry.version;
            }
        }
    }
    return best;
}

std::string PayloadRegistry::to_json_text() const {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["version_bits"] = version_bits_;
    doc["message_bits"] = message_bits_;
    doc["redundancy"] = redundancy_;
    doc["d_min"] = d_min_;
    doc["codeword_seed"] = codeword_seed_;
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& entry : entries_) {
        entries.push_back({{"customer_id", entry.customer_id},
                           {"version", entry.version},
                           {"code", entry.code.to_string()}});
    }
    doc["entries"] = entries;
    return doc.dump(2) + "\n";
}

PayloadRegistry PayloadRegistry::from_json_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::MalformedFile, "registry file is not valid JSON");
    }
    PayloadRegistry registry;
    try {
        registry.version_bits_ = doc.at("version_bits").get<int>();
        registry.message_bits_ = doc.at("message_bits").get<int>();
        registry.redundancy_ = doc.at("redundancy").get<int>();
        registry.d_min_ = doc.at("d_min").get<int>();
        registry.codeword_seed_ = doc.at("codeword_seed").get<uint64_t>();
        for (const auto& item : doc.at("entries")) {
            RegistryEntry entry;
            entry.customer_id = item.at("customer_id").get<std::string>();
            entry.version = item.at("version").get<uint32_t>();
            entry.code = PayloadCode::from_string(item.at("code").get<std::string>());
            if (entry.code.length() != registry.code_length()) {
                raise(ErrorCode::MalformedFile, "entry code length does not match layout");
            }
            registry.entries_.push_back(std::move(entry));
        }
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::MalformedFile, "registry file missing required fields");
    }
    return registry;
}

std::string PayloadRegistry::content_hash() const { return sha256_hex(to_json_text()); }

} // namespace wm
