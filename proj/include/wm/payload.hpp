#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wm/codec.hpp"

namespace wm {

struct RegistryEntry {
    std::string customer_id;
    uint32_t version = 1;
    PayloadCode code;
};

/// Customer/version to payload mapping. Codes are laid out as
/// [version header | r block-interleaved repetitions of a keyed pseudo-random
/// message codeword]; insertions keep every pairwise Hamming distance >= d_min.
class PayloadRegistry {
public:
    PayloadRegistry() = default;
    PayloadRegistry(int version_bits, int message_bits, int redundancy, int d_min,
                    uint64_t codeword_seed);

    int version_bits() const { return version_bits_; }
    int message_bits() const { return message_bits_; }
    int redundancy() const { return redundancy_; }
    int d_min() const { return d_min_; }
    int code_length() const { return version_bits_ + redundancy_ * message_bits_; }
    const std::vector<RegistryEntry>& entries() const { return entries_; }

    /// Deterministic in (customer_id, version); registers the entry on first
    /// use. Raises CapacityExhausted / DistanceViolation.
    PayloadCode assign_code(const std::string& customer_id, uint32_t version);

    /// Code an id/version pair draws at a given re-draw attempt, without
    /// registering it (attempt 0 unless an earlier entry forced a re-draw).
    PayloadCode build_code(const std::string& customer_id, uint32_t version,
                           uint32_t attempt = 0) const;

    struct IdMatch {
        std::string customer_id;
        uint32_t version = 0;
        int distance = 0; // Hamming distance in the repetition-voted space
        bool tie = false;
    };

    /// Nearest registry entry to sign(logits) after majority-voting the r
    /// repetitions (vote ties resolve by the summed logit, sign(0) = +1).
    IdMatch decode_id(const std::vector<double>& bit_logits) const;

    const RegistryEntry* find(const std::string& customer_id, uint32_t version) const;

    std::string to_json_text() const;
    static PayloadRegistry from_json_text(const std::string& text);
    std::string content_hash() const;

private:
    std::vector<int8_t> vote_reduce(const std::vector<double>& bit_logits) const;
    std::vector<int8_t> reduced_bits(const PayloadCode& code) const;

    int version_bits_ = 4;
    int message_bits_ = 30;
    int redundancy_ = 2;
    int d_min_ = 16;
    uint64_t codeword_seed_ = 0x707964ULL;
    std::vector<RegistryEntry> entries_;
};

} // namespace wm
