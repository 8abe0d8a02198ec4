#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wm/image.hpp"

namespace wm {

enum class TransformCategory { Color, Combination, Noise, Overlay, Quality, Spatial, Identity };

const char* category_name(TransformCategory category);

/// One of the 30 benchmark transformations.
struct TransformSpec {
    std::string id;
    TransformCategory category = TransformCategory::Identity;
    // Strength in transform-specific units; absent for parameter-free
    // transforms and for the combination transforms (their constituents carry
    // the parameters).
    std::optional<std::pair<double, double>> strength_range;
    std::optional<double> worst_strength;
    std::vector<double> choices; // non-empty for discrete-strength transforms
    std::string units;
};

enum class StrengthMode { random, worst };

/// The full catalog: exactly 30 entries, identity included.
const std::vector<TransformSpec>& list_transforms();

const TransformSpec& transform_by_id(const std::string& id);

/// Uniform draw from the spec's strength range (or choice set), reproducible
/// per seed. Raises NoStrength for parameter-free transforms.
double sample_strength(const TransformSpec& spec, uint64_t rng_seed);

/// Applies the transformation. Deterministic in (spec, mode, img, rng_seed);
/// identity returns its input bit-exactly.
RgbImage apply(const TransformSpec& spec, StrengthMode mode, const RgbImage& img,
               uint64_t rng_seed);

/// Self-describing catalog export (ids, categories, ranges, worst values).
std::string catalog_json();

} // namespace wm
