#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "helpers.hpp"
#include "wm/corpus.hpp"
#include "wm/error.hpp"
#include "wm/metrics.hpp"
#include "wm/transforms.hpp"

using namespace wm;

TEST_CASE("catalog has exactly the 30 transformations") {
    const auto& all = list_transforms();
    CHECK(all.size() == 30);

    std::set<std::string> ids;
    for (const auto& spec : all) ids.insert(spec.id);
    const std::set<std::string> expected = {
        "all rotations", "brightness", "combined", "combined nocrop", "combined nocrop rotate",
        "combined rotate", "contrast", "crop resize", "denoise", "emoji overlay", "exposure",
        "file format", "flip left-right", "flip up-down", "gaussian blur", "gaussian noise",
        "grayscale", "hue", "identity", "impulse noise", "instagram", "light text overlay",
        "resize", "rotation", "saturation", "sharpness", "shot noise", "small rotation",
        "speckle noise", "zoom out"};
    CHECK(ids == expected);

    CHECK(transform_by_id("identity").category == TransformCategory::Identity);
    for (const auto& spec : all) {
        if (spec.id == "identity") continue;
        CHECK(spec.category != TransformCategory::Identity);
        if (spec.worst_strength) {
            REQUIRE(spec.strength_range.has_value());
            CHECK(*spec.worst_strength >= spec.strength_range->first);
            CHECK(*spec.worst_strength <= spec.strength_range->second);
        }
    }
}

TEST_CASE("the 29 non-identity transforms partition into the six categories") {
    std::map<TransformCategory, int> counts;
    for (const auto& spec : list_transforms()) {
        if (spec.id != "identity") counts[spec.category]++;
    }
    CHECK(counts[TransformCategory::Color] == 7);
    CHECK(counts[TransformCategory::Quality] == 4);
    CHECK(counts[TransformCategory::Noise] == 4);
    CHECK(counts[TransformCategory::Overlay] == 2);
    CHECK(counts[TransformCategory::Spatial] == 8);
    CHECK(counts[TransformCategory::Combination] == 4);
}

TEST_CASE("identity returns its input bit-exactly") {
    RgbImage img = wmtest::noise_image(7, 64, 48);
    RgbImage out = apply(transform_by_id("identity"), StrengthMode::worst, img, 123);
    CHECK(out.samples == img.samples);
}

TEST_CASE("flips are involutions") {
    RgbImage img = wmtest::noise_image(9, 40, 56);
    for (const char* id : {"flip left-right", "flip up-down"}) {
        const auto& spec = transform_by_id(id);
        RgbImage twice = apply(spec, StrengthMode::worst, apply(spec, StrengthMode::worst, img, 1), 2);
        CHECK(twice.samples == img.samples);
    }
}

TEST_CASE("file format transform is a deterministic jpeg re-encode") {
    RgbImage img = synthetic_photo(42, 128, 128);
    const auto& spec = transform_by_id("file format");
    RgbImage a = apply(spec, StrengthMode::worst, img, 5);
    RgbImage b = apply(spec, StrengthMode::worst, img, 5);
    CHECK(a.samples == b.samples);
    double quality = psnr(img, a);
    CHECK(std::isfinite(quality));
    CHECK(quality > 20.0);
    CHECK(quality < 60.0);
}

TEST_CASE("apply is deterministic for seeded noise and overlays") {
    RgbImage img = synthetic_photo(43, 96, 96);
    for (const char* id : {"gaussian noise", "impulse noise", "shot noise", "speckle noise",
                           "emoji overlay", "light text overlay", "combined"}) {
        const auto& spec = transform_by_id(id);
        RgbImage a = apply(spec, StrengthMode::random, img, 919);
        RgbImage b = apply(spec, StrengthMode::random, img, 919);
        CHECK(a.samples == b.samples);
        RgbImage c = apply(spec, StrengthMode::random, img, 920);
        CHECK(a.samples != c.samples);
    }
}

TEST_CASE("sample_strength determinism, uniformity, and NoStrength") {
    const auto& rotation = transform_by_id("rotation");
    CHECK(sample_strength(rotation, 7) == sample_strength(rotation, 7));

    const auto& brightness = transform_by_id("brightness");
    double lo = 1e9, hi = -1e9;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double v = sample_strength(brightness, i);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        CHECK(v >= 0.5);
        CHECK(v <= 1.5);
    }
    CHECK(lo <= 0.5 + 0.01);
    CHECK(hi >= 1.5 - 0.01);

    for (const char* id : {"grayscale", "identity", "flip left-right", "combined"}) {
        CHECK_THROWS_AS((void)sample_strength(transform_by_id(id), 1), Error);
    }

    // Discrete strengths stay on their choice sets.
    const auto& rotations = transform_by_id("all rotations");
    for (int i = 0; i < 50; ++i) {
        double v = sample_strength(rotations, i);
        CHECK((v == 90.0 || v == 180.0 || v == 270.0));
    }
}

TEST_CASE("geometry-changing transforms produce the documented canvas sizes") {
    RgbImage img = synthetic_photo(44, 128, 128);
    RgbImage rotated = apply(transform_by_id("rotation"), StrengthMode::worst, img, 3);
    CHECK(rotated.width > img.width); // 30 degrees expands the canvas
    CHECK(rotated.height > img.height);

    RgbImage small = apply(transform_by_id("small rotation"), StrengthMode::worst, img, 3);
    CHECK(small.width == img.width);

    RgbImage shrunk = apply(transform_by_id("resize"), StrengthMode::worst, img, 3);
    CHECK(shrunk.width == 64);

    RgbImage cropped = apply(transform_by_id("crop resize"), StrengthMode::worst, img, 3);
    CHECK(cropped.width == img.width);

    RgbImage zoomed = apply(transform_by_id("zoom out"), StrengthMode::worst, img, 3);
    CHECK(zoomed.width == img.width);
    // Gray padding in the corners.
    CHECK(zoomed.at(0, 0, 0) == doctest::Approx(0.5));

    RgbImage quarter = apply(transform_by_id("all rotations"), StrengthMode::worst, img, 3);
    CHECK(quarter.width == img.height);
}

TEST_CASE("worst-case strengths preserve semantics: SSIM floor 0.25") {
    for (uint64_t seed : {901ULL, 902ULL, 903ULL}) {
        RgbImage img = synthetic_photo(seed, 256, 256);
        for (const auto& spec : list_transforms()) {
            if (spec.category == TransformCategory::Combination) continue;
            if (spec.id == "identity") continue;
            RgbImage out = apply(spec, StrengthMode::worst, img, seed * 7 + 1);
            if (out.width != img.width || out.height != img.height) continue; // geometry changes
            double score = ssim(img, out);
            INFO(spec.id);
            CHECK(score >= 0.25);
        }
    }
}

TEST_CASE("catalog json export is self-describing") {
    auto doc = nlohmann::json::parse(catalog_json());
    CHECK(doc["schema_version"] == 1);
    CHECK(doc["transforms"].size() == 30);
    bool found_jpeg = false;
    for (const auto& entry : doc["transforms"]) {
        CHECK(entry.contains("id"));
        CHECK(entry.contains("category"));
        CHECK(entry.contains("strength_range"));
        CHECK(entry.contains("worst_strength"));
        if (entry["id"] == "file format") {
            found_jpeg = true;
            CHECK(entry["worst_strength"] == 40.0);
            CHECK(entry["strength_range"][0] == 40.0);
            CHECK(entry["strength_range"][1] == 95.0);
        }
    }
    CHECK(found_jpeg);
}
