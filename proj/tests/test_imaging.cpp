#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "wm/dct.hpp"
#include "wm/error.hpp"
#include "wm/image.hpp"
#include "wm/resize.hpp"
#include "wm/rng.hpp"

using namespace wm;

TEST_CASE("png load maps 8-bit samples to [0,1] by v/255") {
    RgbImage white = wmtest::constant_image(2, 2, 1.0f, 1.0f, 1.0f);
    RgbImage back = load_image(save_png(white));
    for (float v : back.samples) CHECK(v == 1.0f);

    RgbImage px = wmtest::constant_image(2, 2, 51.0f / 255, 102.0f / 255, 204.0f / 255);
    RgbImage round = load_image(save_png(px));
    CHECK(round.at(0, 0, 0) == doctest::Approx(0.2));
    CHECK(round.at(0, 0, 1) == doctest::Approx(0.4));
    CHECK(round.at(0, 0, 2) == doctest::Approx(0.8));
}

TEST_CASE("truncated jpeg raises MalformedFile") {
    RgbImage img = wmtest::noise_image(3, 64, 64);
    auto bytes = save_jpeg(img, 80);
    bytes.resize(bytes.size() / 3);
    CHECK_THROWS_AS((void)load_image(bytes), Error);
    try {
        (void)load_image(bytes);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MalformedFile);
    }
}

TEST_CASE("unsupported format is rejected") {
    std::vector<uint8_t> bytes = {'G', 'I', 'F', '8', '9', 'a', 0, 0};
    try {
        (void)load_image(bytes);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedFormat);
    }
}

TEST_CASE("png save/load round trip is bit exact on 8-bit data") {
    Rng rng(11);
    RgbImage img(37, 23);
    for (auto& v : img.samples) {
        v = static_cast<float>(static_cast<int>(rng.below(256))) / 255.0f;
    }
    RgbImage once = load_image(save_png(img));
    RgbImage twice = load_image(save_png(once));
    CHECK(once.samples == twice.samples);
}

TEST_CASE("resize identity geometry is exact") {
    RgbImage img = wmtest::noise_image(5, 40, 30);
    for (ResizeMethod method : {ResizeMethod::bilinear, ResizeMethod::bicubic}) {
        RgbImage same = resize(img, 40, 30, method);
        double max_diff = 0.0;
        for (size_t i = 0; i < img.samples.size(); ++i) {
            max_diff = std::max(max_diff,
                                std::fabs(double(img.samples[i]) - same.samples[i]));
        }
        CHECK(max_diff <= 1.0 / 510.0);
    }
}

TEST_CASE("resize of a constant image stays constant") {
    RgbImage img = wmtest::constant_image(17, 13, 0.5f, 0.5f, 0.5f);
    for (auto [w, h] : {std::pair{64, 64}, {7, 9}, {33, 5}}) {
        RgbImage out = resize(img, w, h, ResizeMethod::bicubic);
        for (float v : out.samples) CHECK(v == doctest::Approx(0.5).epsilon(1e-6));
    }
}

TEST_CASE("4x4 ramp downsized 2x2 bilinear equals block means") {
    RgbImage img(4, 4);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            float v = static_cast<float>(y * 4 + x) / 15.0f;
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = v;
        }
    }
    RgbImage out = resize(img, 2, 2, ResizeMethod::bilinear);
    // Independent oracle: plain 2x2 block means.
    for (int by = 0; by < 2; ++by) {
        for (int bx = 0; bx < 2; ++bx) {
            double mean = 0.0;
            for (int y = 0; y < 2; ++y) {
                for (int x = 0; x < 2; ++x) mean += img.at(bx * 2 + x, by * 2 + y, 0);
            }
            mean /= 4.0;
            CHECK(out.at(bx, by, 0) == doctest::Approx(mean).epsilon(1e-6));
        }
    }
}

TEST_CASE("resize dimension idempotence with stable samples") {
    RgbImage img = wmtest::noise_image(17, 97, 61);
    RgbImage a = resize(img, 64, 48, ResizeMethod::bicubic);
    RgbImage b = resize(a, 64, 48, ResizeMethod::bicubic);
    REQUIRE(a.width == b.width);
    REQUIRE(a.height == b.height);
    for (size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(std::fabs(a.samples[i] - b.samples[i]) <= 1.0f / 510.0f);
    }
}

TEST_CASE("luma weights and round trip") {
    RgbImage white = wmtest::constant_image(4, 4, 1.0f, 1.0f, 1.0f);
    ImagePlane luma = to_luma(white);
    for (float v : luma.samples) CHECK(v == doctest::Approx(1.0));

    RgbImage green = wmtest::constant_image(4, 4, 0.0f, 1.0f, 0.0f);
    CHECK(to_luma(green).samples[0] == doctest::Approx(0.587));

    RgbImage img = wmtest::noise_image(23, 16, 16);
    RgbImage round = from_luma(to_luma(img), img);
    for (size_t i = 0; i < img.samples.size(); ++i) {
        CHECK(std::fabs(img.samples[i] - round.samples[i]) <= 1.0f / 510.0f);
    }
}

TEST_CASE("dct of constant block concentrates in DC") {
    ImagePlane plane(8, 8, 0.37f);
    BlockDct coef = block_dct(plane);
    CHECK(coef.at(0, 0) == doctest::Approx(8.0 * 0.37).epsilon(1e-9));
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            if (x == 0 && y == 0) continue;
            CHECK(std::fabs(coef.at(x, y)) < 1e-9);
        }
    }
}

TEST_CASE("dct/idct round trip and Parseval on random planes") {
    Rng rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        int w = 8 + static_cast<int>(rng.below(5)) * 8;
        int h = 8 + static_cast<int>(rng.below(5)) * 8;
        ImagePlane plane(w, h);
        for (auto& v : plane.samples) v = static_cast<float>(rng.uniform());

        BlockDct coef = block_dct(plane);
        ImagePlane back = block_idct(coef);
        double max_err = 0.0, energy_pixels = 0.0, energy_coef = 0.0;
        for (size_t i = 0; i < plane.size(); ++i) {
            max_err = std::max(max_err, std::fabs(double(plane.samples[i]) - back.samples[i]));
            energy_pixels += double(plane.samples[i]) * plane.samples[i];
        }
        for (double c : coef.coef) energy_coef += c * c;
        CHECK(max_err < 1e-6);
        CHECK(energy_pixels == doctest::Approx(energy_coef).epsilon(1e-6));
    }
}

TEST_CASE("dct pads non-multiple-of-8 planes by edge replication") {
    ImagePlane plane(13, 9, 0.25f);
    BlockDct coef = block_dct(plane);
    CHECK(coef.width == 16);
    CHECK(coef.height == 16);
    ImagePlane back = block_idct(coef);
    CHECK(back.width == 13);
    CHECK(back.height == 9);
    for (float v : back.samples) CHECK(v == doctest::Approx(0.25).epsilon(1e-6));
}
