#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "helpers.hpp"
#include "wm/bench.hpp"
#include "wm/corpus.hpp"
#include "wm/error.hpp"

using namespace wm;

namespace {

BenchConfig tiny_config() {
    BenchConfig config;
    config.max_images = 3;
    config.target_fpr = 0.01; // 29 transforms x 4 negatives = 116 >= 1/0.01
    config.calib_negatives_per_transform = 4;
    config.run_seed = 77;
    config.key = SecretKey::generate(1234, "bench-test");
    config.row_transforms = {"brightness", "file format", "flip left-right", "crop resize"};
    config.threads = 2;
    return config;
}

const BenchReport& tiny_report() {
    static const BenchReport report = [] {
        return run_benchmark_on(tiny_config(), synthetic_corpus(9090, 3), "unit-corpus");
    }();
    return report;
}

} // namespace

TEST_CASE("bench report carries config echo and a single operating point") {
    const BenchReport& report = tiny_report();
    CHECK(report.images_used == 3);
    CHECK(report.dataset_id == "unit-corpus");
    CHECK(report.key_id == "bench-test");
    CHECK(report.run_seed == 77);
    CHECK(report.target_fpr == 0.01);
    CHECK(report.working_resolution == 512);
    CHECK(report.kappa_boundary.exclusive <= report.kappa_boundary.inclusive);
    // One kappa for the whole report; rows carry no thresholds of their own.
    CHECK(report.kappa > 0.0);
}

TEST_CASE("identity row has a perfect bracket on the tiny corpus") {
    const BenchRow& row = tiny_report().identity_row;
    CHECK(row.tpr_lo == doctest::Approx(1.0));
    CHECK(row.tpr_hi == doctest::Approx(1.0));
    CHECK(row.bit_accuracy == doctest::Approx(1.0));
    CHECK(row.code_accuracy == doctest::Approx(1.0));
    CHECK(row.mean_psnr >= 42.0);
    CHECK(row.mean_ssim >= 0.98);
}

TEST_CASE("rows exist per transform and mode with consistent categories") {
    const BenchReport& report = tiny_report();
    CHECK(report.transform_rows.size() == 8); // 4 transforms x 2 modes
    int worst_rows = 0;
    for (const auto& row : report.transform_rows) {
        if (row.worst) ++worst_rows;
        CHECK(row.images == 3);
        if (row.label == "file format") CHECK(row.category == "Quality");
        if (row.label == "brightness") CHECK(row.category == "Color");
        if (row.label == "crop resize") CHECK(row.category == "Spatial");
    }
    CHECK(worst_rows == 4);
}

TEST_CASE("aggregated rows equal the weighted mean of category rows") {
    const BenchReport& report = tiny_report();
    for (bool worst : {false, true}) {
        const BenchRow& aggregate = worst ? report.aggregated_worst : report.aggregated_random;
        double members = 0.0, tpr_lo = 0.0, tpr_hi = 0.0, bits = 0.0;
        for (const auto& category : report.category_rows) {
            if (category.worst != worst) continue;
            int count = 0;
            for (const auto& row : report.transform_rows) {
                if (row.worst == worst && row.category == category.label) ++count;
            }
            members += count;
            tpr_lo += category.tpr_lo * count;
            tpr_hi += category.tpr_hi * count;
            bits += category.bit_accuracy * count;
        }
        REQUIRE(members > 0);
        CHECK(aggregate.tpr_lo == doctest::Approx(tpr_lo / members).epsilon(1e-9));
        CHECK(aggregate.tpr_hi == doctest::Approx(tpr_hi / members).epsilon(1e-9));
        CHECK(aggregate.bit_accuracy == doctest::Approx(bits / members).epsilon(1e-9));
    }
}

TEST_CASE("json rendering is canonical and round-trips") {
    const BenchReport& report = tiny_report();
    std::string text = render_report(report, ReportFormat::json);
    BenchReport parsed = parse_report_json(text);
    CHECK(render_report(parsed, ReportFormat::json) == text);
}

TEST_CASE("csv row count matches transform, category, and aggregate rows") {
    const BenchReport& report = tiny_report();
    std::string csv = render_report(report, ReportFormat::csv);
    size_t lines = std::count(csv.begin(), csv.end(), '\n');
    // header + identity + transform rows + category rows + 2 aggregates
    CHECK(lines == 1 + 1 + report.transform_rows.size() + report.category_rows.size() + 2);
}

TEST_CASE("markdown mirrors the table shape and names the calibration target") {
    const BenchReport& report = tiny_report();
    std::string md = render_report(report, ReportFormat::markdown);
    CHECK(md.find("1.00% FPR") != std::string::npos); // caption carries the target
    CHECK(md.find("| Identity (excl. resizing) |") != std::string::npos);
    CHECK(md.find("| Aggregated |") != std::string::npos);
    CHECK(md.find("| Aggregated Worst |") != std::string::npos);
}

TEST_CASE("empty datasets and starved negatives raise") {
    BenchConfig config = tiny_config();
    CHECK_THROWS_AS((void)run_benchmark_on(config, {}, "x"), Error);

    BenchConfig starved = tiny_config();
    starved.target_fpr = 0.0001; // needs 10000 negatives
    starved.calib_negatives_per_transform = 2;
    CHECK_THROWS_AS((void)run_benchmark_on(starved, synthetic_corpus(1, 2), "x"), Error);
}
