#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wm/codec.hpp"
#include "wm/metrics.hpp"
#include "wm/payload.hpp"

namespace wm {

/// The three evaluation regimes: everything at a fixed 512 raster, images at
/// their native resolution, or images resized to the codec's preferred
/// resolution before transformation.
enum class ResolutionPolicy { fixed512, native_image, native_model };

const char* resolution_policy_name(ResolutionPolicy policy);

struct BenchConfig {
    std::string dataset_dir;  // directory of PNG/JPEG files, lexicographic order
    int max_images = 200;
    ResolutionPolicy resolution = ResolutionPolicy::fixed512;
    double target_fpr = 0.001;
    uint64_t run_seed = 1;
    // Transforms evaluated as report rows; empty means the full catalog.
    std::vector<std::string> row_transforms;
    bool random_mode = true;
    bool worst_mode = true;
    // Negative decodes per transform used for kappa calibration; 0 picks the
    // smallest count satisfying the 1/target_fpr precondition.
    int calib_negatives_per_transform = 0;
    CodecConfig codec;
    SecretKey key;
    std::optional<PayloadRegistry> registry; // codes assigned cyclically when present
    double decision_alpha = 0.01;
    int threads = 0; // 0 = hardware concurrency, 1 = strictly single-threaded
};

struct BenchRow {
    std::string label;    // transform id, category name, or aggregate label
    std::string category; // empty for aggregate rows
    bool worst = false;
    int images = 0;
    double tpr_lo = 0.0;
    double tpr_hi = 0.0;
    double bit_accuracy = 0.0;
    double code_accuracy = 0.0;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    std::optional<double> abstention_rate;
};

struct BenchReport {
    int schema_version = 1;
    std::string dataset_id;
    std::string key_id;
    uint64_t run_seed = 0;
    double target_fpr = 0.0;
    std::string resolution_policy;
    int images_used = 0;
    int images_filtered = 0;
    int calib_negatives_per_transform = 0;
    double kappa = 0.0;
    KappaBoundary kappa_boundary;
    double decision_alpha = 0.0;
    std::string registry_hash; // empty when no registry
    // Codec configuration echo for reproducibility.
    int working_resolution = 0;
    int payload_length = 0;
    double psnr_floor = 0.0;

    BenchRow identity_row;
    std::vector<BenchRow> transform_rows; // per transform x mode
    std::vector<BenchRow> category_rows;  // six categories x mode
    BenchRow aggregated_random;
    BenchRow aggregated_worst;
};

/// Full pipeline: filter -> embed/passthrough -> transform (same strength on
/// both arms) -> decode -> score, with a single kappa calibrated on
/// worst-case negatives averaged across transforms.
BenchReport run_benchmark(const BenchConfig& config);

/// Same pipeline on an in-memory corpus (tests, acceptance, generated data).
BenchReport run_benchmark_on(const BenchConfig& config, const std::vector<RgbImage>& images,
                             const std::string& dataset_id);

enum class ReportFormat { json, csv, markdown };

std::string render_report(const BenchReport& report, ReportFormat format);

BenchReport parse_report_json(const std::string& text);

} // namespace wm
