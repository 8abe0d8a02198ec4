#include "wm/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <thread>

#include <json.hpp>

#include "wm/decision.hpp"
#include "wm/error.hpp"
#include "wm/resize.hpp"
#include "wm/rng.hpp"
#include "wm/transforms.hpp"
#include "wm/util.hpp"

namespace wm {
namespace {

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    if (threads <= 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads <= 0) threads = 2;
    }
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
        });
    }
    for (auto& worker : pool) worker.join();
}

uint64_t cell_seed(uint64_t run_seed, int image_index, const std::string& transform_id) {
    return mix_seed(run_seed, fnv1a64(transform_id), static_cast<uint64_t>(image_index));
}

std::vector<std::string> catalog_ids(bool include_identity) {
    std::vector<std::string> ids;
    for (const auto& spec : list_transforms()) {
        if (!include_identity && spec.id == "identity") continue;
        ids.push_back(spec.id);
    }
    return ids;
}

struct CellMetrics {
    double score = 0.0;
    double bit_acc = 0.0;
    int code_acc = 0;
    int abstained = -1; // -1 = decision unavailable
};

nlohmann::json row_json(const BenchRow& row) {
    nlohmann::json doc;
    doc["label"] = row.label;
    doc["category"] = row.category;
    doc["worst"] = row.worst;
    doc["images"] = row.images;
    doc["tpr_lo"] = row.tpr_lo;
    doc["tpr_hi"] = row.tpr_hi;
    doc["bit_accuracy"] = row.bit_accuracy;
    doc["code_accuracy"] = row.code_accuracy;
    doc["mean_psnr"] = row.mean_psnr;
    doc["mean_ssim"] = row.mean_ssim;
    if (row.abstention_rate) {
        doc["abstention_rate"] = *row.abstention_rate;
    } else {
        doc["abstention_rate"] = nullptr;
    }
    return doc;
}

BenchRow row_from_json(const nlohmann::json& doc) {
    BenchRow row;
    row.label = doc.at("label").get<std::string>();
    row.category = doc.at("category").get<std::string>();
    row.worst = doc.at("worst").get<bool>();
    row.images = doc.at("images").get<int>();
    row.tpr_lo = doc.at("tpr_lo").get<double>();
    row.tpr_hi = doc.at("tpr_hi").get<double>();
    row.bit_accuracy = doc.at("bit_accuracy").get<double>();
    row.code_accuracy = doc.at("code_accuracy").get<double>();
    row.mean_psnr = doc.at("mean_psnr").get<double>();
    row.mean_ssim = doc.at("mean_ssim").get<double>();
    if (!doc.at("abstention_rate").is_null()) {
        row.abstention_rate = doc.at("abstention_rate").get<double>();
    }
    return row;
}

std::string bracket_text(const BenchRow& row) {
    auto pct = [](double v) { return format_fixed(v * 100.0, 2) + "%"; };
    if (row.tpr_lo == row.tpr_hi) return pct(row.tpr_lo);
    return "[" + pct(row.tpr_lo) + ", " + pct(row.tpr_hi) + "]";
}

std::string row_cells(const BenchRow& row) {
    std::string abstain =
        row.abstention_rate ? format_fixed(*row.abstention_rate * 100.0, 2) + "%" : "-";
    return bracket_text(row) + " | " + format_fixed(row.bit_accuracy * 100.0, 2) + "% | " +
           format_fixed(row.code_accuracy * 100.0, 2) + "% | " +
           format_fixed(row.mean_psnr, 2) + " | " + format_fixed(row.mean_ssim, 4) + " | " +
           abstain;
}

} // namespace

const char* resolution_policy_name(ResolutionPolicy policy) {
    switch (policy) {
        case ResolutionPolicy::fixed512: return "fixed512";
        case ResolutionPolicy::native_image: return "native_image";
        case ResolutionPolicy::native_model: return "native_model";
    }
    return "unknown";
}

BenchReport run_benchmark(const BenchConfig& config) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(config.dataset_dir)) {
        raise(ErrorCode::DatasetEmpty, "dataset directory not readable: " + config.dataset_dir);
    }
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(config.dataset_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) raise(ErrorCode::DatasetEmpty, "no PNG/JPEG files in dataset");
    if (static_cast<int>(files.size()) > config.max_images) {
        files.resize(config.max_images);
    }

    std::vector<RgbImage> images;
    std::string manifest;
    images.reserve(files.size());
    for (const auto& path : files) {
        images.push_back(load_image_file(path));
        manifest += fs::path(path).filename().string() + "\n";
    }
    return run_benchmark_on(config, images, sha256_hex(manifest).substr(0, 16));
}

BenchReport run_benchmark_on(const BenchConfig& config, const std::vector<RgbImage>& dataset,
                             const std::string& dataset_id) {
    if (dataset.empty()) raise(ErrorCode::DatasetEmpty, "empty dataset");
    config.codec.validate();
    const Codec codec(config.key, config.codec);
    const int wr = config.codec.working_resolution;

    // Resolution regime.
    std::vector<RgbImage> images(dataset.size());
    {
        int target = config.resolution == ResolutionPolicy::fixed512 ? 512 : wr;
        bool keep_native = config.resolution == ResolutionPolicy::native_image;
        parallel_for(static_cast<int>(dataset.size()), config.threads, [&](int i) {
            images[i] = keep_native ? dataset[i]
                                    : resize(dataset[i], target, target, ResizeMethod::bicubic);
        });
    }

    // Corner-case filter; the usable set keeps original dataset indices.
    std::vector<int> usable;
    for (int i = 0; i < static_cast<int>(images.size()); ++i) {
        if (codec.watermarkable(images[i])) usable.push_back(i);
    }
    if (usable.empty()) raise(ErrorCode::DatasetEmpty, "every image was filtered out");
    const int n = static_cast<int>(usable.size());

    // Payload codes: cyclic registry assignment, else keyed random codes.
    std::vector<PayloadCode> codes(n);
    for (int k = 0; k < n; ++k) {
        if (config.registry && !config.registry->entries().empty()) {
            const auto& entries = config.registry->entries();
            codes[k] = entries[k % entries.size()].code;
        } else {
            codes[k] = PayloadCode::random(mix_seed(config.run_seed, 0xC0DE, usable[k]),
                                           config.codec.payload_length);
        }
    }

    // Embeds plus working-resolution quality metrics.
    std::vector<RgbImage> marked(n);
    std::vector<double> embed_psnr(n), embed_ssim(n);
    parallel_for(n, config.threads, [&](int k) {
        const RgbImage& original = images[usable[k]];
        marked[k] = codec.embed(original, codes[k]);
        if (original.width == wr && original.height == wr) {
            embed_psnr[k] = psnr(original, marked[k]);
            embed_ssim[k] = ssim(original, marked[k]);
        } else {
            RgbImage a = resize(original, wr, wr, ResizeMethod::bicubic);
            RgbImage b = resize(marked[k], wr, wr, ResizeMethod::bicubic);
            embed_psnr[k] = psnr(a, b);
            embed_ssim[k] = ssim(a, b);
        }
    });
    double mean_psnr = 0.0, mean_ssim = 0.0;
    for (int k = 0; k < n; ++k) {
        mean_psnr += std::isinf(embed_psnr[k]) ? 99.0 : embed_psnr[k];
        mean_ssim += embed_ssim[k];
    }
    mean_psnr /= n;
    mean_ssim /= n;

    // Identity decodes double as the watermarked conformal calibration.
    std::vector<DecodeResult> identity_decodes(n);
    parallel_for(n, config.threads,
                 [&](int k) { identity_decodes[k] = codec.decode(marked[k]); });

    // Worst-case negative pool, averaged across the 29 non-identity
    // transforms; positives and negatives share per-(image, transform) seeds.
    const auto calib_ids = catalog_ids(/*include_identity=*/false);
    int per_transform = config.calib_negatives_per_transform;
    if (per_transform <= 0) {
        per_transform =
            config.target_fpr > 0.0
                ? static_cast<int>(std::ceil(1.0 / (config.target_fpr *
                                                    static_cast<double>(calib_ids.size()))))
                : 1;
        per_transform = std::max(per_transform, 1);
    }

    std::vector<std::vector<double>> neg_scores(calib_ids.size());
    {
        const int cells = static_cast<int>(calib_ids.size()) * per_transform;
        std::vector<double> flat(cells);
        parallel_for(cells, config.threads, [&](int cell) {
            const int t = cell / per_transform;
            const int k = cell % per_transform;
            const int image_index = usable[k % n];
            const int repeat = k / n; // images may cycle; repeats draw new strengths
            const auto& spec = transform_by_id(calib_ids[t]);
            uint64_t seed = cell_seed(config.run_seed, image_index, spec.id);
            if (repeat > 0) seed = mix_seed(seed, static_cast<uint64_t>(repeat));
            RgbImage distorted = apply(spec, StrengthMode::worst, images[image_index], seed);
            flat[cell] = codec.decode(distorted).detection_logit;
        });
        for (int t = 0; t < static_cast<int>(calib_ids.size()); ++t) {
            neg_scores[t].assign(flat.begin() + t * per_transform,
                                 flat.begin() + (t + 1) * per_transform);
        }
    }
    const OperatingPoint kappa = calibrate_kappa(neg_scores, config.target_fpr);
    const KappaBoundary boundary = calibrate_kappa_boundary(neg_scores, config.target_fpr);

    // In-run conformal calibration for the abstention column (resubstitution;
    // provenance is recorded in the report schema).
    CalibrationSet conformal;
    for (const auto& set : neg_scores) {
        conformal.scores0.insert(conformal.scores0.end(), set.begin(), set.end());
    }
    for (const auto& d : identity_decodes) conformal.scores1.push_back(d.detection_logit);
    conformal.normalize();
    const bool decisions_available =
        static_cast<double>(conformal.scores0.size() + 1) >= 1.0 / config.decision_alpha &&
        static_cast<double>(conformal.scores1.size() + 1) >= 1.0 / config.decision_alpha;

    auto make_row = [&](const std::string& label, const std::string& category, bool worst,
                        const std::vector<CellMetrics>& cells) {
        BenchRow row;
        row.label = label;
        row.category = category;
        row.worst = worst;
        row.images = static_cast<int>(cells.size());
        row.mean_psnr = mean_psnr;
        row.mean_ssim = mean_ssim;
        std::vector<double> scores;
        scores.reserve(cells.size());
        double bits = 0.0, codes_ok = 0.0;
        int abstained = 0, decided = 0;
        for (const auto& cell : cells) {
            scores.push_back(cell.score);
            bits += cell.bit_acc;
            codes_ok += cell.code_acc;
            if (cell.abstained >= 0) {
                ++decided;
                abstained += cell.abstained;
            }
        }
        size_t above_excl = 0, above_incl = 0;
        for (double s : scores) {
            if (s > boundary.exclusive) ++above_excl;
            if (s >= boundary.inclusive) ++above_incl;
        }
        double tpr_excl = static_cast<double>(above_excl) / scores.size();
        double tpr_incl = static_cast<double>(above_incl) / scores.size();
        row.tpr_lo = std::min(tpr_excl, tpr_incl);
        row.tpr_hi = std::max(tpr_excl, tpr_incl);
        row.bit_accuracy = bits / cells.size();
        row.code_accuracy = codes_ok / cells.size();
        if (decided > 0) row.abstention_rate = static_cast<double>(abstained) / decided;
        return row;
    };

    auto evaluate_cells = [&](const TransformSpec& spec, StrengthMode mode) {
        std::vector<CellMetrics> cells(n);
        parallel_for(n, config.threads, [&](int k) {
            const int image_index = usable[k];
            const uint64_t seed = cell_seed(config.run_seed, image_index, spec.id);
            DecodeResult decoded;
            if (spec.id == "identity") {
                decoded = identity_decodes[k];
            } else {
                RgbImage distorted = apply(spec, mode, marked[k], seed);
                decoded = codec.decode(distorted);
            }
            CellMetrics& cell = cells[k];
            cell.score = decoded.detection_logit;
            cell.bit_acc = bit_accuracy(decoded.bit_logits, codes[k]);
            cell.code_acc = code_accuracy(decoded.bit_logits, codes[k]);
            if (decisions_available) {
                cell.abstained =
                    decide(decoded.detection_logit, conformal, config.decision_alpha).verdict ==
                            Verdict::abstain
                        ? 1
                        : 0;
            }
        });
        return cells;
    };

    BenchReport report;
    report.dataset_id = dataset_id;
    report.key_id = config.key.key_id;
    report.run_seed = config.run_seed;
    report.target_fpr = config.target_fpr;
    report.resolution_policy = resolution_policy_name(config.resolution);
    report.images_used = n;
    report.images_filtered = static_cast<int>(images.size()) - n;
    report.calib_negatives_per_transform = per_transform;
    report.kappa = kappa.kappa;
    report.kappa_boundary = boundary;
    report.decision_alpha = config.decision_alpha;
    report.working_resolution = wr;
    report.payload_length = config.codec.payload_length;
    report.psnr_floor = config.codec.psnr_floor;
    if (config.registry) report.registry_hash = config.registry->content_hash();

    // Identity row from the shared identity decodes.
    {
        std::vector<CellMetrics> cells(n);
        for (int k = 0; k < n; ++k) {
            cells[k].score = identity_decodes[k].detection_logit;
            cells[k].bit_acc = bit_accuracy(identity_decodes[k].bit_logits, codes[k]);
            cells[k].code_acc = code_accuracy(identity_decodes[k].bit_logits, codes[k]);
            if (decisions_available) {
                cells[k].abstained =
                    decide(cells[k].score, conformal, config.decision_alpha).verdict ==
                            Verdict::abstain
                        ? 1
                        : 0;
            }
        }
        report.identity_row = make_row("identity", "Identity", false, cells);
    }

    std::vector<std::string> row_ids =
        config.row_transforms.empty() ? catalog_ids(false) : config.row_transforms;
    row_ids.erase(std::remove(row_ids.begin(), row_ids.end(), std::string("identity")),
                  row_ids.end());

    std::vector<StrengthMode> modes;
    if (config.random_mode) modes.push_back(StrengthMode::random);
    if (config.worst_mode) modes.push_back(StrengthMode::worst);

    for (StrengthMode mode : modes) {
        for (const auto& id : row_ids) {
            const auto& spec = transform_by_id(id);
            auto cells = evaluate_cells(spec, mode);
            report.transform_rows.push_back(make_row(spec.id, category_name(spec.category),
                                                     mode == StrengthMode::worst, cells));
        }
    }

    // Category rows: image-weighted means of member-transform rows (equal
    // weights here since every row sees the same image count).
    const char* categories[6] = {"Color", "Combination", "Noise", "Overlay", "Quality", "Spatial"};
    for (StrengthMode mode : modes) {
        const bool worst = mode == StrengthMode::worst;
        BenchRow aggregate;
        aggregate.label = worst ? "Aggregated Worst" : "Aggregated";
        aggregate.worst = worst;
        int aggregate_members = 0;
        for (const char* category : categories) {
            BenchRow row;
            row.label = category;
            row.category = category;
            row.worst = worst;
            int members = 0;
            double abstain_acc = 0.0;
            int abstain_members = 0;
            for (const auto& tr : report.transform_rows) {
                if (tr.worst != worst || tr.category != category) continue;
                ++members;
                row.images += tr.images;
                row.tpr_lo += tr.tpr_lo;
                row.tpr_hi += tr.tpr_hi;
                row.bit_accuracy += tr.bit_accuracy;
                row.code_accuracy += tr.code_accuracy;
                row.mean_psnr = tr.mean_psnr;
                row.mean_ssim = tr.mean_ssim;
                if (tr.abstention_rate) {
                    abstain_acc += *tr.abstention_rate;
                    ++abstain_members;
                }
            }
            if (members == 0) continue;
            row.tpr_lo /= members;
            row.tpr_hi /= members;
            row.bit_accuracy /= members;
            row.code_accuracy /= members;
            if (abstain_members == members && members > 0) {
                row.abstention_rate = abstain_acc / members;
            }
            report.category_rows.push_back(row);

            aggregate.images += row.images;
            aggregate.tpr_lo += row.tpr_lo * members;
            aggregate.tpr_hi += row.tpr_hi * members;
            aggregate.bit_accuracy += row.bit_accuracy * members;
            aggregate.code_accuracy += row.code_accuracy * members;
            aggregate.mean_psnr = row.mean_psnr;
            aggregate.mean_ssim = row.mean_ssim;
            if (row.abstention_rate) {
                if (!aggregate.abstention_rate) aggregate.abstention_rate = 0.0;
                *aggregate.abstention_rate += *row.abstention_rate * members;
            }
            aggregate_members += members;
        }
        if (aggregate_members > 0) {
            aggregate.tpr_lo /= aggregate_members;
            aggregate.tpr_hi /= aggregate_members;
            aggregate.bit_accuracy /= aggregate_members;
            aggregate.code_accuracy /= aggregate_members;
            if (aggregate.abstention_rate) *aggregate.abstention_rate /= aggregate_members;
        }
        if (worst) {
            report.aggregated_worst = aggregate;
        } else {
            report.aggregated_random = aggregate;
        }
    }
    return report;
}

std::string render_report(const BenchReport& report, ReportFormat format) {
    if (format == ReportFormat::json) {
        nlohmann::json doc;
        doc["schema_version"] = report.schema_version;
        doc["dataset_id"] = report.dataset_id;
        doc["key_id"] = report.key_id;
        doc["run_seed"] = report.run_seed;
        doc["target_fpr"] = report.target_fpr;
        doc["resolution_policy"] = report.resolution_policy;
        doc["images_used"] = report.images_used;
        doc["images_filtered"] = report.images_filtered;
        doc["calib_negatives_per_transform"] = report.calib_negatives_per_transform;
        doc["kappa"] = report.kappa;
        doc["kappa_exclusive"] = report.kappa_boundary.exclusive;
        doc["kappa_inclusive"] = report.kappa_boundary.inclusive;
        doc["decision_alpha"] = report.decision_alpha;
        doc["registry_hash"] = report.registry_hash;
        doc["codec"] = {{"working_resolution", report.working_resolution},
                        {"payload_length", report.payload_length},
                        {"psnr_floor", report.psnr_floor}};
        doc["identity_row"] = row_json(report.identity_row);
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : report.transform_rows) rows.push_back(row_json(row));
        doc["transform_rows"] = rows;
        nlohmann::json cats = nlohmann::json::array();
        for (const auto& row : report.category_rows) cats.push_back(row_json(row));
        doc["category_rows"] = cats;
        doc["aggregated_random"] = row_json(report.aggregated_random);
        doc["aggregated_worst"] = row_json(report.aggregated_worst);
        return doc.dump(2) + "\n";
    }

    if (format == ReportFormat::csv) {
        std::string out =
            "label,category,mode,images,tpr_lo,tpr_hi,bit_accuracy,code_accuracy,mean_psnr,"
            "mean_ssim,abstention_rate\n";
        auto line = [&](const BenchRow& row) {
            out += row.label + "," + row.category + "," + (row.worst ? "worst" : "random") + "," +
                   std::to_string(row.images) + "," + format_fixed(row.tpr_lo, 6) + "," +
                   format_fixed(row.tpr_hi, 6) + "," + format_fixed(row.bit_accuracy, 6) + "," +
                   format_fixed(row.code_accuracy, 6) + "," + format_fixed(row.mean_psnr, 3) + "," +
                   format_fixed(row.mean_ssim, 5) + "," +
                   (row.abstention_rate ? format_fixed(*row.abstention_rate, 6) : "") + "\n";
        };
        line(report.identity_row);
        for (const auto& row : report.transform_rows) line(row);
        for (const auto& row : report.category_rows) line(row);
        line(report.aggregated_random);
        line(report.aggregated_worst);
        return out;
    }

    // Markdown: the Table-1 shape — Identity, Aggregated, six categories,
    // then the worst-mode block, with bracketed TPR on ties.
    std::string out;
    out += "TPR at " + format_fixed(report.target_fpr * 100.0, 2) +
           "% FPR, threshold calibrated on worst-case transformations in average "
           "(kappa = " +
           format_fixed(report.kappa, 4) + ", n = " + std::to_string(report.images_used) +
           ").\n\n";
    out += "| Row | TPR | Bit accuracy | Code accuracy | PSNR | SSIM | Abstention |\n";
    out += "| --- | --- | --- | --- | --- | --- | --- |\n";
    out += "| Identity (excl. resizing) | " + row_cells(report.identity_row) + " |\n";

    auto category_row = [&](const std::string& name, bool worst) -> const BenchRow* {
        for (const auto& row : report.category_rows) {
            if (row.worst == worst && row.label == name) return &row;
        }
        return nullptr;
    };
    const char* categories[6] = {"Color", "Combination", "Noise", "Overlay", "Quality", "Spatial"};
    out += "| Aggregated | " + row_cells(report.aggregated_random) + " |\n";
    for (const char* name : categories) {
        if (const BenchRow* row = category_row(name, false)) {
            out += "| " + std::string(name) + " | " + row_cells(*row) + " |\n";
        }
    }
    out += "| Aggregated Worst | " + row_cells(report.aggregated_worst) + " |\n";
    for (const char* name : categories) {
        if (const BenchRow* row = category_row(name, true)) {
            out += "| " + std::string(name) + " Worst | " + row_cells(*row) + " |\n";
        }
    }
    return out;
}

BenchReport parse_report_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::MalformedFile, "report is not valid JSON");
    }
    BenchReport report;
    report.schema_version = doc.at("schema_version").get<int>();
    report.dataset_id = doc.at("dataset_id").get<std::string>();
    report.key_id = doc.at("key_id").get<std::string>();
    report.run_seed = doc.at("run_seed").get<uint64_t>();
    report.target_fpr = doc.at("target_fpr").get<double>();
    report.resolution_policy = doc.at("resolution_policy").get<std::string>();
    report.images_used = doc.at("images_used").get<int>();
    report.images_filtered = doc.at("images_filtered").get<int>();
    report.calib_negatives_per_transform = doc.at("calib_negatives_per_transform").get<int>();
    report.kappa = doc.at("kappa").get<double>();
    report.kappa_boundary.exclusive = doc.at("kappa_exclusive").get<double>();
    report.kappa_boundary.inclusive = doc.at("kappa_inclusive").get<double>();
    report.decision_alpha = doc.at("decision_alpha").get<double>();
    report.registry_hash = doc.at("registry_hash").get<std::string>();
    report.working_resolution = doc.at("codec").at("working_resolution").get<int>();
    report.payload_length = doc.at("codec").at("payload_length").get<int>();
    report.psnr_floor = doc.at("codec").at("psnr_floor").get<double>();
    report.identity_row = row_from_json(doc.at("identity_row"));
    for (const auto& item : doc.at("transform_rows")) {
        report.transform_rows.push_back(row_from_json(item));
    }
    for (const auto& item : doc.at("category_rows")) {
        report.category_rows.push_back(row_from_json(item));
    }
    report.aggregated_random = row_from_json(doc.at("aggregated_random"));
    report.aggregated_worst = row_from_json(doc.at("aggregated_worst"));
    return report;
}

} // namespace wm
