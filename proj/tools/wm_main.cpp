#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <mutex>
#include <unordered_map>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "wm/bench.hpp"
#include "wm/codec.hpp"
#include "wm/corpus.hpp"
#include "wm/decision.hpp"
#include "wm/error.hpp"
#include "wm/metrics.hpp"
#include "wm/payload.hpp"
#include "wm/resize.hpp"
#include "wm/rng.hpp"
#include "wm/transforms.hpp"
#include "wm/util.hpp"
#include "wm/verify.hpp"

namespace {

constexpr const char* kVersion = "wmkit 1.0.0";

std::string env_or(const char* name, const std::string& fallback) {
    const char* value = std::getenv(name);
    return value ? std::string(value) : fallback;
}

wm::SecretKey load_key(const std::string& path) {
    return wm::SecretKey::from_json_text(wm::read_text_file(path));
}

std::vector<std::string> dataset_files(const std::string& dir, int max_images) {
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (max_images > 0 && static_cast<int>(files.size()) > max_images) files.resize(max_images);
    return files;
}

// ---- calibrate ---------------------------------------------------------------

int run_calibrate(const std::string& dataset, const std::string& key_path,
                  const std::string& out_path, int max_images, const std::string& policy,
                  uint64_t seed) {
    wm::SecretKey key = load_key(key_path);
    wm::CodecConfig config;
    wm::Codec codec(key, config);

    auto files = dataset_files(dataset, max_images);
    if (files.empty()) {
        std::cerr << "calibrate: no images in " << dataset << "\n";
        return 1;
    }

    std::vector<std::string> worst_ids;
    for (const auto& spec : wm::list_transforms()) {
        if (spec.id != "identity") worst_ids.push_back(spec.id);
    }

    wm::CalibrationSet calib;
    calib.provenance_dataset = dataset;
    calib.provenance_transform_policy = policy;
    std::string manifest;

    int used = 0;
    for (size_t i = 0; i < files.size(); ++i) {
        wm::RgbImage img = wm::load_image_file(files[i]);
        if (!codec.watermarkable(img)) continue;
        wm::PayloadCode code =
            wm::PayloadCode::random(wm::mix_seed(seed, 0xCA11B, i), config.payload_length);
        wm::RgbImage marked = codec.embed(img, code);

        wm::RgbImage neg_arm = img;
        wm::RgbImage pos_arm = marked;
        if (policy == "mixed") {
            const auto& spec = wm::transform_by_id(worst_ids[i % worst_ids.size()]);
            uint64_t cell = wm::mix_seed(seed, wm::fnv1a64(spec.id), i);
            neg_arm = wm::apply(spec, wm::StrengthMode::worst, img, cell);
            pos_arm = wm::apply(spec, wm::StrengthMode::worst, marked, cell);
        }
        calib.scores0.push_back(codec.decode(neg_arm).detection_logit);
        wm::DecodeResult pos = codec.decode(pos_arm);
        calib.scores1.push_back(pos.detection_logit);
        for (int b = 0; b < config.payload_length; ++b) {
            calib.per_bit_pooled.push_back(code.bits[b] * pos.bit_logits[b]);
        }
        manifest += std::filesystem::path(files[i]).filename().string() + "\n";
        ++used;
    }
    calib.normalize();
    wm::write_text_file(out_path, calib.to_json_text());
    std::cout << "calibration written: " << out_path << " (n=" << used
              << ", hash=" << calib.content_hash().substr(0, 16) << ")\n";
    return 0;
}

// ---- serve -------------------------------------------------------------------

struct RateLimiter {
    double qps = 5.0;
    struct Bucket {
        double tokens;
        std::chrono::steady_clock::time_point last;
    };
    std::mutex mutex;
    std::unordered_map<std::string, Bucket> buckets;

    bool allow(const std::string& client) {
        auto now = std::chrono::steady_clock::now();
        std::lock_guard<std::mutex> lock(mutex);
        auto [it, fresh] = buckets.try_emplace(client, Bucket{qps, now});
        Bucket& bucket = it->second;
        if (!fresh) {
            double elapsed = std::chrono::duration<double>(now - bucket.last).count();
            bucket.tokens = std::min(qps, bucket.tokens + elapsed * qps);
            bucket.last = now;
        }
        if (bucket.tokens >= 1.0) {
            bucket.tokens -= 1.0;
            return true;
        }
        return false;
    }
};

std::atomic<bool> g_reload_requested{false};

void handle_sighup(int) { g_reload_requested.store(true); }

int run_serve(int port, const std::string& key_path, const std::string& calib_path,
              const std::string& registry_path, double qps, double alpha,
              const std::string& method, bool redact, int max_body_mb) {
    auto codec = std::make_shared<const wm::Codec>(load_key(key_path), wm::CodecConfig{});
    auto calibration = std::make_shared<const wm::CalibrationSet>(
        wm::CalibrationSet::from_json_text(wm::read_text_file(calib_path)));
    std::shared_ptr<const wm::PayloadRegistry> registry;
    if (!registry_path.empty()) {
        registry = std::make_shared<const wm::PayloadRegistry>(
            wm::PayloadRegistry::from_json_text(wm::read_text_file(registry_path)));
    }

    // Calibration snapshots swap atomically; verifications in flight keep the
    // snapshot they started with.
    std::mutex snapshot_mutex;
    auto get_calibration = [&]() {
        std::lock_guard<std::mutex> lock(snapshot_mutex);
        if (g_reload_requested.exchange(false)) {
            try {
                auto fresh = std::make_shared<const wm::CalibrationSet>(
                    wm::CalibrationSet::from_json_text(wm::read_text_file(calib_path)));
                calibration = fresh;
                std::cerr << "calibration reloaded: " << calibration->content_hash().substr(0, 16)
                          << "\n";
            } catch (const std::exception& e) {
                std::cerr << "calibration reload failed: " << e.what() << "\n";
            }
        }
        return calibration;
    };

    auto limiter = std::make_shared<RateLimiter>();
    limiter->qps = qps;

    httplib::Server server;
    server.set_payload_max_length(static_cast<size_t>(max_body_mb) * 1024 * 1024);

    server.Get("/v1/health", [&, codec](const httplib::Request&, httplib::Response& res) {
        nlohmann::json doc;
        doc["version"] = kVersion;
        doc["key_id"] = codec->key().key_id;
        doc["calibration_hash"] = get_calibration()->content_hash();
        res.set_content(doc.dump(), "application/json");
    });

    server.Post("/v1/verify", [&, codec, registry](const httplib::Request& req,
                                                   httplib::Response& res) {
        if (!limiter->allow(req.remote_addr)) {
            res.status = 429;
            res.set_content("{\"error\":\"rate limited\"}", "application/json");
            return;
        }
        wm::VerifyContext context;
        context.codec = codec;
        context.calibration = get_calibration();
        context.registry = registry;
        context.alpha = alpha;
        context.method = wm::mt_method_from_name(method);
        context.redact_logits = redact;
        try {
            std::vector<uint8_t> bytes(req.body.begin(), req.body.end());
            wm::RgbImage img = wm::load_image(bytes);
            wm::VerifyOutcome outcome = wm::verify_image(img, context);
            res.set_content(wm::outcome_json(outcome, context).dump(), "application/json");
        } catch (const wm::Error& e) {
            res.status = 400;
            nlohmann::json doc;
            doc["error"] = e.what();
            res.set_content(doc.dump(), "application/json");
        }
    });

    std::signal(SIGHUP, handle_sighup);
    std::cout << "serving on port " << port << " (qps-limit " << qps << ", redact "
              << (redact ? "on" : "off") << ")\n";
    if (!server.listen("0.0.0.0", port)) {
        std::cerr << "serve: failed to bind port " << port << "\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"wmkit: keyed invisible image watermarking toolkit"};
    app.require_subcommand(1);

    // keygen
    auto* keygen = app.add_subcommand("keygen", "generate a secret key file");
    std::string kg_out = "key.json", kg_id = "default";
    uint64_t kg_seed = 0;
    bool kg_random = false;
    keygen->add_option("--out", kg_out);
    keygen->add_option("--key-id", kg_id);
    keygen->add_option("--seed", kg_seed, "derivation seed (omit for a random key)");
    keygen->add_flag("--random", kg_random, "draw the seed from the OS entropy pool");

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "watermark an image");
    std::string em_in, em_out, em_key, em_registry, em_customer = "anonymous", em_format = "png";
    uint32_t em_version = 1;
    int em_quality = 95;
    embed_cmd->add_option("--in", em_in)->required();
    embed_cmd->add_option("--out", em_out)->required();
    embed_cmd->add_option("--key-file", em_key);
    embed_cmd->add_option("--registry", em_registry)->required();
    embed_cmd->add_option("--customer-id", em_customer)->required();
    embed_cmd->add_option("--version", em_version);
    embed_cmd->add_option("--format", em_format, "png|jpeg (jpeg re-encoding is quality-bearing)");
    embed_cmd->add_option("--jpeg-quality", em_quality);

    // detect
    auto* detect_cmd = app.add_subcommand("detect", "verify an image");
    std::string dt_in, dt_key, dt_calib, dt_registry, dt_method = "holm";
    double dt_alpha = 0.01;
    bool dt_redact = false;
    detect_cmd->add_option("--in", dt_in)->required();
    detect_cmd->add_option("--key-file", dt_key);
    detect_cmd->add_option("--calibration", dt_calib);
    detect_cmd->add_option("--registry", dt_registry);
    detect_cmd->add_option("--alpha", dt_alpha);
    detect_cmd->add_option("--method", dt_method, "holm|hochberg|simes");
    detect_cmd->add_flag("--redact-logits", dt_redact);

    // calibrate
    auto* calib_cmd = app.add_subcommand("calibrate", "build a calibration file");
    std::string cl_dataset, cl_key, cl_out = "calibration.json", cl_policy = "mixed";
    int cl_max = 200;
    uint64_t cl_seed = 7;
    calib_cmd->add_option("--dataset", cl_dataset)->required();
    calib_cmd->add_option("--key-file", cl_key);
    calib_cmd->add_option("--out", cl_out);
    calib_cmd->add_option("--max-images", cl_max);
    calib_cmd->add_option("--policy", cl_policy, "mixed|identity");
    calib_cmd->add_option("--seed", cl_seed);

    // benchmark
    auto* bench_cmd = app.add_subcommand("benchmark", "run the robustness benchmark");
    std::string bm_dataset, bm_key, bm_out, bm_format = "json", bm_registry, bm_transforms,
                bm_resolution = "fixed512";
    int bm_max = 200, bm_threads = 0, bm_calib_negs = 0;
    double bm_target = 0.001;
    uint64_t bm_seed = 1;
    bench_cmd->add_option("--dataset", bm_dataset)->required();
    bench_cmd->add_option("--key-file", bm_key);
    bench_cmd->add_option("--out", bm_out, "output path (stdout when omitted)");
    bench_cmd->add_option("--format", bm_format, "json|csv|markdown");
    bench_cmd->add_option("--registry", bm_registry);
    bench_cmd->add_option("--transforms", bm_transforms, "comma-separated row subset");
    bench_cmd->add_option("--resolution", bm_resolution, "fixed512|native-image|native-model");
    bench_cmd->add_option("--max-images", bm_max);
    bench_cmd->add_option("--threads", bm_threads);
    bench_cmd->add_option("--calib-negatives", bm_calib_negs, "negatives per transform");
    bench_cmd->add_option("--target-fpr", bm_target);
    bench_cmd->add_option("--seed", bm_seed);

    // registry
    auto* registry_cmd = app.add_subcommand("registry", "manage the payload registry");
    auto* reg_init = registry_cmd->add_subcommand("init", "create an empty registry");
    std::string ri_out = "registry.json";
    int ri_version_bits = 4, ri_message_bits = 30, ri_redundancy = 2, ri_dmin = 16;
    uint64_t ri_seed = 0x707964ULL;
    reg_init->add_option("--out", ri_out);
    reg_init->add_option("--version-bits", ri_version_bits);
    reg_init->add_option("--message-bits", ri_message_bits);
    reg_init->add_option("--redundancy", ri_redundancy);
    reg_init->add_option("--d-min", ri_dmin);
    reg_init->add_option("--seed", ri_seed);
    auto* reg_add = registry_cmd->add_subcommand("add", "assign a code to a customer/version");
    std::string ra_registry, ra_customer;
    uint32_t ra_version = 1;
    reg_add->add_option("--registry", ra_registry)->required();
    reg_add->add_option("--customer-id", ra_customer)->required();
    reg_add->add_option("--version", ra_version);
    auto* reg_list = registry_cmd->add_subcommand("list", "print registry entries");
    std::string rl_registry;
    reg_list->add_option("--registry", rl_registry)->required();

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "verification service");
    int sv_port = 8080, sv_max_body = 32;
    std::string sv_key, sv_calib, sv_registry, sv_method = "holm";
    double sv_qps = 5.0, sv_alpha = 0.01;
    bool sv_expose = false;
    serve_cmd->add_option("--port", sv_port);
    serve_cmd->add_option("--key-file", sv_key);
    serve_cmd->add_option("--calibration", sv_calib);
    serve_cmd->add_option("--registry", sv_registry);
    serve_cmd->add_option("--qps-limit", sv_qps);
    serve_cmd->add_option("--alpha", sv_alpha);
    serve_cmd->add_option("--method", sv_method);
    serve_cmd->add_flag("--expose-logits", sv_expose, "disable the default logit redaction");
    serve_cmd->add_option("--max-body-mb", sv_max_body);

    // catalog
    auto* catalog_cmd = app.add_subcommand("catalog", "export the transform catalog as JSON");
    std::string ct_out;
    catalog_cmd->add_option("--out", ct_out, "output path (stdout when omitted)");

    // corpus
    auto* corpus_cmd = app.add_subcommand("corpus", "generate a synthetic photo corpus");
    std::string cp_out;
    int cp_count = 16, cp_size = 512;
    uint64_t cp_seed = 7;
    corpus_cmd->add_option("--out", cp_out)->required();
    corpus_cmd->add_option("--count", cp_count);
    corpus_cmd->add_option("--size", cp_size);
    corpus_cmd->add_option("--seed", cp_seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (keygen->parsed()) {
            uint64_t seed = kg_seed;
            if (kg_random || !keygen->count("--seed")) {
                seed = std::random_device{}();
                seed = (seed << 32) ^ std::random_device{}();
            }
            wm::SecretKey key = wm::SecretKey::generate(seed, kg_id);
            wm::write_text_file(kg_out, key.to_json_text());
            std::cout << "key written: " << kg_out << " (key_id=" << kg_id << ")\n";
            return 0;
        }

        if (embed_cmd->parsed()) {
            std::string key_path = env_or("WM_KEY_FILE", em_key);
            if (key_path.empty()) {
                std::cerr << "embed: --key-file (or WM_KEY_FILE) is required\n";
                return 1;
            }
            wm::SecretKey key = load_key(key_path);
            wm::CodecConfig config;
            wm::PayloadRegistry registry =
                wm::PayloadRegistry::from_json_text(wm::read_text_file(em_registry));
            const wm::RegistryEntry* entry = registry.find(em_customer, em_version);
            wm::PayloadCode code;
            if (entry) {
                code = entry->code;
            } else {
                code = registry.assign_code(em_customer, em_version);
                wm::write_text_file(em_registry, registry.to_json_text());
            }
            wm::RgbImage img = wm::load_image_file(em_in);
            wm::Codec codec(key, config);
            try {
                wm::RgbImage marked = codec.embed(img, code);
                const int wr = config.working_resolution;
                wm::RgbImage a = img.width == wr && img.height == wr
                                     ? img
                                     : wm::resize(img, wr, wr, wm::ResizeMethod::bicubic);
                wm::RgbImage b = marked.width == wr && marked.height == wr
                                     ? marked
                                     : wm::resize(marked, wr, wr, wm::ResizeMethod::bicubic);
                double quality = wm::psnr(a, b);
                if (em_format == "jpeg" || em_format == "jpg") {
                    wm::save_jpeg_file(marked, em_out, em_quality);
                } else {
                    wm::save_png_file(marked, em_out);
                }
                std::cout << "embedded payload for " << em_customer << " v" << em_version
                          << " code=" << code.to_string() << "\n"
                          << "psnr_db=" << wm::format_fixed(quality, 2) << "\n";
                return 0;
            } catch (const wm::Error& e) {
                if (e.code() == wm::ErrorCode::NotWatermarkable) {
                    std::cerr << "not watermarkable: " << e.what() << "\n";
                    return 2;
                }
                throw;
            }
        }

        if (detect_cmd->parsed()) {
            std::string key_path = env_or("WM_KEY_FILE", dt_key);
            std::string calib_path = env_or("WM_CALIBRATION", dt_calib);
            if (key_path.empty() || calib_path.empty()) {
                std::cerr << "detect: key file and calibration are required\n";
                return 1;
            }
            wm::VerifyContext context;
            context.codec = std::make_shared<const wm::Codec>(load_key(key_path),
                                                              wm::CodecConfig{});
            context.calibration = std::make_shared<const wm::CalibrationSet>(
                wm::CalibrationSet::from_json_text(wm::read_text_file(calib_path)));
            if (!dt_registry.empty()) {
                context.registry = std::make_shared<const wm::PayloadRegistry>(
                    wm::PayloadRegistry::from_json_text(wm::read_text_file(dt_registry)));
            }
            context.alpha = dt_alpha;
            context.method = wm::mt_method_from_name(dt_method);
            context.redact_logits = dt_redact;
            wm::RgbImage img = wm::load_image_file(dt_in);
            wm::VerifyOutcome outcome = wm::verify_image(img, context);
            std::cout << wm::outcome_json(outcome, context).dump(2) << "\n";
            return wm::verdict_exit_code(outcome.decision.verdict);
        }

        if (calib_cmd->parsed()) {
            std::string key_path = env_or("WM_KEY_FILE", cl_key);
            if (key_path.empty()) {
                std::cerr << "calibrate: --key-file (or WM_KEY_FILE) is required\n";
                return 1;
            }
            return run_calibrate(cl_dataset, key_path, cl_out, cl_max, cl_policy, cl_seed);
        }

        if (bench_cmd->parsed()) {
            std::string key_path = env_or("WM_KEY_FILE", bm_key);
            if (key_path.empty()) {
                std::cerr << "benchmark: --key-file (or WM_KEY_FILE) is required\n";
                return 1;
            }
            wm::BenchConfig config;
            config.dataset_dir = bm_dataset;
            config.max_images = bm_max;
            config.target_fpr = bm_target;
            config.run_seed = bm_seed;
            config.threads = bm_threads;
            config.calib_negatives_per_transform = bm_calib_negs;
            config.key = load_key(key_path);
            if (bm_resolution == "native-image") {
                config.resolution = wm::ResolutionPolicy::native_image;
            } else if (bm_resolution == "native-model") {
                config.resolution = wm::ResolutionPolicy::native_model;
            }
            if (!bm_registry.empty()) {
                config.registry =
                    wm::PayloadRegistry::from_json_text(wm::read_text_file(bm_registry));
            }
            if (!bm_transforms.empty()) {
                std::string token;
                for (char c : bm_transforms + ",") {
                    if (c == ',') {
                        if (!token.empty()) config.row_transforms.push_back(token);
                        token.clear();
                    } else {
                        token.push_back(c);
                    }
                }
            }
            wm::BenchReport report = wm::run_benchmark(config);
            wm::ReportFormat format = bm_format == "csv"
                                          ? wm::ReportFormat::csv
                                          : (bm_format == "markdown" ? wm::ReportFormat::markdown
                                                                     : wm::ReportFormat::json);
            std::string rendered = wm::render_report(report, format);
            if (bm_out.empty()) {
                std::cout << rendered;
            } else {
                wm::write_text_file(bm_out, rendered);
                std::cout << "report written: " << bm_out << "\n";
            }
            return 0;
        }

        if (registry_cmd->parsed()) {
            if (reg_init->parsed()) {
                wm::PayloadRegistry registry(ri_version_bits, ri_message_bits, ri_redundancy,
                                             ri_dmin, ri_seed);
                wm::write_text_file(ri_out, registry.to_json_text());
                std::cout << "registry written: " << ri_out
                          << " (C=" << registry.code_length() << ")\n";
                return 0;
            }
            if (reg_add->parsed()) {
                wm::PayloadRegistry registry =
                    wm::PayloadRegistry::from_json_text(wm::read_text_file(ra_registry));
                wm::PayloadCode code = registry.assign_code(ra_customer, ra_version);
                wm::write_text_file(ra_registry, registry.to_json_text());
                std::cout << ra_customer << " v" << ra_version << " -> " << code.to_string()
                          << "\n";
                return 0;
            }
            if (reg_list->parsed()) {
                wm::PayloadRegistry registry =
                    wm::PayloadRegistry::from_json_text(wm::read_text_file(rl_registry));
                for (const auto& entry : registry.entries()) {
                    std::cout << entry.customer_id << " v" << entry.version << " "
                              << entry.code.to_string() << "\n";
                }
                return 0;
            }
            std::cerr << "registry: expected init|add|list\n";
            return 1;
        }

        if (serve_cmd->parsed()) {
            std::string key_path = env_or("WM_KEY_FILE", sv_key);
            std::string calib_path = env_or("WM_CALIBRATION", sv_calib);
            if (key_path.empty() || calib_path.empty()) {
                std::cerr << "serve: key file and calibration are required\n";
                return 1;
            }
            // Redaction is on by default for the service; the CLI default is off.
            return run_serve(sv_port, key_path, calib_path, sv_registry, sv_qps, sv_alpha,
                             sv_method, !sv_expose, sv_max_body);
        }

        if (catalog_cmd->parsed()) {
            std::string text = wm::catalog_json();
            if (ct_out.empty()) {
                std::cout << text;
            } else {
                wm::write_text_file(ct_out, text);
            }
            return 0;
        }

        if (corpus_cmd->parsed()) {
            std::filesystem::create_directories(cp_out);
            wm::write_corpus_dir(cp_out, cp_seed, cp_count, cp_size, cp_size);
            std::cout << cp_count << " images written to " << cp_out << "\n";
            return 0;
        }
    } catch (const wm::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
