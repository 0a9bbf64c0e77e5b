#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "cmfd/evaluation.hpp"
#include "cmfd/image_io.hpp"
#include "cmfd/pipeline.hpp"
#include "cmfd/texture.hpp"

namespace {

using cmfd::PipelineConfig;

/// Register the shared pipeline parameter flags on a subcommand. Defaults
/// are the reference parameter set; the detector defaults (3 octave layers,
/// contrast threshold 0.04, edge threshold 10, sigma 1.6, 16 px border) are
/// an implementation choice surfaced here for reproducibility.
void add_pipeline_options(CLI::App* cmd, PipelineConfig& cfg) {
    cmd->add_option("--clusters,-C", cfg.optimizer.cluster_count, "Cluster count C")
        ->capture_default_str();
    cmd->add_option("--neighbors,-K", cfg.optimizer.neighbor_count,
                    "Descriptor-space neighbors per keypoint K")
        ->capture_default_str();
    cmd->add_option("--matching-exponent,-P", cfg.optimizer.matching_exponent,
                    "Matching exponent P (> 1)")
        ->capture_default_str();
    cmd->add_option("--fuzziness,-m", cfg.optimizer.fuzziness, "Fuzzification exponent m (> 1)")
        ->capture_default_str();
    cmd->add_option("--iter-max", cfg.optimizer.iter_max, "Iteration budget per phase")
        ->capture_default_str();
    cmd->add_option("--t-max", cfg.optimizer.threshold_max, "Pruning schedule ceiling")
        ->capture_default_str();
    cmd->add_option("--t-min", cfg.optimizer.threshold_min, "Pruning schedule floor")
        ->capture_default_str();
    cmd->add_option("--schedule-theta", cfg.optimizer.schedule_theta,
                    "Pruning schedule midpoint offset")
        ->capture_default_str();
    cmd->add_option("--schedule-tau", cfg.optimizer.schedule_tau, "Pruning schedule steepness")
        ->capture_default_str();
    cmd->add_option("--g2nn-threshold", cfg.g2nn_threshold, "g2NN distance-ratio threshold")
        ->capture_default_str();
    cmd->add_option("--min-spatial-dist", cfg.min_spatial_dist,
                    "Minimum image-space distance between matched keypoints (px)")
        ->capture_default_str();
    cmd->add_option("--corr-threshold", cfg.corr_threshold,
                    "Correlation binarization threshold")
        ->capture_default_str();
    cmd->add_option("--corr-window", cfg.corr_window, "Correlation window size (odd)")
        ->capture_default_str();
    cmd->add_option("--min-region", cfg.min_region_fraction,
                    "Drop mask components below this fraction of the image")
        ->capture_default_str();
    cmd->add_option("--morph-radius", cfg.morph_radius, "Closing disc radius (px)")
        ->capture_default_str();
    cmd->add_option("--sift-contrast", cfg.detector.contrast_threshold,
                    "Detector contrast threshold")
        ->capture_default_str();
    cmd->add_option("--sift-edge", cfg.detector.edge_threshold, "Detector edge threshold")
        ->capture_default_str();
    cmd->add_option("--sift-sigma", cfg.detector.sigma, "Detector base smoothing sigma")
        ->capture_default_str();
    cmd->add_option("--seed", cfg.seed, "Seed for all stochastic choices")
        ->capture_default_str();
    cmd->add_option("--threads", cfg.threads, "Worker thread cap (0 = all cores, 1 = serial)")
        ->capture_default_str();
}

std::string default_artifact(const std::string& image_path, const char* suffix) {
    std::filesystem::path p(image_path);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

cmfd::TraceFn make_trace(std::ofstream& out) {
    return [&out](const cmfd::IterationTrace& t) {
        nlohmann::json j;
        j["phase"] = t.phase;
        j["iter"] = t.iter;
        j["cost"] = t.cost;
        j["active"] = t.active_points;
        j["threshold"] = t.prune_threshold;
        nlohmann::json hs = nlohmann::json::array();
        for (const auto& h : t.state->transforms) {
            hs.push_back({h.a11, h.a12, h.tx, h.a21, h.a22, h.ty});
        }
        j["transforms"] = std::move(hs);
        out << j.dump() << "\n";
    };
}

void write_corr_map(const cmfd::DetectionMap& map, const std::string& path) {
    cv::Mat out(map.height, map.width, CV_8UC1);
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const float c = map.corr_at(x, y);
            // [-1, 1] maps to [0, 255]; undefined renders as 0.
            out.at<uint8_t>(y, x) =
                std::isnan(c) ? 0 : static_cast<uint8_t>(std::lround((c + 1.0) * 127.5));
        }
    }
    if (!cv::imwrite(path, out)) {
        throw std::runtime_error("cannot write correlation map '" + path + "'");
    }
}

int run_detect(const std::string& image_path, const PipelineConfig& cfg,
               const std::string& mask_path, const std::string& overlay_path,
               const std::string& json_path, const std::string& corr_path,
               const std::string& keypoints_path, const std::string& save_keypoints_path,
               const std::string& trace_path) {
    const cmfd::GrayImage img = cmfd::load_image(image_path);

    std::optional<cmfd::DescriptorSet> external;
    if (!keypoints_path.empty()) {
        external = cmfd::load_keypoints(keypoints_path);
    }

    std::ofstream trace_file;
    cmfd::TraceFn trace;
    if (!trace_path.empty()) {
        trace_file.open(trace_path);
        if (!trace_file) throw std::runtime_error("cannot write trace '" + trace_path + "'");
        trace = make_trace(trace_file);
    }

    cmfd::DetectionResult result =
        cmfd::detect_forgery(img, cfg, external ? &*external : nullptr, trace);

    if (!save_keypoints_path.empty() && !external) {
        const cmfd::DescriptorSet ds = cmfd::detect_and_describe(img, cfg.detector);
        cmfd::save_keypoints(ds, save_keypoints_path);
    }

    cmfd::write_mask(result.mask, mask_path.empty() ? default_artifact(image_path, "_mask.png")
                                                    : mask_path);
    cmfd::write_overlay(img, result.mask,
                        overlay_path.empty() ? default_artifact(image_path, "_overlay.png")
                                             : overlay_path);
    if (!corr_path.empty()) write_corr_map(result.map, corr_path);

    const std::string json = cmfd::detection_to_json(result);
    if (!json_path.empty()) {
        std::ofstream fout(json_path);
        if (!fout) throw std::runtime_error("cannot write '" + json_path + "'");
        fout << json << "\n";
    }
    std::cout << json << "\n";
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
}

int run_forge(const std::string& image_path, cmfd::AttackSpec spec, const std::string& out_path,
              const std::string& truth_mask_path, const std::string& truth_json_path) {
    const cmfd::GrayImage img = cmfd::load_image(image_path);
    const cmfd::ForgeryResult forged = cmfd::apply_attack(img, spec);
    cmfd::write_gray(forged.forged,
                     out_path.empty() ? default_artifact(image_path, "_forged.png") : out_path);
    if (!truth_mask_path.empty()) cmfd::write_mask(forged.truth, truth_mask_path);
    if (!truth_json_path.empty()) {
        nlohmann::json j;
        j["version"] = 1;
        j["attack"] = nlohmann::json::parse(cmfd::attacks_to_json({spec}))[0];
        const auto& h = forged.transform;
        j["transform"] = {h.a11, h.a12, h.tx, h.a21, h.a22, h.ty};
        if (auto d = cmfd::decompose_affine(h)) {
            j["theta_deg"] = d->theta * 180.0 / std::numbers::pi;
            j["sx"] = d->sx;
            j["sy"] = d->sy;
            j["tx"] = d->tx;
            j["ty"] = d->ty;
        }
        std::ofstream fout(truth_json_path);
        if (!fout) throw std::runtime_error("cannot write '" + truth_json_path + "'");
        fout << j.dump(2) << "\n";
    }
    return 0;
}

int run_eval(const std::string& originals_dir, const std::string& manifest_path,
             const std::vector<int>& rect, const std::vector<double>& dest,
             const PipelineConfig& cfg, const std::string& out_path) {
    std::vector<cmfd::AttackSpec> attacks;
    if (!manifest_path.empty()) {
        attacks = cmfd::load_attack_manifest(manifest_path);
    } else if (rect.size() == 4 && dest.size() == 2) {
        attacks = cmfd::standard_attacks(rect[0], rect[1], rect[2], rect[3], dest[0], dest[1]);
    }
    const cmfd::EvalReport report = cmfd::run_benchmark(originals_dir, attacks, cfg);
    const std::string json = cmfd::report_to_json(report);
    if (!out_path.empty()) {
        std::ofstream fout(out_path);
        if (!fout) throw std::runtime_error("cannot write '" + out_path + "'");
        fout << json << "\n";
    }
    std::cout << json << "\n";
    return 0;
}

int run_match_debug(const std::string& image_path, const PipelineConfig& cfg,
                    const std::string& keypoints_path, const std::string& out_path,
                    const std::string& json_path) {
    const cmfd::GrayImage img = cmfd::load_image(image_path);
    std::optional<cmfd::DescriptorSet> external;
    if (!keypoints_path.empty()) external = cmfd::load_keypoints(keypoints_path);
    const cmfd::DescriptorSet ds =
        external ? *external : cmfd::detect_and_describe(img, cfg.detector);

    // Matches as produced by g2NN, before the optimizer touches alpha.
    cmfd::MatchSet initial;
    if (ds.size() >= 2) {
        initial = cmfd::g2nn_match(ds, cfg.g2nn_threshold, cfg.optimizer.neighbor_count,
                                   cfg.min_spatial_dist, cfg.threads);
    }
    const cmfd::DetectionResult result = cmfd::detect_forgery(img, cfg, &ds);

    cv::Mat canvas(img.height, img.width, CV_8UC3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const uint8_t g =
                static_cast<uint8_t>(std::lround(std::clamp(img.at(x, y), 0.0, 255.0)));
            canvas.at<cv::Vec3b>(y, x) = cv::Vec3b(g, g, g);
        }
    }
    auto keypoint_center = [&](int index) {
        const auto& kp = ds.keypoints[index];
        return cv::Point(static_cast<int>(std::lround(kp.x)), static_cast<int>(std::lround(kp.y)));
    };
    // Initial matches in blue, surviving hardened matches in yellow.
    for (size_t p = 0; p < initial.size(); ++p) {
        cv::line(canvas, keypoint_center(initial.matched_indices[p]),
                 keypoint_center(initial.neighbors[p].indices[0]), cv::Scalar(200, 80, 0), 1);
    }
    if (result.optimizer_ran) {
        for (size_t p = 0; p < result.matches.size(); ++p) {
            if (!result.state.active[p]) continue;
            const auto& row = result.matches.alpha[p];
            size_t best = 0;
            for (size_t j = 1; j < row.size(); ++j) {
                if (row[j] > row[best]) best = j;
            }
            cv::line(canvas, keypoint_center(result.matches.matched_indices[p]),
                     keypoint_center(result.matches.neighbors[p].indices[best]),
                     cv::Scalar(0, 220, 255), 1);
        }
    }
    for (size_t i = 0; i < ds.size(); ++i) {
        cv::circle(canvas, keypoint_center(static_cast<int>(i)), 2, cv::Scalar(60, 180, 60), 1);
    }
    const std::string out =
        out_path.empty() ? default_artifact(image_path, "_matches.png") : out_path;
    if (!cv::imwrite(out, canvas)) {
        throw std::runtime_error("cannot write '" + out + "'");
    }
    if (!json_path.empty()) {
        std::ofstream fout(json_path);
        if (!fout) throw std::runtime_error("cannot write '" + json_path + "'");
        fout << cmfd::matches_to_json(result.matches) << "\n";
    }
    std::cout << "keypoints: " << ds.size() << ", matches: " << initial.size()
              << ", active after optimization: "
              << (result.optimizer_ran ? result.state.active_count() : 0) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Copy-move forgery detection toolkit"};
    app.require_subcommand(1);

    PipelineConfig cfg;

    // detect
    auto* detect = app.add_subcommand("detect", "Run the detection pipeline on one image");
    std::string image_path, mask_path, overlay_path, json_path, corr_path;
    std::string keypoints_path, save_keypoints_path, trace_path;
    detect->add_option("image", image_path, "Input PNG or JPEG")->required();
    detect->add_option("--mask", mask_path, "Mask PNG path (default <image>_mask.png)");
    detect->add_option("--overlay", overlay_path,
                       "Overlay PNG path (default <image>_overlay.png)");
    detect->add_option("--json", json_path, "Also write the result JSON here");
    detect->add_option("--corr-map", corr_path, "Write the correlation map as an 8-bit PNG");
    detect->add_option("--keypoints", keypoints_path,
                       "Import keypoints (CSV interchange format) instead of detecting");
    detect->add_option("--save-keypoints", save_keypoints_path,
                       "Export detected keypoints to CSV");
    detect->add_option("--trace", trace_path, "Write per-iteration JSONL trace");
    add_pipeline_options(detect, cfg);

    // forge
    auto* forge = app.add_subcommand("forge", "Synthesize a copy-move forgery");
    std::string forge_image, forge_out, forge_truth_mask, forge_truth_json, forge_preset;
    cmfd::AttackSpec spec;
    std::vector<int> rect;
    std::vector<double> dest;
    forge->add_option("image", forge_image, "Input PNG or JPEG")->required();
    forge->add_option("--out", forge_out, "Forged image PNG (default <image>_forged.png)");
    forge->add_option("--truth-mask", forge_truth_mask, "Ground-truth mask PNG");
    forge->add_option("--truth-json", forge_truth_json, "Ground-truth transform JSON");
    forge->add_option("--rect", rect, "Source rectangle x y w h")->expected(4)->required();
    forge->add_option("--dest", dest, "Destination anchor x y")->expected(2)->required();
    forge->add_option("--attack", forge_preset, "Attack preset name (A1..A15)");
    forge->add_option("--sx", spec.sx, "Horizontal scale")->capture_default_str();
    forge->add_option("--sy", spec.sy, "Vertical scale")->capture_default_str();
    forge->add_option("--theta", spec.theta_deg, "Rotation (degrees)")->capture_default_str();

    // eval
    auto* eval = app.add_subcommand("eval", "Benchmark over a directory of originals");
    std::string eval_dir, manifest_path, eval_out;
    std::vector<int> eval_rect;
    std::vector<double> eval_dest;
    eval->add_option("originals", eval_dir, "Directory of original images")->required();
    eval->add_option("--manifest", manifest_path, "Attack manifest JSON");
    eval->add_option("--rect", eval_rect, "Source rectangle x y w h for the standard attacks")
        ->expected(4);
    eval->add_option("--dest", eval_dest, "Destination anchor x y for the standard attacks")
        ->expected(2);
    eval->add_option("--out", eval_out, "Write the report JSON here");
    add_pipeline_options(eval, cfg);

    // match-debug
    auto* mdebug = app.add_subcommand("match-debug",
                                      "Visualize matches before and after optimization");
    std::string md_image, md_out, md_json, md_keypoints;
    mdebug->add_option("image", md_image, "Input PNG or JPEG")->required();
    mdebug->add_option("--out", md_out, "Overlay PNG (default <image>_matches.png)");
    mdebug->add_option("--json", md_json, "Write the match dump JSON here");
    mdebug->add_option("--keypoints", md_keypoints, "Import keypoints instead of detecting");
    add_pipeline_options(mdebug, cfg);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*detect) {
            return run_detect(image_path, cfg, mask_path, overlay_path, json_path, corr_path,
                              keypoints_path, save_keypoints_path, trace_path);
        }
        if (*forge) {
            if (!forge_preset.empty()) {
                bool found = false;
                for (const auto& p : cmfd::standard_attack_params()) {
                    if (forge_preset == p.name) {
                        spec.sx = p.sx;
                        spec.sy = p.sy;
                        spec.theta_deg = p.theta_deg;
                        found = true;
                        break;
                    }
                }
                if (!found) throw std::runtime_error("unknown attack preset '" + forge_preset + "'");
                spec.name = forge_preset;
            } else {
                spec.name = "custom";
            }
            spec.src_x = rect[0];
            spec.src_y = rect[1];
            spec.src_w = rect[2];
            spec.src_h = rect[3];
            spec.dest_x = dest[0];
            spec.dest_y = dest[1];
            return run_forge(forge_image, spec, forge_out, forge_truth_mask, forge_truth_json);
        }
        if (*eval) {
            if (manifest_path.empty() && (eval_rect.size() != 4 || eval_dest.size() != 2)) {
                throw std::runtime_error("eval needs --manifest or both --rect and --dest");
            }
            return run_eval(eval_dir, manifest_path, eval_rect, eval_dest, cfg, eval_out);
        }
        if (*mdebug) {
            return run_match_debug(md_image, cfg, md_keypoints, md_out, md_json);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
