#include "cmfd/pipeline.hpp"

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "cmfd/postprocess.hpp"

namespace cmfd {

DetectionResult detect_forgery(const GrayImage& img, const PipelineConfig& cfg,
                               const DescriptorSet* external_keypoints, const TraceFn& trace) {
    DetectionResult result;
    result.map.width = img.width;
    result.map.height = img.height;
    result.map.mask = Mask(img.width, img.height);
    result.mask = Mask(img.width, img.height);

    DescriptorSet detected;
    const DescriptorSet* ds = external_keypoints;
    if (ds == nullptr) {
        detected = detect_and_describe(img, cfg.detector);
        ds = &detected;
    }
    result.keypoint_count = static_cast<int>(ds->size());
    if (ds->size() < 2) {
        result.warnings.push_back("not enough keypoints to match");
        return result;
    }

    result.matches = g2nn_match(*ds, cfg.g2nn_threshold, cfg.optimizer.neighbor_count,
                                cfg.min_spatial_dist, cfg.threads);
    result.match_count = static_cast<int>(result.matches.size());
    if (result.matches.size() == 0) {
        return result;  // clean verdict, nothing to optimize
    }

    ClusterState phase1 = run_phase1(result.matches, *ds, cfg.optimizer, cfg.seed, trace);
    result.state = fix_alpha_and_rerun(phase1, result.matches, *ds, cfg.optimizer, trace);
    result.optimizer_ran = true;

    result.map = build_detection_map(img, result.state, cfg.corr_threshold, cfg.corr_window,
                                     cfg.threads, &result.warnings);
    Mask cleaned = remove_small_regions(result.map.mask, cfg.min_region_fraction);
    result.mask = morphological_smooth(cleaned, cfg.morph_radius);
    result.is_forged = !result.mask.empty_mask();

    for (const auto& w : result.state.warnings) result.warnings.push_back(w);
    return result;
}

std::string detection_to_json(const DetectionResult& result) {
    nlohmann::json root;
    root["version"] = 1;
    root["is_forged"] = result.is_forged;
    root["keypoint_count"] = result.keypoint_count;
    root["match_count"] = result.match_count;
    root["active_match_count"] =
        result.optimizer_ran ? result.state.active_count() : 0;
    root["mask_pixel_count"] = result.mask.count();

    nlohmann::json clusters = nlohmann::json::array();
    if (result.optimizer_ran) {
        for (int i = 0; i < result.state.cluster_count; ++i) {
            const AffineTransform& h = result.state.transforms[i];
            nlohmann::json c;
            c["h"] = {h.a11, h.a12, h.tx, h.a21, h.a22, h.ty};
            c["center"] = {result.state.centers[i].x, result.state.centers[i].y};
            c["degenerate"] = static_cast<bool>(result.state.degenerate[i]);
            c["empty"] = static_cast<bool>(result.state.empty_cluster[i]);
            if (auto d = decompose_affine(h)) {
                c["theta_deg"] = d->theta * 180.0 / std::numbers::pi;
                c["sx"] = d->sx;
                c["sy"] = d->sy;
                c["tx"] = d->tx;
                c["ty"] = d->ty;
            }
            clusters.push_back(std::move(c));
        }
    }
    root["clusters"] = std::move(clusters);
    root["warnings"] = result.warnings;
    return root.dump(2);
}

}  // namespace cmfd
