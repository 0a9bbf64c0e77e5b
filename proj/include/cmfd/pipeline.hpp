#pragma once

#include <string>

#include "cmfd/features.hpp"
#include "cmfd/image.hpp"
#include "cmfd/localization.hpp"
#include "cmfd/matching.hpp"
#include "cmfd/optimizer.hpp"

namespace cmfd {

/// All pipeline knobs, defaulted to the reference parameter set
/// (C=5, K=3, P=2, m=2, g2NN 0.7, correlation threshold 0.6, 0.1% region
/// floor, iteration budget 500 with the 2000 -> 0.1 pruning schedule).
struct PipelineConfig {
    DetectorParams detector;
    double g2nn_threshold = 0.7;
    double min_spatial_dist = 10.0;
    OptimizerConfig optimizer;
    double corr_threshold = 0.6;
    int corr_window = 7;
    double min_region_fraction = 0.001;
    int morph_radius = 3;
    uint64_t seed = 0;
    int threads = 0;  // 0 = all hardware threads
};

struct DetectionResult {
    int keypoint_count = 0;
    int match_count = 0;
    MatchSet matches;    // final matching state (alpha hardened in phase 2)
    ClusterState state;  // final phase-2 state
    bool optimizer_ran = false;
    DetectionMap map;
    Mask mask;  // post-processed forgery mask
    bool is_forged = false;
    std::vector<std::string> warnings;
};

/// Full detection pipeline: features -> g2NN matching -> joint optimization
/// (both phases) -> correlation map -> post-processing. An externally
/// loaded keypoint set bypasses the detector when provided.
DetectionResult detect_forgery(const GrayImage& img, const PipelineConfig& cfg,
                               const DescriptorSet* external_keypoints = nullptr,
                               const TraceFn& trace = nullptr);

/// Detection result as schema-versioned JSON (verdict, cluster transforms
/// with their rotation/scale decomposition, counts, warnings).
std::string detection_to_json(const DetectionResult& result);

}  // namespace cmfd
