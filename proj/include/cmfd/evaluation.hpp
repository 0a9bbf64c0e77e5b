#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cmfd/affine.hpp"
#include "cmfd/image.hpp"
#include "cmfd/pipeline.hpp"

namespace cmfd {

/// One synthetic copy-move attack: the source rectangle is rotated by
/// theta then scaled (sx, sy) about its own center and pasted so that the
/// rectangle origin lands at dest.
struct AttackSpec {
    std::string name;
    double sx = 1.0;
    double sy = 1.0;
    double theta_deg = 0.0;
    int src_x = 0, src_y = 0, src_w = 0, src_h = 0;
    double dest_x = 0.0, dest_y = 0.0;
};

struct AttackParams {
    const char* name;
    double sx, sy, theta_deg;
};

/// The 15 reference attack parameter triples (A1..A15): pure copy,
/// rotations 10..50 degrees, symmetric and asymmetric scaling, and
/// rotation-plus-scaling combinations.
std::span<const AttackParams> standard_attack_params();

/// A1..A15 instantiated on one shared source rectangle / destination.
std::vector<AttackSpec> standard_attacks(int src_x, int src_y, int src_w, int src_h,
                                         double dest_x, double dest_y);

struct ForgeryResult {
    GrayImage forged;
    Mask truth;                 // source and pasted pixels
    AffineTransform transform;  // exact source -> destination map
};

/// Synthesize the forgery. Pasting is bilinear with 4x4 supersampled edge
/// coverage; edge pixels enter the truth mask at coverage >= 0.5. Throws
/// std::invalid_argument when the source or transformed region leaves the
/// image.
ForgeryResult apply_attack(const GrayImage& img, const AttackSpec& spec);

/// Absolute per-parameter errors between two decomposable transforms; the
/// angle error is wrapped into [0, 180] degrees.
struct TransformErrors {
    double theta_deg = 0.0;
    double sx = 0.0;
    double sy = 0.0;
    double tx = 0.0;
    double ty = 0.0;
};
std::optional<TransformErrors> score_transform(const AffineTransform& truth,
                                               const AffineTransform& estimated);

/// Image-level TPR/FPR from (truth, predicted) verdict pairs. A side with
/// no ground-truth examples yields a NaN sentinel.
struct ImageScore {
    double tpr = 0.0;
    double fpr = 0.0;
};
ImageScore score_image_level(const std::vector<std::pair<bool, bool>>& decisions);

/// Pixel-level TPR/FPR between equally sized masks.
struct PixelScore {
    double tpr = 0.0;
    double fpr = 0.0;
    size_t tp = 0, fp = 0, tn = 0, fn = 0;
};
PixelScore score_pixel_level(const Mask& truth, const Mask& predicted);

/// Among the usable cluster transforms (and their inverses, since a
/// duplication is detected from either side), the one closest to the truth
/// by summed squared entry difference.
std::optional<AffineTransform> best_matching_transform(const ClusterState& state,
                                                       const AffineTransform& truth);

struct EvalImageRecord {
    std::string name;
    std::string attack;  // empty for a clean original
    bool truth_forged = false;
    bool predicted = false;
    double pixel_tpr = 0.0;  // NaN when not applicable
    double pixel_fpr = 0.0;
    std::optional<TransformErrors> errors;
    std::string failure;  // non-empty when this image could not be processed
};

struct EvalReport {
    ImageScore image;
    double pixel_tpr_mean = 0.0;  // over forged records
    double pixel_fpr_mean = 0.0;
    std::optional<TransformErrors> mae;  // over scored forged records
    std::vector<EvalImageRecord> records;
};

/// Run the full pipeline over every original in the directory (clean pass)
/// and over every original x attack forgery, aggregating image-, pixel- and
/// transform-level scores. Per-image failures are recorded, not fatal.
/// Deterministic for a fixed config seed.
EvalReport run_benchmark(const std::string& originals_dir,
                         const std::vector<AttackSpec>& attacks, const PipelineConfig& cfg);

std::string report_to_json(const EvalReport& report);

/// Attack manifest I/O (JSON list of AttackSpec).
std::vector<AttackSpec> load_attack_manifest(const std::string& path);
std::string attacks_to_json(const std::vector<AttackSpec>& attacks);

}  // namespace cmfd
