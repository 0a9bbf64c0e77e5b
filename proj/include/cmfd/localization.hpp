#pragma once

#include <vector>

#include "cmfd/image.hpp"
#include "cmfd/optimizer.hpp"

namespace cmfd {

/// Per-pixel correlation evidence plus the thresholded mask. Pixels whose
/// windows have no variance carry NaN ("undefined") and never pass the
/// threshold.
struct DetectionMap {
    int width = 0;
    int height = 0;
    std::vector<float> corr;  // row-major; NaN where undefined
    Mask mask;

    float corr_at(int x, int y) const { return corr[static_cast<size_t>(y) * width + x]; }
};

/// Normalized cross-correlation between the window around `pixel` warped by
/// the rotation/scale part of h and the same-size window around H * pixel.
/// Window samples are bilinear and clamp at image edges. Returns NaN when
/// either window has (near-)zero variance; requires an odd window size.
double correlation_at(const GrayImage& img, int px, int py, const AffineTransform& h,
                      int window = 7);

/// Build the full correlation map: every pixel uses the transform of its
/// spatially nearest non-empty, non-degenerate cluster (lower index wins
/// ties), and pixels at or above the threshold mark both themselves and
/// their rounded image under the transform. Appends a warning and returns
/// an empty mask when no usable transform exists.
DetectionMap build_detection_map(const GrayImage& img, const ClusterState& state,
                                 double binarize_threshold, int window = 7, int threads = 1,
                                 std::vector<std::string>* warnings = nullptr);

}  // namespace cmfd
