#pragma once

#include <span>
#include <string>
#include <vector>

#include "cmfd/image.hpp"

namespace cmfd {

constexpr int kDescriptorDim = 128;

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    double scale = 1.0;        // detector window size, > 0
    double orientation = 0.0;  // radians in [0, 2*pi)
};

/// Keypoints plus one 128-dim descriptor row per keypoint. Descriptor rows
/// produced by detect_and_describe are unit-norm; rows loaded from disk are
/// kept exactly as stored.
struct DescriptorSet {
    std::vector<Keypoint> keypoints;
    std::vector<double> descriptors;  // row-major, keypoints.size() * 128

    size_t size() const { return keypoints.size(); }
    std::span<const double> descriptor(size_t i) const {
        return {descriptors.data() + i * kDescriptorDim, kDescriptorDim};
    }
};

struct DetectorParams {
    // Defaults follow the stock SIFT configuration; they are surfaced in the
    // CLI help so runs are reproducible.
    int octave_layers = 3;
    double contrast_threshold = 0.04;
    double edge_threshold = 10.0;
    double sigma = 1.6;
    int border = 16;  // keypoints closer than this to any edge are dropped
};

/// Detect scale/rotation-covariant keypoints and their 128-dim gradient
/// histogram descriptors. Keypoints within `border` pixels of the image
/// edge are discarded, duplicates at identical (x, y, scale) keep the
/// strongest response, output is sorted by (y, x, scale) and descriptor
/// rows are renormalized to unit Euclidean norm. Images smaller than 16x16
/// yield an empty set.
DescriptorSet detect_and_describe(const GrayImage& img, const DetectorParams& params = {});

/// Keypoint interchange format: CSV with header
/// `x,y,scale,orientation,d0..d127`, one keypoint per row, full-precision
/// decimal reals. load throws std::runtime_error naming the offending line
/// for malformed rows or wrong descriptor arity.
DescriptorSet load_keypoints(const std::string& path);
void save_keypoints(const DescriptorSet& ds, const std::string& path);

}  // namespace cmfd
