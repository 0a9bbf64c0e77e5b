#pragma once

#include <string>
#include <vector>

#include "cmfd/features.hpp"

namespace cmfd {

/// Descriptor-space neighbors of one keypoint, sorted by ascending
/// Euclidean descriptor distance (ties break toward the lower index).
struct NeighborList {
    std::vector<int> indices;
    std::vector<double> distances;
};

/// Matched keypoints with their neighbor lists and the matching matrix.
/// alpha is stored in sparse row form: row k holds one weight per entry of
/// neighbors[k], sums to 1, all entries in [0, 1].
struct MatchSet {
    std::vector<int> matched_indices;         // Np indices into the DescriptorSet
    std::vector<NeighborList> neighbors;      // per matched point, up to K entries
    std::vector<std::vector<double>> alpha;   // per matched point, same arity as neighbors
    std::vector<int> accepted_counts;         // neighbors accepted by the ratio walk
    int zero_ratio_events = 0;                // d_{i+1} == 0 cases treated as ratio 0

    size_t size() const { return matched_indices.size(); }
};

/// Exact k-nearest-neighbor search in descriptor space for every keypoint.
/// Neighbors closer than min_spatial_dist in the image plane are excluded
/// (a keypoint's best descriptor match is otherwise usually itself at a
/// different scale). Lists may be shorter than k when fewer neighbors are
/// eligible. Results equal a brute-force scan over all pairs.
std::vector<NeighborList> knn_descriptor_search(const DescriptorSet& ds, int k,
                                                double min_spatial_dist, int threads = 1);

/// Generalized 2NN matching: walk i = 1, 2, ... accepting neighbor i while
/// d_i / d_{i+1} < threshold, stopping at the first violation. A point is
/// matched when at least its first neighbor is accepted. Alpha rows start
/// one-hot on the first neighbor. A zero d_{i+1} (identical descriptors)
/// counts as ratio 0 and is tallied in zero_ratio_events.
MatchSet g2nn_match(const DescriptorSet& ds, double threshold, int k,
                    double min_spatial_dist, int threads = 1);

/// Debug dump: one JSON object per matched point with source_index,
/// neighbor_indices, descriptor_distances and alpha_row.
std::string matches_to_json(const MatchSet& matches);

}  // namespace cmfd
