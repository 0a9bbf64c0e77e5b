#include "cmfd/matching.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cmfd/parallel.hpp"

namespace cmfd {

namespace {

double descriptor_distance_sq(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (int j = 0; j < kDescriptorDim; ++j) {
        const double d = a[j] - b[j];
        acc += d * d;
    }
    return acc;
}

}  // namespace

std::vector<NeighborList> knn_descriptor_search(const DescriptorSet& ds, int k,
                                                double min_spatial_dist, int threads) {
    if (k < 2) {
        throw std::invalid_argument("knn_descriptor_search: k must be >= 2");
    }
    if (ds.size() == 0) {
        throw std::invalid_argument("knn_descriptor_search: empty descriptor set");
    }
    const int n = static_cast<int>(ds.size());
    const double min_sq = min_spatial_dist * min_spatial_dist;
    std::vector<NeighborList> lists(n);

    parallel_for(0, n, threads, [&](int i) {
        const auto qi = ds.descriptor(i);
        const auto& kp_i = ds.keypoints[i];
        // (distance^2, index) candidates; lexicographic order gives the
        // stable lower-index tie-break.
        std::vector<std::pair<double, int>> best;
        best.reserve(k + 1);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dx = ds.keypoints[j].x - kp_i.x;
            const double dy = ds.keypoints[j].y - kp_i.y;
            if (dx * dx + dy * dy < min_sq) continue;
            const double dist_sq = descriptor_distance_sq(qi, ds.descriptor(j));
            const std::pair<double, int> cand{dist_sq, j};
            if (best.size() == static_cast<size_t>(k) && cand >= best.back()) continue;
            auto pos = std::upper_bound(best.begin(), best.end(), cand);
            best.insert(pos, cand);
            if (best.size() > static_cast<size_t>(k)) best.pop_back();
        }
        auto& out = lists[i];
        out.indices.reserve(best.size());
        out.distances.reserve(best.size());
        for (const auto& [dist_sq, idx] : best) {
            out.indices.push_back(idx);
            out.distances.push_back(std::sqrt(dist_sq));
        }
    });
    return lists;
}

MatchSet g2nn_match(const DescriptorSet& ds, double threshold, int k,
                    double min_spatial_dist, int threads) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("g2nn_match: threshold must be in (0, 1)");
    }
    MatchSet out;
    if (ds.size() == 0) return out;

    auto lists = knn_descriptor_search(ds, k, min_spatial_dist, threads);
    const int n = static_cast<int>(ds.size());
    for (int i = 0; i < n; ++i) {
        const auto& list = lists[i];
        const size_t len = list.indices.size();
        int accepted = 0;
        for (size_t r = 0; r + 1 < len; ++r) {
            const double next = list.distances[r + 1];
            if (next == 0.0) {
                // Both neighbors are identical descriptors; the ratio is
                // taken as 0 and the walk continues.
                ++out.zero_ratio_events;
                ++accepted;
                continue;
            }
            if (list.distances[r] / next < threshold) {
                ++accepted;
            } else {
                break;
            }
        }
        if (accepted == 0) continue;

        out.matched_indices.push_back(i);
        out.neighbors.push_back(list);
        out.accepted_counts.push_back(accepted);
        std::vector<double> row(len, 0.0);
        row[0] = 1.0;  // first accepted neighbor is always the nearest one
        out.alpha.push_back(std::move(row));
    }
    return out;
}

std::string matches_to_json(const MatchSet& matches) {
    nlohmann::json arr = nlohmann::json::array();
    for (size_t p = 0; p < matches.size(); ++p) {
        nlohmann::json entry;
        entry["source_index"] = matches.matched_indices[p];
        entry["neighbor_indices"] = matches.neighbors[p].indices;
        entry["descriptor_distances"] = matches.neighbors[p].distances;
        entry["alpha_row"] = matches.alpha[p];
        arr.push_back(std::move(entry));
    }
    nlohmann::json root;
    root["version"] = 1;
    root["zero_ratio_events"] = matches.zero_ratio_events;
    root["matches"] = std::move(arr);
    return root.dump(2);
}

}  // namespace cmfd
