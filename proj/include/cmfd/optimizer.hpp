#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cmfd/affine.hpp"
#include "cmfd/features.hpp"
#include "cmfd/matching.hpp"

namespace cmfd {

/// Knobs of the joint clustering / matching / transform optimization.
struct OptimizerConfig {
    int cluster_count = 5;         // C
    int neighbor_count = 3;        // K
    double matching_exponent = 2;  // P, > 1
    double fuzziness = 2;          // m, > 1
    int iter_max = 500;
    double threshold_max = 2000.0;  // pruning schedule ceiling
    double threshold_min = 0.1;     // pruning schedule floor
    double schedule_theta = 0.001;  // schedule midpoint offset
    double schedule_tau = 0.12;     // schedule steepness
    int fcm_iters = 100;            // rounds of the membership initializer
    double descriptor_weight_floor = 1e-9;  // keeps identical-descriptor pairs weighted
    bool enable_pruning = true;
    bool enable_early_stop = true;
};

/// Joint state: fuzzy memberships, cluster centers, one affine transform per
/// cluster, and the per-point pruning flags.
struct ClusterState {
    int cluster_count = 0;
    int point_count = 0;
    std::vector<double> memberships;          // cluster_count x point_count, row-major
    std::vector<Vec2> centers;                // homogeneous third coordinate fixed at 1
    std::vector<AffineTransform> transforms;  // one per cluster
    std::vector<uint8_t> degenerate;          // no usable transform solved this round
    std::vector<uint8_t> empty_cluster;       // zero membership mass
    std::vector<uint8_t> active;              // per matched point
    std::vector<std::string> warnings;

    double membership(int cluster, int point) const {
        return memberships[static_cast<size_t>(cluster) * point_count + point];
    }
    double& membership(int cluster, int point) {
        return memberships[static_cast<size_t>(cluster) * point_count + point];
    }
    int active_count() const;
    /// Cluster with the largest membership for a point; lower index wins ties.
    int dominant_cluster(int point) const;
    bool has_usable_transform() const;
};

/// Per-iteration observer record (optional trace output).
struct IterationTrace {
    int phase = 1;
    int iter = 0;
    double cost = 0.0;
    int active_points = 0;
    double prune_threshold = 0.0;
    const ClusterState* state = nullptr;
};
using TraceFn = std::function<void(const IterationTrace&)>;

/// Squared residual between dst and the image of src under h, summed over
/// the two spatial coordinates (the homogeneous row contributes nothing).
double transform_error(const AffineTransform& h, Vec2 src, Vec2 dst);

/// The joint objective over active points: membership-weighted spatial
/// distance to centers plus matching- and descriptor-weighted transform
/// error over each point's neighbor list.
double cost(const ClusterState& state, const MatchSet& matches, const DescriptorSet& ds,
            const OptimizerConfig& cfg);

struct FcmInit {
    std::vector<double> memberships;  // cluster_count x point_count
    int cluster_count = 0;
    std::vector<std::string> warnings;
};

/// Fuzzy c-means on spatial coordinates only, used to initialize the
/// memberships. Centers are seeded by a k-means++-style draw from `seed`,
/// so the result is deterministic. Columns sum to 1. When there are fewer
/// points than clusters the cluster count is reduced with a warning.
FcmInit init_memberships_fcm(const std::vector<Vec2>& points, int cluster_count, double fuzziness,
                             int iters, uint64_t seed);

/// Closed-form center update: membership-weighted mean of active matched
/// points. Clusters with no mass keep their center and are flagged empty.
void update_centers(ClusterState& state, const MatchSet& matches, const DescriptorSet& ds,
                    const OptimizerConfig& cfg);

/// Per-cluster affine update: solves the two 3-unknown normal-equation
/// systems (one per transform row) that make the objective stationary in H.
/// A singular or ill-conditioned system (cond > 1e12) keeps the previous
/// transform and flags the cluster degenerate.
void update_transforms(ClusterState& state, const MatchSet& matches, const DescriptorSet& ds,
                       const OptimizerConfig& cfg);

/// Matching-matrix update: each row is recomputed from the current
/// memberships and transforms; larger weighted error means smaller weight,
/// rows sum to 1. Zero-error neighbors take the whole row (split on ties).
void update_alpha(ClusterState& state, MatchSet& matches, const DescriptorSet& ds,
                  const OptimizerConfig& cfg);

/// Membership update from current centers, transforms and alpha; columns
/// over active points sum to 1. A zero aggregate term takes full
/// membership (split on ties).
void update_memberships(ClusterState& state, const MatchSet& matches, const DescriptorSet& ds,
                        const OptimizerConfig& cfg);

/// Monotone non-increasing pruning threshold, from roughly midway between
/// the bounds down to about threshold_min over the iteration budget.
double threshold_schedule(int iter, const OptimizerConfig& cfg);

/// Deactivate points whose matching- and descriptor-weighted transform
/// error under their dominant cluster exceeds T. Pruned points leave every
/// subsequent sum and never return.
void prune_outliers(ClusterState& state, const MatchSet& matches, const DescriptorSet& ds,
                    const OptimizerConfig& cfg, double T);

/// Phase 1: from the fuzzy c-means initialization and one-hot alpha, run
/// iter_max rounds of centers / transforms / alpha / memberships with the
/// scheduled pruning.
ClusterState run_phase1(MatchSet& matches, const DescriptorSet& ds, const OptimizerConfig& cfg,
                        uint64_t seed, const TraceFn& trace = nullptr);

/// Phase 2: harden alpha to one-hot (argmax per row, lower slot wins ties),
/// then rerun centers / transforms / memberships with alpha fixed. The
/// returned transforms feed localization.
ClusterState fix_alpha_and_rerun(const ClusterState& phase1, MatchSet& matches,
                                 const DescriptorSet& ds, const OptimizerConfig& cfg,
                                 const TraceFn& trace = nullptr);

}  // namespace cmfd
