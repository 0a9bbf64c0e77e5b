#include "cmfd/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace cmfd {

namespace {

constexpr double kConditionLimit = 1e12;
constexpr double kEarlyStopRelTol = 1e-10;
constexpr int kEarlyStopRounds = 20;

Vec2 point_of(const MatchSet& matches, const DescriptorSet& ds, int k) {
    const auto& kp = ds.keypoints[matches.matched_indices[k]];
    return {kp.x, kp.y};
}

Vec2 neighbor_of(const MatchSet& matches, const DescriptorSet& ds, int k, int slot) {
    const auto& kp = ds.keypoints[matches.neighbors[k].indices[slot]];
    return {kp.x, kp.y};
}

/// Squared descriptor distance with the configured floor applied.
double descriptor_weight(const MatchSet& matches, int k, int slot, const OptimizerConfig& cfg) {
    const double d = matches.neighbors[k].distances[slot];
    return std::max(d * d, cfg.descriptor_weight_floor);
}

double spatial_distance_sq(Vec2 a, Vec2 b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

/// Inverse-power normalization shared by the alpha and membership updates:
/// out_i proportional to terms_i^(-1/(exp-1)), with zero terms taking the
/// whole row in equal shares.
void inverse_power_normalize(const std::vector<double>& terms, double exponent,
                             std::vector<double>& out) {
    const size_t n = terms.size();
    out.assign(n, 0.0);
    size_t zeros = 0;
    for (double t : terms) zeros += (t == 0.0);
    if (zeros > 0) {
        const double share = 1.0 / static_cast<double>(zeros);
        for (size_t i = 0; i < n; ++i) out[i] = terms[i] == 0.0 ? share : 0.0;
        return;
    }
    const double t_min = *std::min_element(terms.begin(), terms.end());
    const double p = 1.0 / (exponent - 1.0);
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
        out[i] = std::pow(t_min / terms[i], p);  // in (0, 1], no overflow
        total += out[i];
    }
    for (size_t i = 0; i < n; ++i) out[i] /= total;
}

}  // namespace

int ClusterState::active_count() const {
    int n = 0;
    for (uint8_t a : active) n += (a != 0);
    return n;
}

int ClusterState::dominant_cluster(int point) const {
    int best = 0;
    double best_u = -1.0;
    for (int i = 0; i < cluster_count; ++i) {
        const double u = membership(i, point);
        if (u > best_u) {
            best_u = u;
            best = i;
        }
    }
    return best;
}

bool ClusterState::has_usable_transform() const {
    for (int i = 0; i < cluster_count; ++i) {
        if (!degenerate[i] && !empty_cluster[i]) return true;
    }
    return false;
}

double transform_error(const AffineTransform& h, Vec2 src, Vec2 dst) {
    const Vec2 mapped = h.apply(src);
    const double ex = dst.x - mapped.x;
    const double ey = dst.y - mapped.y;
    return ex * ex + ey * ey;
}

double cost(const ClusterState& state, const MatchSet& matches, const DescriptorSet& ds,
            const OptimizerConfig& cfg) {
    double total = 0.0;
    const int np = state.point_count;
    for (int k = 0; k < np; ++k) {
        if (!state.active[k]) continue;
        const Vec2 xk = point_of(matches, ds, k);
        const int arity = static_cast<int>(matches.neighbors[k].indices.size());
        for (int i = 0; i < state.cluster_count; ++i) {
            const double u = state.membership(i, k);
            if (u == 0.0) continue;
            double inner = spatial_distance_sq(xk, state.centers[i]);
            for (int j = 0; j < arity; ++j) {
                const double a = matches.alpha[k][j];
                if (a == 0.0) continue;
                inner += std::pow(a, cfg.matching_exponent) * descriptor_weight(matches, k, j, cfg) *
                         transform_error(state.transforms[i], xk, neighbor_of(matches, ds, k, j));
            }
            total += std::pow(u, cfg.fuzziness) * inner;
        }
    }
    return total;
}

FcmInit init_memberships_fcm(const std::vector<Vec2>& points, int cluster_count, double fuzziness,
                             int iters, uint64_t seed) {
    if (points.empty()) {
        throw std::invalid_argument("init_memberships_fcm: no points");
    }
    const int np = static_cast<int>(points.size());
    FcmInit init;
    init.cluster_count = cluster_count;
    if (np < cluster_count) {
        init.cluster_count = np;
        init.warnings.push_back("fewer matched points than clusters; reduced cluster count to " +
                                std::to_string(np));
    }
    const int c = init.cluster_count;

    // k-means++-style seeding: each next center is drawn with probability
    // proportional to its squared distance from the chosen set.
    std::mt19937_64 rng(seed);
    std::vector<Vec2> centers;
    centers.reserve(c);
    {
        std::uniform_int_distribution<int> first(0, np - 1);
        centers.push_back(points[first(rng)]);
    }
    std::vector<double> dist_sq(np);
    while (static_cast<int>(centers.size()) < c) {
        double total = 0.0;
        for (int k = 0; k < np; ++k) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec2& v : centers) best = std::min(best, spatial_distance_sq(points[k], v));
            dist_sq[k] = best;
            total += best;
        }
        int chosen = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> unif(0.0, total);
            double r = unif(rng);
            for (int k = 0; k < np; ++k) {
                r -= dist_sq[k];
                if (r <= 0.0) {
                    chosen = k;
                    break;
                }
            }
        } else {
            std::uniform_int_distribution<int> any(0, np - 1);
            chosen = any(rng);
        }
        centers.push_back(points[chosen]);
    }

    std::vector<double> u(static_cast<size_t>(c) * np, 0.0);
    std::vector<double> terms(c);
    std::vector<double> column(c);
    for (int round = 0; round < iters; ++round) {
        // Membership step from current centers.
        double max_delta = 0.0;
        for (int k = 0; k < np; ++k) {
            for (int i = 0; i < c; ++i) terms[i] = spatial_distance_sq(points[k], centers[i]);
            inverse_power_normalize(terms, fuzziness, column);
            for (int i = 0; i < c; ++i) {
                max_delta = std::max(max_delta, std::abs(column[i] - u[static_cast<size_t>(i) * np + k]));
                u[static_cast<size_t>(i) * np + k] = column[i];
            }
        }
        // Center step: weighted means.
        for (int i = 0; i < c; ++i) {
            double mass = 0.0, sx = 0.0, sy = 0.0;
            for (int k = 0; k < np; ++k) {
                const double w = std::pow(u[static_cast<size_t>(i) * np + k], fuzziness);
                mass += w;
                sx += w * points[k].x;
                sy += w * points[k].y;
            }
            if (mass > 0.0) centers[i] = {sx / mass, sy / mass};
        }
        if (max_delta < 1e-9) break;
    }
    init.memberships = std::move(u);
    return init;
}

void update_centers(ClusterState& state, const MatchSet& matches, const DescriptorSet& ds,
                    const OptimizerConfig& cfg) {
    for (int i = 0; i < state.cluster_count; ++i) {
        double mass = 0.0, sx = 0.0, sy = 0.0;
        for (int k = 0; k < state.point_count; ++k) {
            if (!state.active[k]) continue;
            const double w = std::pow(state.membership(i, k), cfg.fuzziness);
            if (w == 0.0) continue;
            const Vec2 xk = point_of(matches, ds, k);
            mass += w;
            sx += w * xk.x;
            sy += w * xk.y;
        }
        if (mass > 0.0) {
            state.centers[i] = {sx / mass, sy / mass};
            state.empty_cluster[i] = 0;
        } else {
            state.empty_cluster[i] = 1;  // center kept as-is
        }
    }
}

void update_transforms(ClusterState& state, const MatchSet& matches, const DescriptorSet& ds,
                       const OptimizerConfig& cfg) {
    for (int i = 0; i < state.cluster_count; ++i) {
        Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
        Eigen::Vector3d rhs_x = Eigen::Vector3d::Zero();
        Eigen::Vector3d rhs_y = Eigen::Vector3d::Zero();
        for (int k = 0; k < state.point_count; ++k) {
            if (!state.active[k]) continue;
            const double um = std::pow(state.membership(i, k), cfg.fuzziness);
            if (um == 0.0) continue;
            const Vec2 xk = point_of(matches, ds, k);
            const Eigen::Vector3d xh(xk.x, xk.y, 1.0);
            const int arity = static_cast<int>(matches.neighbors[k].indices.size());
            for (int j = 0; j < arity; ++j) {
                const double a = matches.alpha[k][j];
                if (a == 0.0) continue;
                const double w = um * std::pow(a, cfg.matching_exponent) *
                                 descriptor_weight(matches, k, j, cfg);
                const Vec2 nb = neighbor_of(matches, ds, k, j);
                normal.noalias() += w * xh * xh.transpose();
                rhs_x.noalias() += w * nb.x * xh;
                rhs_y.noalias() += w * nb.y * xh;
            }
        }

        // The normal matrix is symmetric PSD, so its eigenvalues are its
        // singular values.
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(normal);
        const Eigen::Vector3d ev = eig.eigenvalues();  // ascending
        if (!(ev(0) > 0.0) || ev(2) / ev(0) > kConditionLimit) {
            state.degenerate[i] = 1;  // previous transform retained
            continue;
        }
        const Eigen::PartialPivLU<Eigen::Matrix3d> lu(normal);
        const Eigen::Vector3d row_x = lu.solve(rhs_x);
        const Eigen::Vector3d row_y = lu.solve(rhs_y);
        AffineTransform h;
        h.a11 = row_x(0);
        h.a12 = row_x(1);
        h.tx = row_x(2);
        h.a21 = row_y(0);
        h.a22 = row_y(1);
        h.ty = row_y(2);
        if (h.det() == 0.0) {
            state.degenerate[i] = 1;
            continue;
        }
        state.transforms[i] = h;
        state.degenerate[i] = 0;
    }
}

void update_alpha(ClusterState& state, MatchSet& matches, const DescriptorSet& ds,
                  const OptimizerConfig& cfg) {
    std::vector<double> um(state.cluster_count);
    std::vector<double> terms;
    std::vector<double> row;
    for (int k = 0; k < state.point_count; ++k) {
        if (!state.active[k]) continue;
        for (int i = 0; i < state.cluster_count; ++i) {
            um[i] = std::pow(state.membership(i, k), cfg.fuzziness);
        }
        const Vec2 xk = point_of(matches, ds, k);
        const int arity = static_cast<int>(matches.neighbors[k].indices.size());
        terms.assign(arity, 0.0);
        for (int j = 0; j < arity; ++j) {
            const Vec2 nb = neighbor_of(matches, ds, k, j);
            double err = 0.0;
            for (int i = 0; i < state.cluster_count; ++i) {
                if (um[i] == 0.0) continue;
                err += um[i] * transform_error(state.transforms[i], xk, nb);
            }
            terms[j] = descriptor_weight(matches, k, j, cfg) * err;
        }
        inverse_power_normalize(terms, cfg.matching_exponent, row);
        matches.alpha[k] = row;
    }
}

void update_memberships(ClusterState& state, const MatchSet& matches, const DescriptorSet& ds,
                        const OptimizerConfig& cfg) {
    std::vector<double> terms(state.cluster_count);
    std::vector<double> column(state.cluster_count);
    for (int k = 0; k < state.point_count; ++k) {
        if (!state.active[k]) continue;
        const Vec2 xk = point_of(matches, ds, k);
        const int arity = static_cast<int>(matches.neighbors[k].indices.size());
        for (int i = 0; i < state.cluster_count; ++i) {
            double agg = spatial_distance_sq(xk, state.centers[i]);
            for (int j = 0; j < arity; ++j) {
                const double a = matches.alpha[k][j];
                if (a == 0.0) continue;
                agg += std::pow(a, cfg.matching_exponent) * descriptor_weight(matches, k, j, cfg) *
                       transform_error(state.transforms[i], xk, neighbor_of(matches, ds, k, j));
            }
            terms[i] = agg;
        }
        inverse_power_normalize(terms, cfg.fuzziness, column);
        for (int i = 0; i < state.cluster_count; ++i) state.membership(i, k) = column[i];
    }
}

double threshold_schedule(int iter, const OptimizerConfig& cfg) {
    const double x = (static_cast<double>(iter) / cfg.iter_max - cfg.schedule_theta) /
                     cfg.schedule_tau;
    const double sigma = 1.0 / (1.0 + std::exp(-x));
    return cfg.threshold_min + (cfg.threshold_max - cfg.threshold_min) * (1.0 - sigma);
}

namespace {

/// Matching- and descriptor-weighted transform error of one point under its
/// dominant cluster; this is the quantity the pruning threshold tests.
double point_prune_error(const ClusterState& state, const MatchSet& matches,
                         const DescriptorSet& ds, const OptimizerConfig& cfg, int k) {
    const int c = state.dominant_cluster(k);
    const Vec2 xk = point_of(matches, ds, k);
    const int arity = static_cast<int>(matches.neighbors[k].indices.size());
    double err = 0.0;
    for (int j = 0; j < arity; ++j) {
        const double a = matches.alpha[k][j];
        if (a == 0.0) continue;
        err += std::pow(a, cfg.matching_exponent) * descriptor_weight(matches, k, j, cfg) *
               transform_error(state.transforms[c], xk, neighbor_of(matches, ds, k, j));
    }
    return err;
}

}  // namespace

void prune_outliers(ClusterState& state, const MatchSet& matches, const DescriptorSet& ds,
                    const OptimizerConfig& cfg, double T) {
    for (int k = 0; k < state.point_count; ++k) {
        if (!state.active[k]) continue;
        if (point_prune_error(state, matches, ds, cfg, k) > T) {
            state.active[k] = 0;
            for (int i = 0; i < state.cluster_count; ++i) state.membership(i, k) = 0.0;
        }
    }
}

namespace {

ClusterState make_initial_state(const MatchSet& matches, const DescriptorSet& ds,
                                const OptimizerConfig& cfg, uint64_t seed) {
    std::vector<Vec2> points;
    points.reserve(matches.size());
    for (size_t k = 0; k < matches.size(); ++k) {
        points.push_back(point_of(matches, ds, static_cast<int>(k)));
    }
    FcmInit init = init_memberships_fcm(points, cfg.cluster_count, cfg.fuzziness, cfg.fcm_iters,
                                        seed);
    ClusterState state;
    state.cluster_count = init.cluster_count;
    state.point_count = static_cast<int>(matches.size());
    state.memberships = std::move(init.memberships);
    state.centers.assign(state.cluster_count, Vec2{});
    state.transforms.assign(state.cluster_count, AffineTransform{});
    state.degenerate.assign(state.cluster_count, 1);  // nothing solved yet
    state.empty_cluster.assign(state.cluster_count, 0);
    state.active.assign(state.point_count, 1);
    state.warnings = std::move(init.warnings);
    return state;
}

struct EarlyStop {
    double prev = std::numeric_limits<double>::quiet_NaN();
    int flat_rounds = 0;

    bool update(double current) {
        if (!std::isnan(prev)) {
            const double rel = std::abs(current - prev) / std::max(std::abs(prev), 1e-30);
            flat_rounds = rel < kEarlyStopRelTol ? flat_rounds + 1 : 0;
        }
        prev = current;
        return flat_rounds >= kEarlyStopRounds;
    }
};

}  // namespace

ClusterState run_phase1(MatchSet& matches, const DescriptorSet& ds, const OptimizerConfig& cfg,
                        uint64_t seed, const TraceFn& trace) {
    if (matches.size() == 0) {
        throw std::invalid_argument("run_phase1: no matched points");
    }
    ClusterState state = make_initial_state(matches, ds, cfg, seed);

    // Matching starts one-hot on the nearest neighbor regardless of what a
    // previous run left in the match set.
    for (auto& row : matches.alpha) {
        std::fill(row.begin(), row.end(), 0.0);
        if (!row.empty()) row[0] = 1.0;
    }

    EarlyStop stop;
    for (int iter = 1; iter <= cfg.iter_max; ++iter) {
        update_centers(state, matches, ds, cfg);
        update_transforms(state, matches, ds, cfg);
        update_alpha(state, matches, ds, cfg);
        update_memberships(state, matches, ds, cfg);
        const double T = threshold_schedule(iter, cfg);
        if (cfg.enable_pruning) {
            prune_outliers(state, matches, ds, cfg, T);
            if (state.active_count() == 0) {
                state.warnings.push_back("all matched points pruned at iteration " +
                                         std::to_string(iter));
                break;
            }
        }
        const double c = cost(state, matches, ds, cfg);
        if (trace) {
            trace({1, iter, c, state.active_count(), T, &state});
        }
        if (cfg.enable_early_stop && stop.update(c)) {
            // Stopping is only a pure budget cut if the rest of the schedule
            // could not prune anything further.
            if (!cfg.enable_pruning) break;
            const double final_T = threshold_schedule(cfg.iter_max, cfg);
            bool prunable = false;
            for (int k = 0; k < state.point_count && !prunable; ++k) {
                if (state.active[k] &&
                    point_prune_error(state, matches, ds, cfg, k) > final_T) {
                    prunable = true;
                }
            }
            if (!prunable) break;
        }
    }
    return state;
}

ClusterState fix_alpha_and_rerun(const ClusterState& phase1, MatchSet& matches,
                                 const DescriptorSet& ds, const OptimizerConfig& cfg,
                                 const TraceFn& trace) {
    ClusterState state = phase1;

    // Harden each row to its strongest neighbor; lower slot wins ties.
    for (auto& row : matches.alpha) {
        if (row.empty()) continue;
        size_t best = 0;
        for (size_t j = 1; j < row.size(); ++j) {
            if (row[j] > row[best]) best = j;
        }
        std::fill(row.begin(), row.end(), 0.0);
        row[best] = 1.0;
    }

    EarlyStop stop;
    for (int iter = 1; iter <= cfg.iter_max; ++iter) {
        update_centers(state, matches, ds, cfg);
        update_transforms(state, matches, ds, cfg);
        update_memberships(state, matches, ds, cfg);
        const double c = cost(state, matches, ds, cfg);
        if (trace) {
            trace({2, iter, c, state.active_count(), 0.0, &state});
        }
        if (cfg.enable_early_stop && stop.update(c)) break;
    }
    return state;
}

}  // namespace cmfd
