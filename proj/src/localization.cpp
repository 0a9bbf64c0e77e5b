#include "cmfd/localization.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "cmfd/parallel.hpp"

namespace cmfd {

namespace {

constexpr double kVarianceFloor = 1e-12;

/// Correlation of the two sampled windows; the A-side window is pulled
/// through the inverse of the linear part so that, on a genuine duplicate,
/// it lines up sample-for-sample with the window around the mapped pixel.
double correlate_windows(const GrayImage& img, double cx, double cy,
                         const AffineTransform& inv_linear, double mx, double my, int half) {
    const int n = (2 * half + 1) * (2 * half + 1);
    double sum_a = 0.0, sum_b = 0.0, sum_aa = 0.0, sum_bb = 0.0, sum_ab = 0.0;
    for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx) {
            const Vec2 off = inv_linear.apply_linear({static_cast<double>(dx),
                                                      static_cast<double>(dy)});
            const double va = sample_bilinear(img, cx + off.x, cy + off.y);
            const double vb = sample_bilinear(img, mx + dx, my + dy);
            sum_a += va;
            sum_b += vb;
            sum_aa += va * va;
            sum_bb += vb * vb;
            sum_ab += va * vb;
        }
    }
    const double var_a = sum_aa - sum_a * sum_a / n;
    const double var_b = sum_bb - sum_b * sum_b / n;
    if (var_a < kVarianceFloor || var_b < kVarianceFloor) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double cov = sum_ab - sum_a * sum_b / n;
    return cov / std::sqrt(var_a * var_b);
}

}  // namespace

double correlation_at(const GrayImage& img, int px, int py, const AffineTransform& h,
                      int window) {
    if (window < 1 || window % 2 == 0) {
        throw std::invalid_argument("correlation_at: window must be odd and positive");
    }
    if (h.det() == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    AffineTransform linear = h;
    linear.tx = 0.0;
    linear.ty = 0.0;
    const AffineTransform inv_linear = linear.inverse();
    const Vec2 mapped = h.apply({static_cast<double>(px), static_cast<double>(py)});
    return correlate_windows(img, px, py, inv_linear, mapped.x, mapped.y, window / 2);
}

DetectionMap build_detection_map(const GrayImage& img, const ClusterState& state,
                                 double binarize_threshold, int window, int threads,
                                 std::vector<std::string>* warnings) {
    if (window < 1 || window % 2 == 0) {
        throw std::invalid_argument("build_detection_map: window must be odd and positive");
    }
    DetectionMap map;
    map.width = img.width;
    map.height = img.height;
    map.corr.assign(img.pixel_count(), std::numeric_limits<float>::quiet_NaN());
    map.mask = Mask(img.width, img.height);

    std::vector<int> usable;
    for (int i = 0; i < state.cluster_count; ++i) {
        if (!state.degenerate[i] && !state.empty_cluster[i]) usable.push_back(i);
    }
    if (usable.empty()) {
        if (warnings) warnings->push_back("no usable cluster transform; empty detection map");
        return map;
    }

    std::vector<AffineTransform> inv_linear(state.cluster_count);
    for (int i : usable) {
        AffineTransform linear = state.transforms[i];
        linear.tx = 0.0;
        linear.ty = 0.0;
        inv_linear[i] = linear.inverse();
    }

    // Nearest usable cluster per pixel (lower index wins ties via the
    // iteration order over `usable`).
    std::vector<uint16_t> chosen(img.pixel_count(), 0);
    const int half = window / 2;
    parallel_for(0, img.height, threads, [&](int y) {
        for (int x = 0; x < img.width; ++x) {
            int nearest = usable.front();
            double best = std::numeric_limits<double>::infinity();
            for (int i : usable) {
                const double dx = state.centers[i].x - x;
                const double dy = state.centers[i].y - y;
                const double d = dx * dx + dy * dy;
                if (d < best) {
                    best = d;
                    nearest = i;
                }
            }
            chosen[static_cast<size_t>(y) * img.width + x] = static_cast<uint16_t>(nearest);
            const AffineTransform& h = state.transforms[nearest];
            const Vec2 mapped = h.apply({static_cast<double>(x), static_cast<double>(y)});
            map.corr[static_cast<size_t>(y) * img.width + x] = static_cast<float>(
                correlate_windows(img, x, y, inv_linear[nearest], mapped.x, mapped.y, half));
        }
    });

    // Threshold pass, marking both the pixel and its mapped counterpart
    // (source and target carry the same duplicated material). Sequential so
    // overlapping destination writes stay schedule-independent.
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const float c = map.corr_at(x, y);
            if (std::isnan(c) || c < binarize_threshold) continue;
            map.mask.set(x, y, 1);
            const AffineTransform& h = state.transforms[chosen[static_cast<size_t>(y) * img.width + x]];
            const Vec2 mapped = h.apply({static_cast<double>(x), static_cast<double>(y)});
            const int mx = static_cast<int>(std::lround(mapped.x));
            const int my = static_cast<int>(std::lround(mapped.y));
            if (mx >= 0 && mx < map.width && my >= 0 && my < map.height) {
                map.mask.set(mx, my, 1);
            }
        }
    }
    return map;
}

}  // namespace cmfd
