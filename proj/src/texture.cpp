#include "cmfd/texture.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace cmfd {

namespace {

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

/// One octave of value noise: random lattice values, smoothstep-blended.
void add_value_noise(GrayImage& img, int spacing, double amplitude, std::mt19937_64& rng) {
    const int gw = img.width / spacing + 2;
    const int gh = img.height / spacing + 2;
    std::vector<double> lattice(static_cast<size_t>(gw) * gh);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (double& v : lattice) v = unif(rng);

    for (int y = 0; y < img.height; ++y) {
        const double gy = static_cast<double>(y) / spacing;
        const int y0 = static_cast<int>(gy);
        const double fy = smoothstep(gy - y0);
        for (int x = 0; x < img.width; ++x) {
            const double gx = static_cast<double>(x) / spacing;
            const int x0 = static_cast<int>(gx);
            const double fx = smoothstep(gx - x0);
            const double v00 = lattice[static_cast<size_t>(y0) * gw + x0];
            const double v10 = lattice[static_cast<size_t>(y0) * gw + x0 + 1];
            const double v01 = lattice[static_cast<size_t>(y0 + 1) * gw + x0];
            const double v11 = lattice[static_cast<size_t>(y0 + 1) * gw + x0 + 1];
            const double top = v00 + fx * (v10 - v00);
            const double bot = v01 + fx * (v11 - v01);
            img.at(x, y) += amplitude * (top + fy * (bot - top));
        }
    }
}

/// Scattered soft elliptical spots. Small blobs at many scales give the
/// detector dense, well-localized extrema.
void add_blobs(GrayImage& img, int count, double r_lo, double r_hi, double amp_max,
               std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ux(0.0, img.width);
    std::uniform_real_distribution<double> uy(0.0, img.height);
    std::uniform_real_distribution<double> uradius(r_lo, r_hi);
    std::uniform_real_distribution<double> uamp(-amp_max, amp_max);
    std::uniform_real_distribution<double> uaspect(0.6, 1.7);
    std::uniform_real_distribution<double> uangle(0.0, 3.141592653589793);
    for (int b = 0; b < count; ++b) {
        const double cx = ux(rng), cy = uy(rng);
        const double r = uradius(rng);
        const double amp = uamp(rng);
        const double aspect = uaspect(rng);
        const double ang = uangle(rng);
        const double ca = std::cos(ang), sa = std::sin(ang);
        const int reach = static_cast<int>(3.0 * r * std::max(1.0, aspect)) + 1;
        const int x_lo = std::max(0, static_cast<int>(cx) - reach);
        const int x_hi = std::min(img.width - 1, static_cast<int>(cx) + reach);
        const int y_lo = std::max(0, static_cast<int>(cy) - reach);
        const int y_hi = std::min(img.height - 1, static_cast<int>(cy) + reach);
        for (int y = y_lo; y <= y_hi; ++y) {
            for (int x = x_lo; x <= x_hi; ++x) {
                const double dx = x - cx, dy = y - cy;
                const double u = (ca * dx + sa * dy) / r;
                const double v = (-sa * dx + ca * dy) / (r * aspect);
                const double d2 = u * u + v * v;
                if (d2 < 9.0) img.at(x, y) += amp * std::exp(-d2);
            }
        }
    }
}

}  // namespace

GrayImage synth_texture(int width, int height, uint64_t seed) {
    GrayImage img(width, height, 0.0);
    std::mt19937_64 rng(seed);

    double amplitude = 1.0;
    for (int spacing = 64; spacing >= 2; spacing /= 2) {
        add_value_noise(img, spacing, amplitude, rng);
        amplitude *= 0.72;
    }
    const int area = width * height;
    add_blobs(img, std::max(4, area / 16384), 12.0, width / 8.0, 1.6, rng);  // coarse structure
    add_blobs(img, std::max(60, area / 384), 2.5, 9.0, 1.4, rng);            // mid-scale spots
    add_blobs(img, std::max(120, area / 160), 1.2, 3.5, 1.2, rng);           // fine spots

    double lo = img.luminance[0], hi = img.luminance[0];
    for (double v : img.luminance) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double scale = hi > lo ? 235.0 / (hi - lo) : 0.0;
    for (double& v : img.luminance) {
        v = 10.0 + (v - lo) * scale;
    }
    return img;
}

}  // namespace cmfd
