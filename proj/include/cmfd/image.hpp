#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cmfd {

/// Single-channel luminance raster. Values are real numbers in [0, 255];
/// they are never re-quantized after loading so that downstream window
/// correlation sees the full precision of the conversion.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> luminance;  // row-major, height*width entries

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0)
        : width(w), height(h), luminance(static_cast<size_t>(w) * h, fill) {}

    double at(int x, int y) const { return luminance[static_cast<size_t>(y) * width + x]; }
    double& at(int x, int y) { return luminance[static_cast<size_t>(y) * width + x]; }

    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

/// Binary mask over an image grid. data holds 0 or 1 per pixel.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;  // row-major, 0 = clean, 1 = flagged

    Mask() = default;
    Mask(int w, int h, uint8_t fill = 0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    void set(int x, int y, uint8_t v) { data[static_cast<size_t>(y) * width + x] = v; }

    size_t count() const;
    bool empty_mask() const { return count() == 0; }

    bool operator==(const Mask& other) const = default;
};

/// Bilinear sample at real coordinates; samples outside the raster clamp
/// to the nearest edge pixel.
double sample_bilinear(const GrayImage& img, double x, double y);

GrayImage make_constant_image(int w, int h, double value);

}  // namespace cmfd
