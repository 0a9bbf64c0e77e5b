#include "cmfd/image.hpp"

#include <algorithm>
#include <cmath>

namespace cmfd {

size_t Mask::count() const {
    size_t n = 0;
    for (uint8_t v : data) n += (v != 0);
    return n;
}

double sample_bilinear(const GrayImage& img, double x, double y) {
    // Clamp the sample point into the raster, then interpolate between the
    // four surrounding pixel centers.
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = (1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0);
    const double bot = (1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1);
    return (1.0 - fy) * top + fy * bot;
}

GrayImage make_constant_image(int w, int h, double value) {
    return GrayImage(w, h, value);
}

}  // namespace cmfd
