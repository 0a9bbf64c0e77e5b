#include "cmfd/postprocess.hpp"

#include <stdexcept>
#include <utility>
#include <vector>

namespace cmfd {

namespace {

std::vector<std::pair<int, int>> disc_offsets(int radius) {
    std::vector<std::pair<int, int>> offs;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx * dx + dy * dy <= radius * radius) offs.emplace_back(dx, dy);
        }
    }
    return offs;
}

Mask dilate(const Mask& in, const std::vector<std::pair<int, int>>& offs) {
    Mask out(in.width, in.height);
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            if (!in.at(x, y)) continue;
            for (auto [dx, dy] : offs) {
                const int nx = x + dx, ny = y + dy;
                if (nx >= 0 && nx < in.width && ny >= 0 && ny < in.height) out.set(nx, ny, 1);
            }
        }
    }
    return out;
}

Mask erode(const Mask& in, const std::vector<std::pair<int, int>>& offs) {
    Mask out(in.width, in.height);
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            bool all = true;
            for (auto [dx, dy] : offs) {
                const int nx = x + dx, ny = y + dy;
                // Pixels outside the raster count as background.
                if (nx < 0 || nx >= in.width || ny < 0 || ny >= in.height || !in.at(nx, ny)) {
                    all = false;
                    break;
                }
            }
            if (all) out.set(x, y, 1);
        }
    }
    return out;
}

}  // namespace

Mask remove_small_regions(const Mask& mask, double min_fraction) {
    if (min_fraction < 0.0 || min_fraction >= 1.0) {
        throw std::invalid_argument("remove_small_regions: min_fraction must be in [0, 1)");
    }
    const double limit = min_fraction * mask.width * mask.height;
    Mask out = mask;
    std::vector<uint8_t> seen(mask.data.size(), 0);
    std::vector<int> stack;
    std::vector<int> component;
    for (int start = 0; start < static_cast<int>(mask.data.size()); ++start) {
        if (!mask.data[start] || seen[start]) continue;
        stack.assign(1, start);
        seen[start] = 1;
        component.clear();
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            component.push_back(p);
            const int x = p % mask.width;
            const int y = p / mask.width;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || nx >= mask.width || ny < 0 || ny >= mask.height) continue;
                    const int q = ny * mask.width + nx;
                    if (mask.data[q] && !seen[q]) {
                        seen[q] = 1;
                        stack.push_back(q);
                    }
                }
            }
        }
        // "Below" is strict: components exactly at the limit survive.
        if (static_cast<double>(component.size()) < limit) {
            for (int p : component) out.data[p] = 0;
        }
    }
    return out;
}

Mask morphological_smooth(const Mask& mask, int radius) {
    if (radius < 1) {
        throw std::invalid_argument("morphological_smooth: radius must be >= 1");
    }
    const auto offs = disc_offsets(radius);
    Mask closed = erode(dilate(mask, offs), offs);

    // Fill enclosed holes: background connected (4-neighborhood) to the
    // border stays background, the rest becomes foreground.
    std::vector<uint8_t> outside(closed.data.size(), 0);
    std::vector<int> stack;
    auto push_if_bg = [&](int x, int y) {
        const int p = y * closed.width + x;
        if (!closed.data[p] && !outside[p]) {
            outside[p] = 1;
            stack.push_back(p);
        }
    };
    for (int x = 0; x < closed.width; ++x) {
        push_if_bg(x, 0);
        push_if_bg(x, closed.height - 1);
    }
    for (int y = 0; y < closed.height; ++y) {
        push_if_bg(0, y);
        push_if_bg(closed.width - 1, y);
    }
    while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int x = p % closed.width;
        const int y = p / closed.width;
        if (x > 0) push_if_bg(x - 1, y);
        if (x + 1 < closed.width) push_if_bg(x + 1, y);
        if (y > 0) push_if_bg(x, y - 1);
        if (y + 1 < closed.height) push_if_bg(x, y + 1);
    }
    for (size_t p = 0; p < closed.data.size(); ++p) {
        if (!closed.data[p] && !outside[p]) closed.data[p] = 1;
    }
    return closed;
}

}  // namespace cmfd
