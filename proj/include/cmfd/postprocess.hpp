#pragma once

#include "cmfd/image.hpp"

namespace cmfd {

/// Drop 8-connected components whose area is strictly below
/// min_fraction * width * height pixels.
Mask remove_small_regions(const Mask& mask, double min_fraction);

/// Morphological closing (dilate then erode) with a Euclidean disc of the
/// given radius, followed by filling of background holes that are not
/// reachable from the image border.
Mask morphological_smooth(const Mask& mask, int radius);

}  // namespace cmfd
