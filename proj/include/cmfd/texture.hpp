#pragma once

#include <cstdint>

#include "cmfd/image.hpp"

namespace cmfd {

/// Deterministic procedural texture: multi-octave smoothed value noise with
/// a handful of soft elliptical blobs. Produces keypoint-rich, aperiodic
/// images for the synthetic benchmark and the bundled test data.
GrayImage synth_texture(int width, int height, uint64_t seed);

}  // namespace cmfd
