#pragma once

#include <string>

#include "cmfd/image.hpp"

namespace cmfd {

/// Load a PNG or JPEG image and convert it to grayscale luminance.
/// Color inputs use ITU-R BT.601 weights 0.299 R + 0.587 G + 0.114 B,
/// kept as real values; already-gray inputs pass through unchanged.
/// Throws std::runtime_error for unreadable or undecodable files.
GrayImage load_image(const std::string& path);

/// Write a binary mask as an 8-bit PNG: flagged pixels 255, clean 0.
void write_mask(const Mask& mask, const std::string& path);

/// Read a binary mask previously written with write_mask (any nonzero
/// pixel counts as flagged).
Mask read_mask(const std::string& path);

/// Write luminance rounded to 8 bits. Used for forged-image output.
void write_gray(const GrayImage& img, const std::string& path);

/// Write the input image with the mask alpha-blended in red on top.
void write_overlay(const GrayImage& img, const Mask& mask, const std::string& path);

}  // namespace cmfd
