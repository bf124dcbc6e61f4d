#pragma once

#include <string>

#include "pano/image.hpp"
#include "pano/layout.hpp"

namespace pano {

// 8-bit RGB PNG. 16-bit files are rejected; gray/palette inputs are
// expanded to RGB on read.
RgbImage read_png(const std::string& path);
void write_png(const RgbImage& img, const std::string& path);

// Single-channel 8-bit grayscale PNG (masks, semantic indices).
ByteMap read_png_gray(const std::string& path);
void write_png_gray(const ByteMap& img, const std::string& path);

// Portable float map, single channel, little-endian (scale header -1.0).
// +inf round-trips bit-exactly; NaN is rejected on write.
FloatMap read_pfm(const std::string& path);
void write_pfm(const FloatMap& map, const std::string& path);

// Emits <prefix>_index.png (nearest class along the ray, 0 = none),
// <prefix>_legend.json, and one binary <prefix>_ch<k>.png per channel.
void write_semantic(const SemanticMap& map, const std::string& path_prefix);

}  // namespace pano
