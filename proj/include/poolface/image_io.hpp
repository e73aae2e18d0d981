#pragma once

#include <cstdint>
#include <string>

#include "poolface/raster.hpp"

namespace poolface {

/// Decodes an 8-bit image file into a float raster in [0, 1]. Grayscale
/// files give one channel, everything else is converted to RGB.
Raster read_image(const std::string& path);

/// Writes an 8-bit PNG (values rounded and clamped to 0..255).
void write_png(const std::string& path, const Raster& image);

inline std::uint8_t to_u8(float v) {
  const float scaled = v * 255.0f + 0.5f;
  if (!(scaled > 0.0f)) return 0;
  if (scaled >= 255.0f) return 255;
  return static_cast<std::uint8_t>(scaled);
}

}  // namespace poolface
