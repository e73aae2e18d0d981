#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace poolface {

/// Planar 32-bit float image with values nominally in [0, 1].
///
/// Channel planes are stored back to back: plane c starts at c*W*H and is
/// row-major. Color rasters are RGB.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels, float fill = 0.0f);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  float& at(int c, int y, int x) noexcept { return data_[index(c, y, x)]; }
  float at(int c, int y, int x) const noexcept { return data_[index(c, y, x)]; }

  std::span<float> plane(int c) noexcept { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const float> plane(int c) const noexcept {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  bool same_shape(const Raster& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int c, int y, int x) const noexcept {
    return static_cast<std::size_t>(c) * plane_size() +
           static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// ITU-R BT.601 luma for RGB rasters; single-channel rasters are copied.
Raster to_grayscale(const Raster& image);

/// Bilinear sample at (x, y) in pixel-center coordinates; pixels outside the
/// raster read as 0.
float sample_bilinear(const Raster& image, int channel, double x, double y) noexcept;

/// Separable Gaussian blur with clamped borders. sigma <= 0 returns a copy.
Raster gaussian_blur(const Raster& image, double sigma);

/// Largest absolute per-sample difference. Shapes must match.
float max_abs_diff(const Raster& a, const Raster& b);

}  // namespace poolface
