#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pano {

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb8&) const = default;
};

// Row-major 2D grid. Row 0 is the top row.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int height, int width, T fill = T{})
      : height_(height), width_(width),
        data_(static_cast<std::size_t>(height) * width, fill) {
    if (height < 1 || width < 1)
      throw std::invalid_argument("Image: dimensions must be >= 1");
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int i, int j) { return data_[static_cast<std::size_t>(i) * width_ + j]; }
  const T& at(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * width_ + j];
  }
  T& operator[](std::size_t p) { return data_[p]; }
  const T& operator[](std::size_t p) const { return data_[p]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  bool same_shape(int h, int w) const { return height_ == h && width_ == w; }
  template <typename U>
  bool same_shape(const Image<U>& other) const {
    return same_shape(other.height(), other.width());
  }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

using FloatMap = Image<float>;
using DepthMap = Image<float>;   // meters; +inf marks "no surface"
using WeightMap = Image<float>;  // nonnegative
using RgbImage = Image<Rgb8>;
using ByteMap = Image<std::uint8_t>;

inline constexpr float kInfDepth = std::numeric_limits<float>::infinity();

}  // namespace pano
