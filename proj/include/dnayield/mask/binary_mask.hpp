#pragma once

#include <cstdint>
#include <vector>

#include "dnayield/core/error.hpp"

namespace dnayield::mask {

/// Foreground/background raster tagged with the magnification it was sampled at.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, double magnification, double pixel_pitch_um)
      : width_(width), height_(height), magnification_(magnification),
        pixel_pitch_(pixel_pitch_um),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {
    detail::require(width >= 0 && height >= 0, "mask dimensions must be non-negative");
    detail::require(magnification > 0.0, "mask magnification must be positive");
    detail::require(pixel_pitch_um > 0.0, "mask pixel pitch must be positive");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double magnification() const { return magnification_; }
  /// Micrometers per pixel.
  double pixel_pitch() const { return pixel_pitch_; }
  std::size_t size() const { return data_.size(); }

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool at(int x, int y) const { return data_[index(x, y)] != 0; }
  bool get(int x, int y) const { return in_bounds(x, y) && at(x, y); }
  void set(int x, int y, bool v = true) { data_[index(x, y)] = v ? 1 : 0; }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  std::size_t foreground_count() const {
    std::size_t n = 0;
    for (auto v : data_) n += (v != 0);
    return n;
  }
  bool empty() const { return foreground_count() == 0; }

  double physical_area_mm2() const {
    const double mm = pixel_pitch_ / 1000.0;
    return static_cast<double>(foreground_count()) * mm * mm;
  }

  /// Same geometry, all background.
  BinaryMask blank_like() const { return BinaryMask(width_, height_, magnification_, pixel_pitch_); }

  bool same_geometry(const BinaryMask& o) const {
    return width_ == o.width_ && height_ == o.height_ && magnification_ == o.magnification_ &&
           pixel_pitch_ == o.pixel_pitch_;
  }

  /// Every foreground pixel of this mask is foreground in `o`.
  bool subset_of(const BinaryMask& o) const {
    detail::require(width_ == o.width_ && height_ == o.height_, "subset_of: dimension mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i)
      if (data_[i] && !o.data_[i]) return false;
    return true;
  }

  friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.same_geometry(b) && a.data_ == b.data_;
  }

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  double magnification_ = 1.0;
  double pixel_pitch_ = 1.0;
  std::vector<std::uint8_t> data_;
};

inline BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  detail::require(a.width() == b.width() && a.height() == b.height(), "union: dimension mismatch");
  BinaryMask out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a.data()[i] | b.data()[i];
  return out;
}

inline BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b) {
  detail::require(a.width() == b.width() && a.height() == b.height(),
                  "intersection: dimension mismatch");
  BinaryMask out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a.data()[i] & b.data()[i];
  return out;
}

inline BinaryMask full_mask(int w, int h, double magnification, double pitch) {
  BinaryMask m(w, h, magnification, pitch);
  for (auto& v : m.data()) v = 1;
  return m;
}

}  // namespace dnayield::mask
