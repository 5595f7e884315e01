#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dnayield/core/error.hpp"
#include "dnayield/core/text.hpp"
#include "dnayield/mask/mask_io.hpp"

namespace dnayield::features {

/// 8-bit interleaved RGB raster in slide pixel coordinates.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height) : width_(width), height_(height) {
    detail::require(width >= 0 && height >= 0, "image dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(width) * height * 3, 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  const std::uint8_t* pixel(int x, int y) const { return &data_[(static_cast<std::size_t>(y) * width_ + x) * 3]; }
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = &data_[(static_cast<std::size_t>(y) * width_ + x) * 3];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
  void fill(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    for (int y = 0; y < height_; ++y)
      for (int x = 0; x < width_; ++x) set(x, y, r, g, b);
  }

  const std::vector<std::uint8_t>& data() const { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

inline std::string encode_ppm(const RgbImage& im) {
  std::string out = "P6\n" + std::to_string(im.width()) + " " + std::to_string(im.height()) + "\n255\n";
  out.append(im.data().begin(), im.data().end());
  return out;
}

inline RgbImage decode_ppm(const std::string& bytes) {
  std::size_t pos = 0;
  if (mask::impl::pnm_token(bytes, pos) != "P6") throw InvalidInput("not a binary PPM (P6) image");
  const auto w = text::to_int(mask::impl::pnm_token(bytes, pos), "ppm width");
  const auto h = text::to_int(mask::impl::pnm_token(bytes, pos), "ppm height");
  const auto maxval = text::to_int(mask::impl::pnm_token(bytes, pos), "ppm maxval");
  if (maxval != 255) throw InvalidInput("only 8-bit PPM images are supported");
  if (w < 0 || h < 0) throw InvalidInput("negative PPM dimensions");
  ++pos;  // single whitespace byte before the raster
  const auto need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (bytes.size() < pos + need) throw InvalidInput("truncated PPM raster");
  RgbImage im(static_cast<int>(w), static_cast<int>(h));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data() + pos + (static_cast<std::size_t>(y) * w + x) * 3);
      im.set(x, y, p[0], p[1], p[2]);
    }
  return im;
}

}  // namespace dnayield::features
