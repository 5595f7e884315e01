#pragma once

// Masks on disk: binary PGM (P5), 0 = background, 255 = foreground, with a
// `<file>.meta` sidecar holding magnification and pixel_pitch.

#include <cctype>
#include <sstream>
#include <string>

#include "dnayield/core/text.hpp"
#include "dnayield/mask/binary_mask.hpp"

namespace dnayield::mask {

inline std::string encode_pgm(const BinaryMask& m) {
  std::string out = "P5\n" + std::to_string(m.width()) + " " + std::to_string(m.height()) + "\n255\n";
  out.reserve(out.size() + m.size());
  for (auto v : m.data()) out.push_back(v ? static_cast<char>(255) : static_cast<char>(0));
  return out;
}

inline std::string encode_sidecar(const BinaryMask& m) {
  return "magnification=" + text::format_double(m.magnification()) + "\npixel_pitch=" +
         text::format_double(m.pixel_pitch()) + "\n";
}

namespace impl {

// Reads the next whitespace-delimited header token, skipping '#' comments.
inline std::string pnm_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos) throw InvalidInput("truncated PNM header");
  return bytes.substr(start, pos - start);
}

}  // namespace impl

/// Any nonzero gray level counts as foreground.
inline BinaryMask decode_pgm(const std::string& bytes, double magnification, double pixel_pitch) {
  std::size_t pos = 0;
  if (impl::pnm_token(bytes, pos) != "P5") throw InvalidInput("mask raster is not a binary PGM (P5)");
  const auto w = text::to_int(impl::pnm_token(bytes, pos), "width");
  const auto h = text::to_int(impl::pnm_token(bytes, pos), "height");
  const auto maxval = text::to_int(impl::pnm_token(bytes, pos), "maxval");
  if (maxval != 255) throw InvalidInput("mask raster must be 8-bit");
  ++pos;  // single whitespace after maxval
  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() < pos + n) throw InvalidInput("mask raster truncated");
  BinaryMask m(static_cast<int>(w), static_cast<int>(h), magnification, pixel_pitch);
  for (std::size_t i = 0; i < n; ++i) m.data()[i] = bytes[pos + i] != 0 ? 1 : 0;
  return m;
}

inline void write_mask(const BinaryMask& m, const std::string& path) {
  text::write_file(path, encode_pgm(m));
  text::write_file(path + ".meta", encode_sidecar(m));
}

inline BinaryMask read_mask(const std::string& path) {
  const auto kv = text::parse_key_values(text::read_file(path + ".meta"));
  auto get = [&](const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw InvalidInput(path + ".meta: missing " + key);
    return text::to_double(it->second, key);
  };
  return decode_pgm(text::read_file(path), get("magnification"), get("pixel_pitch"));
}

}  // namespace dnayield::mask
