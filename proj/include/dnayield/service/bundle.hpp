#pragma once

// A slide bundle is the unit of ingest: tile class map, the two cell
// detection files, an optional RGB raster and a little metadata. Parts are
// kept as raw bytes so that the content hash is stable across parse/format
// round trips.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dnayield/core/error.hpp"
#include "dnayield/core/hash.hpp"
#include "dnayield/core/text.hpp"
#include "dnayield/features/feature_vector.hpp"
#include "dnayield/service/synthetic_slides.hpp"

namespace dnayield::service {

struct SlideMetadata {
  double magnification = 10.0;
  double pixel_pitch = 1.0;  // micrometers per pixel at `magnification`
  std::string cancer_type;
  std::string procedure;
  std::string collected_at;
};

struct SlideBundle {
  std::string slide_id;  // assigned at ingest
  std::optional<std::string> tile_map;       // CSV
  std::optional<std::string> general_cells;  // CSV
  std::optional<std::string> lymph_cells;    // CSV
  std::optional<std::string> image;          // binary PPM
  SlideMetadata metadata;
};

/// Collected field-level problems, reported together.
class BundleError : public InvalidInput {
 public:
  explicit BundleError(std::vector<std::string> fields)
      : InvalidInput("bundle rejected: " + join(fields)), fields_(std::move(fields)) {}
  const std::vector<std::string>& fields() const { return fields_; }

 private:
  static std::string join(const std::vector<std::string>& f) {
    std::string s;
    for (const auto& x : f) s += (s.empty() ? "" : "; ") + x;
    return s;
  }
  std::vector<std::string> fields_;
};

inline const std::vector<std::string>& bundle_part_names() {
  static const std::vector<std::string> n = {"tile_map", "general_cells", "lymph_cells", "image"};
  return n;
}

inline std::string format_metadata(const SlideMetadata& m) {
  return "magnification=" + text::format_double(m.magnification) + "\npixel_pitch=" + text::format_double(m.pixel_pitch) +
         "\ncancer_type=" + m.cancer_type + "\nprocedure=" + m.procedure + "\ncollected_at=" + m.collected_at + "\n";
}

inline SlideMetadata parse_metadata(std::string_view body) {
  const auto kv = text::parse_key_values(body);
  SlideMetadata m;
  auto str = [&](const char* k) {
    const auto it = kv.find(k);
    return it == kv.end() ? std::string() : it->second;
  };
  if (kv.count("magnification")) m.magnification = text::to_double(kv.at("magnification"), "magnification");
  if (kv.count("pixel_pitch")) m.pixel_pitch = text::to_double(kv.at("pixel_pitch"), "pixel_pitch");
  m.cancer_type = str("cancer_type");
  m.procedure = str("procedure");
  m.collected_at = str("collected_at");
  return m;
}

/// Parsed inputs for the feature generator; throws BundleError listing
/// every part that is missing or fails its schema.
inline features::SlideInputs parse_bundle(const SlideBundle& b) {
  std::vector<std::string> errors;
  features::SlideInputs in;
  in.slide_id = b.slide_id;
  in.magnification = b.metadata.magnification;
  in.pixel_pitch = b.metadata.pixel_pitch;
  if (!(b.metadata.magnification > 0.0) || !std::isfinite(b.metadata.magnification))
    errors.push_back("metadata.magnification: must be positive");
  if (!(b.metadata.pixel_pitch > 0.0) || !std::isfinite(b.metadata.pixel_pitch))
    errors.push_back("metadata.pixel_pitch: must be positive");
  auto part = [&](const char* name, const std::optional<std::string>& bytes, auto&& parse) {
    if (!bytes) {
      errors.push_back(std::string(name) + ": missing reference");
      return;
    }
    try {
      parse(*bytes);
    } catch (const std::exception& e) {
      errors.push_back(std::string(name) + ": " + e.what());
    }
  };
  part("tile_map", b.tile_map, [&](const std::string& s) {
    in.tiles = features::parse_tile_map_csv(s);
    if (in.tiles.cols() == 0 || in.tiles.rows() == 0) throw InvalidInput("empty tile grid");
  });
  part("general_cells", b.general_cells,
       [&](const std::string& s) { in.general = features::parse_cells_csv(s, features::Detector::general_model, "general_cells"); });
  part("lymph_cells", b.lymph_cells,
       [&](const std::string& s) { in.lymph = features::parse_cells_csv(s, features::Detector::lymphocyte_model, "lymph_cells"); });
  if (b.image) {
    try {
      in.image = features::decode_ppm(*b.image);
    } catch (const std::exception& e) {
      errors.push_back(std::string("image: ") + e.what());
    }
  }
  if (!errors.empty()) throw BundleError(std::move(errors));
  return in;
}

/// SHA-256 over a length-prefixed canonical serialization of the parts.
inline std::string bundle_content_hash(const SlideBundle& b) {
  Sha256 h;
  auto put = [&](std::string_view name, const std::optional<std::string>& bytes) {
    h.update(name);
    h.update(bytes ? ":" + std::to_string(bytes->size()) + "\n" : std::string(":-\n"));
    if (bytes) h.update(*bytes);
  };
  put("tile_map", b.tile_map);
  put("general_cells", b.general_cells);
  put("lymph_cells", b.lymph_cells);
  put("image", b.image);
  put("metadata", format_metadata(b.metadata));
  return h.hex();
}

inline std::string slide_id_for_hash(const std::string& hash) { return "sl-" + hash.substr(0, 16); }

// ---- directories on disk ----------------------------------------------------------

inline const char* part_file_name(const std::string& part) {
  if (part == "tile_map") return "tile_map.csv";
  if (part == "general_cells") return "general_cells.csv";
  if (part == "lymph_cells") return "lymph_cells.csv";
  return "image.ppm";
}

/// Reads tile_map.csv, general_cells.csv, lymph_cells.csv, image.ppm and
/// metadata.txt from `dir`; absent files stay absent.
inline SlideBundle read_bundle_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("bundle directory not found: " + dir.string());
  SlideBundle b;
  auto opt = [&](const char* name) -> std::optional<std::string> {
    const auto p = dir / name;
    if (!std::filesystem::exists(p)) return std::nullopt;
    return text::read_file(p.string());
  };
  b.tile_map = opt("tile_map.csv");
  b.general_cells = opt("general_cells.csv");
  b.lymph_cells = opt("lymph_cells.csv");
  b.image = opt("image.ppm");
  if (auto meta = opt("metadata.txt")) b.metadata = parse_metadata(*meta);
  return b;
}

inline void write_bundle_dir(const SlideBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  if (b.tile_map) text::write_file((dir / "tile_map.csv").string(), *b.tile_map);
  if (b.general_cells) text::write_file((dir / "general_cells.csv").string(), *b.general_cells);
  if (b.lymph_cells) text::write_file((dir / "lymph_cells.csv").string(), *b.lymph_cells);
  if (b.image) text::write_file((dir / "image.ppm").string(), *b.image);
  text::write_file((dir / "metadata.txt").string(), format_metadata(b.metadata));
}

inline SlideBundle bundle_from_synthetic(const SyntheticSlide& s, const std::string& collected_at = "") {
  SlideBundle b;
  b.tile_map = features::format_tile_map_csv(s.inputs.tiles);
  b.general_cells = features::format_cells_csv(s.inputs.general);
  b.lymph_cells = features::format_cells_csv(s.inputs.lymph);
  if (s.inputs.image) b.image = features::encode_ppm(*s.inputs.image);
  b.metadata.magnification = s.inputs.magnification;
  b.metadata.pixel_pitch = s.inputs.pixel_pitch;
  b.metadata.cancer_type = s.cancer_type;
  b.metadata.procedure = s.procedure;
  b.metadata.collected_at = collected_at;
  return b;
}

}  // namespace dnayield::service
