#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dnayield/core/error.hpp"
#include "dnayield/core/geometry.hpp"
#include "dnayield/core/random.hpp"
#include "dnayield/core/text.hpp"
#include "dnayield/mask/binary_mask.hpp"
#include "dnayield/mask/morphology.hpp"

namespace dnayield::features {

using geom::Point;

enum class Detector { lymphocyte_model, general_model };

inline const char* to_string(Detector d) {
  return d == Detector::lymphocyte_model ? "lymphocyte_model" : "general_model";
}

inline Detector parse_detector(std::string_view s) {
  if (s == "lymphocyte_model") return Detector::lymphocyte_model;
  if (s == "general_model") return Detector::general_model;
  throw InvalidInput("unknown detector '" + std::string(s) + "'");
}

struct BBox {
  double x = 0, y = 0, w = 0, h = 0;
};

struct CellDetection {
  std::string id;
  Point centroid;
  std::vector<Point> polygon;
  BBox bbox;
  Detector detector = Detector::general_model;
};

enum class TileClass { tumor, immune, stroma, epithelium, other, background };

inline TileClass parse_tile_class(std::string_view s) {
  if (s == "tumor") return TileClass::tumor;
  if (s == "immune") return TileClass::immune;
  if (s == "stroma") return TileClass::stroma;
  if (s == "epithelium") return TileClass::epithelium;
  if (s == "other") return TileClass::other;
  if (s == "background") return TileClass::background;
  throw InvalidInput("unknown tile class '" + std::string(s) + "'");
}

inline const char* to_string(TileClass c) {
  switch (c) {
    case TileClass::tumor: return "tumor";
    case TileClass::immune: return "immune";
    case TileClass::stroma: return "stroma";
    case TileClass::epithelium: return "epithelium";
    case TileClass::other: return "other";
    case TileClass::background: return "background";
  }
  return "other";
}

/// Per-tile tissue classes on a regular grid in slide pixel coordinates.
class TileClassMap {
 public:
  TileClassMap() = default;
  TileClassMap(int cols, int rows, int stride, Point origin = {})
      : cols_(cols), rows_(rows), stride_(stride), origin_(origin),
        classes_(static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows), TileClass::background) {
    detail::require(stride > 0, "tile stride must be positive");
    detail::require(cols >= 0 && rows >= 0, "tile grid dimensions must be non-negative");
  }

  int cols() const { return cols_; }
  int rows() const { return rows_; }
  int stride() const { return stride_; }
  Point origin() const { return origin_; }

  TileClass at(int tx, int ty) const { return classes_[static_cast<std::size_t>(ty) * cols_ + tx]; }
  void set(int tx, int ty, TileClass c) { classes_[static_cast<std::size_t>(ty) * cols_ + tx] = c; }

  /// Class of the tile containing slide point p, or nullopt outside the grid.
  std::optional<TileClass> class_at(Point p) const {
    const double fx = std::floor((p.x - origin_.x) / stride_);
    const double fy = std::floor((p.y - origin_.y) / stride_);
    if (fx < 0 || fy < 0 || fx >= cols_ || fy >= rows_) return std::nullopt;
    return at(static_cast<int>(fx), static_cast<int>(fy));
  }

  std::size_t count(TileClass c) const {
    std::size_t n = 0;
    for (auto v : classes_) n += (v == c);
    return n;
  }

  /// Slide extent covered by the grid, in slide pixels.
  double extent_x() const { return origin_.x + static_cast<double>(cols_) * stride_; }
  double extent_y() const { return origin_.y + static_cast<double>(rows_) * stride_; }

 private:
  int cols_ = 0;
  int rows_ = 0;
  int stride_ = 1;
  Point origin_;
  std::vector<TileClass> classes_;
};

/// Rasterizes the tiles of one class at `mask_magnification`.
inline mask::BinaryMask tiles_to_mask(const TileClassMap& tiles, TileClass which,
                                      double slide_magnification, double slide_pixel_pitch,
                                      double mask_magnification) {
  const double s = mask_magnification / slide_magnification;
  const int w = static_cast<int>(std::ceil(tiles.extent_x() * s - 1e-9));
  const int h = static_cast<int>(std::ceil(tiles.extent_y() * s - 1e-9));
  mask::BinaryMask m(w, h, mask_magnification, slide_pixel_pitch / s);
  for (int ty = 0; ty < tiles.rows(); ++ty)
    for (int tx = 0; tx < tiles.cols(); ++tx) {
      if (tiles.at(tx, ty) != which) continue;
      const double x0 = tiles.origin().x + static_cast<double>(tx) * tiles.stride();
      const double y0 = tiles.origin().y + static_cast<double>(ty) * tiles.stride();
      const int px0 = static_cast<int>(std::floor(x0 * s + 1e-9));
      const int py0 = static_cast<int>(std::floor(y0 * s + 1e-9));
      const int px1 = static_cast<int>(std::floor((x0 + tiles.stride()) * s + 1e-9));
      const int py1 = static_cast<int>(std::floor((y0 + tiles.stride()) * s + 1e-9));
      for (int y = py0; y < std::max(py1, py0 + 1) && y < h; ++y)
        for (int x = px0; x < std::max(px1, px0 + 1) && x < w; ++x) m.set(x, y);
    }
  return m;
}

enum class CellClass { lymphocyte, tumor_cell, stromal_cell, epithelial_cell, other_cell };

inline const char* to_string(CellClass c) {
  switch (c) {
    case CellClass::lymphocyte: return "lymphocyte";
    case CellClass::tumor_cell: return "tumor_cell";
    case CellClass::stromal_cell: return "stromal_cell";
    case CellClass::epithelial_cell: return "epithelial_cell";
    case CellClass::other_cell: return "other_cell";
  }
  return "other_cell";
}

struct ClassifiedCell {
  CellDetection detection;
  CellClass cell_class = CellClass::other_cell;
};

struct Classification {
  std::vector<ClassifiedCell> cells;
  std::size_t matched_general = 0;  // general detections absorbed by a lymphocyte detection
  std::size_t outside_grid = 0;
};

inline CellClass cell_class_for_tile(TileClass t) {
  switch (t) {
    case TileClass::tumor: return CellClass::tumor_cell;
    case TileClass::stroma: return CellClass::stromal_cell;
    case TileClass::epithelium: return CellClass::epithelial_cell;
    default: return CellClass::other_cell;
  }
}

/// Lymphocyte-model detections are lymphocytes. General-model detections
/// within `match_radius` of a lymphocyte detection are the same nucleus and
/// are dropped; the rest take the class of the tile holding their centroid.
inline Classification classify_cells(const std::vector<CellDetection>& general,
                                     const std::vector<CellDetection>& lymph,
                                     const TileClassMap& tiles, double match_radius = 5.0) {
  Classification out;
  out.cells.reserve(general.size() + lymph.size());
  // Spatial hash of lymphocyte centroids, bucket side = match radius.
  const double cell = std::max(match_radius, 1.0);
  auto key = [cell](double x, double y) {
    const auto kx = static_cast<std::int64_t>(std::floor(x / cell));
    const auto ky = static_cast<std::int64_t>(std::floor(y / cell));
    return (kx << 32) ^ (ky & 0xffffffff);
  };
  std::unordered_multimap<std::int64_t, std::size_t> grid;
  for (std::size_t i = 0; i < lymph.size(); ++i) {
    grid.emplace(key(lymph[i].centroid.x, lymph[i].centroid.y), i);
    out.cells.push_back({lymph[i], CellClass::lymphocyte});
  }
  const double r2 = match_radius * match_radius;
  for (const auto& g : general) {
    bool matched = false;
    for (int dy = -1; dy <= 1 && !matched; ++dy)
      for (int dx = -1; dx <= 1 && !matched; ++dx) {
        const auto range = grid.equal_range(key(g.centroid.x + dx * cell, g.centroid.y + dy * cell));
        for (auto it = range.first; it != range.second; ++it) {
          const auto& l = lymph[it->second].centroid;
          const double ddx = l.x - g.centroid.x, ddy = l.y - g.centroid.y;
          if (ddx * ddx + ddy * ddy <= r2) {
            matched = true;
            break;
          }
        }
      }
    if (matched) {
      ++out.matched_general;
      continue;
    }
    const auto tc = tiles.class_at(g.centroid);
    if (!tc) ++out.outside_grid;
    out.cells.push_back({g, tc ? cell_class_for_tile(*tc) : CellClass::other_cell});
  }
  return out;
}

/// Scope restriction: cells whose centroid falls on a foreground pixel of
/// `scope` (coordinates scaled from slide to mask magnification).
inline bool centroid_in_scope(const Point& c, const mask::BinaryMask& scope, double slide_magnification) {
  const double s = scope.magnification() / slide_magnification;
  const double fx = std::floor(c.x * s + 1e-9), fy = std::floor(c.y * s + 1e-9);
  if (fx < 0 || fy < 0 || fx >= scope.width() || fy >= scope.height()) return false;
  return scope.at(static_cast<int>(fx), static_cast<int>(fy));
}

inline std::vector<ClassifiedCell> filter_to_scope(const std::vector<ClassifiedCell>& cells,
                                                   const mask::BinaryMask* scope,
                                                   double slide_magnification) {
  if (!scope) return cells;
  std::vector<ClassifiedCell> out;
  for (const auto& c : cells)
    if (centroid_in_scope(c.detection.centroid, *scope, slide_magnification)) out.push_back(c);
  return out;
}

/// (total, tumor, lymphocyte, % tumor, % lymphocyte); percentages are 0 for no cells.
inline std::array<double, 5> cell_count_features(const std::vector<ClassifiedCell>& cells) {
  double tumor = 0, lymph = 0;
  for (const auto& c : cells) {
    tumor += c.cell_class == CellClass::tumor_cell;
    lymph += c.cell_class == CellClass::lymphocyte;
  }
  const double total = static_cast<double>(cells.size());
  if (total == 0) return {0, 0, 0, 0, 0};
  return {total, tumor, lymph, 100.0 * tumor / total, 100.0 * lymph / total};
}

inline std::array<double, 5> cell_count_features(const std::vector<ClassifiedCell>& cells,
                                                 const mask::BinaryMask* scope,
                                                 double slide_magnification) {
  return cell_count_features(filter_to_scope(cells, scope, slide_magnification));
}

/// Uniform sample without replacement; input order is preserved.
inline std::vector<ClassifiedCell> sample_cells(const std::vector<ClassifiedCell>& cells, std::size_t n,
                                                std::uint64_t seed) {
  detail::require(n > 0, "sample_cells: n must be positive");
  if (cells.size() <= n) return cells;
  Rng rng(seed);
  std::vector<ClassifiedCell> out;
  out.reserve(n);
  for (auto i : rng.sample_indices(cells.size(), n)) out.push_back(cells[i]);
  return out;
}

// ---- CSV -------------------------------------------------------------------

inline std::vector<CellDetection> parse_cells_csv(std::string_view body, Detector expected,
                                                  const std::string& source = "cells") {
  const auto t = text::parse_csv(body);
  const int c_id = t.require_column("cell_id"), c_det = t.require_column("detector");
  const int c_cx = t.require_column("cx"), c_cy = t.require_column("cy");
  const int c_bx = t.require_column("bx"), c_by = t.require_column("by");
  const int c_bw = t.require_column("bw"), c_bh = t.require_column("bh");
  const int c_poly = t.require_column("polygon");
  std::vector<CellDetection> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = source + " row " + std::to_string(r + 1);
    CellDetection d;
    d.id = row[c_id];
    d.detector = parse_detector(row[c_det]);
    if (d.detector != expected)
      throw InvalidInput(where + ": detector '" + row[c_det] + "' in the " + to_string(expected) + " file");
    d.centroid = {text::to_double(row[c_cx], "cx"), text::to_double(row[c_cy], "cy")};
    d.bbox = {text::to_double(row[c_bx], "bx"), text::to_double(row[c_by], "by"),
              text::to_double(row[c_bw], "bw"), text::to_double(row[c_bh], "bh")};
    std::vector<std::string> coords;
    for (auto& tok : text::split(row[c_poly], ' '))
      if (!tok.empty()) coords.push_back(tok);
    if (coords.size() % 2 != 0) throw InvalidInput(where + ": polygon has an odd coordinate count");
    for (std::size_t i = 0; i < coords.size(); i += 2)
      d.polygon.push_back({text::to_double(coords[i], "polygon"), text::to_double(coords[i + 1], "polygon")});
    if (d.bbox.w < 0 || d.bbox.h < 0) throw InvalidInput(where + ": negative bbox size");
    if (d.centroid.x < d.bbox.x || d.centroid.x > d.bbox.x + d.bbox.w || d.centroid.y < d.bbox.y ||
        d.centroid.y > d.bbox.y + d.bbox.h)
      throw InvalidInput(where + ": centroid outside bbox");
    out.push_back(std::move(d));
  }
  return out;
}

inline std::string format_cells_csv(const std::vector<CellDetection>& cells) {
  std::string out = "cell_id,detector,cx,cy,bx,by,bw,bh,polygon\n";
  for (const auto& c : cells) {
    out += c.id + "," + to_string(c.detector) + "," + text::format_double(c.centroid.x) + "," +
           text::format_double(c.centroid.y) + "," + text::format_double(c.bbox.x) + "," +
           text::format_double(c.bbox.y) + "," + text::format_double(c.bbox.w) + "," +
           text::format_double(c.bbox.h) + ",";
    for (std::size_t i = 0; i < c.polygon.size(); ++i) {
      if (i) out += ' ';
      out += text::format_double(c.polygon[i].x) + " " + text::format_double(c.polygon[i].y);
    }
    out += '\n';
  }
  return out;
}

/// Grid metadata lives in a comment line: `# stride=32 origin_x=0 origin_y=0 cols=64 rows=64`.
inline TileClassMap parse_tile_map_csv(std::string_view body) {
  const auto t = text::parse_csv(body);
  std::map<std::string, std::string> meta;
  for (const auto& c : t.comments)
    for (const auto& tok : text::split(c, ' ')) {
      const auto eq = tok.find('=');
      if (eq != std::string::npos) meta[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
  auto num = [&](const char* k, std::optional<double> dflt) {
    const auto it = meta.find(k);
    if (it == meta.end()) {
      if (!dflt) throw InvalidInput(std::string("tile map metadata missing '") + k + "'");
      return *dflt;
    }
    return text::to_double(it->second, k);
  };
  const int c_x = t.require_column("tile_x"), c_y = t.require_column("tile_y");
  const int c_c = t.require_column("class");
  int max_x = -1, max_y = -1;
  for (const auto& row : t.rows) {
    max_x = std::max(max_x, static_cast<int>(text::to_int(row[c_x], "tile_x")));
    max_y = std::max(max_y, static_cast<int>(text::to_int(row[c_y], "tile_y")));
  }
  const int cols = static_cast<int>(num("cols", max_x + 1));
  const int rows = static_cast<int>(num("rows", max_y + 1));
  TileClassMap m(cols, rows, static_cast<int>(num("stride", std::nullopt)),
                 {num("origin_x", 0.0), num("origin_y", 0.0)});
  for (const auto& row : t.rows) {
    const auto x = text::to_int(row[c_x], "tile_x"), y = text::to_int(row[c_y], "tile_y");
    if (x < 0 || y < 0 || x >= cols || y >= rows) throw InvalidInput("tile index outside declared grid");
    m.set(static_cast<int>(x), static_cast<int>(y), parse_tile_class(row[c_c]));
  }
  return m;
}

/// Background tiles are implicit and not written.
inline std::string format_tile_map_csv(const TileClassMap& m) {
  std::string out = "# stride=" + std::to_string(m.stride()) + " origin_x=" +
                    text::format_double(m.origin().x) + " origin_y=" + text::format_double(m.origin().y) +
                    " cols=" + std::to_string(m.cols()) + " rows=" + std::to_string(m.rows()) +
                    "\ntile_x,tile_y,class\n";
  for (int y = 0; y < m.rows(); ++y)
    for (int x = 0; x < m.cols(); ++x)
      if (m.at(x, y) != TileClass::background)
        out += std::to_string(x) + "," + std::to_string(y) + "," + to_string(m.at(x, y)) + "\n";
  return out;
}

}  // namespace dnayield::features
