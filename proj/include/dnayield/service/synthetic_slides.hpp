#pragma once

// Desk-scale stand-in for clinical slides: blob-shaped tissue on a tile grid,
// cells planted on a jittered lattice, and extraction masses proportional to
// the planted cell count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "dnayield/core/random.hpp"
#include "dnayield/features/feature_vector.hpp"
#include "dnayield/model/yield_model.hpp"

namespace dnayield::service {

using features::CellDetection;
using features::Detector;
using features::Point;
using features::RgbImage;
using features::SlideInputs;
using features::TileClass;
using features::TileClassMap;

struct SlideSynthConfig {
  int n_slides = 10;
  int tissue_blobs = 3;
  double cell_density = 8.0;  // expected cells per tissue tile, at most 16
  double tumor_fraction = 0.4;  // mean share of tissue tiles labelled tumor
  double yield_per_cell_ng = 0.05;
  double noise_sigma = 0.1;
  bool with_images = false;
  int grid_cols = 40;
  int grid_rows = 30;
  int tile_stride = 32;  // slide pixels per tile at `magnification`
  double magnification = 10.0;
  double pixel_pitch = 1.0;
  double tissue_fraction_min = 0.005;  // tissue share of the grid, drawn uniformly
  double tissue_fraction_max = 0.6;
  int scrape_slides_min = 1;
  int scrape_slides_max = 10;

  void validate() const {
    detail::require(n_slides >= 0, "n_slides must be >= 0");
    detail::require(tissue_blobs >= 1, "tissue_blobs must be >= 1");
    detail::require(cell_density > 0.0, "cell_density must be positive");
    detail::require(cell_density <= 16.0, "cell_density above 16 cells per tile cannot be planted");
    detail::require(tumor_fraction >= 0.0 && tumor_fraction <= 1.0, "tumor_fraction must be in [0, 1]");
    detail::require(yield_per_cell_ng > 0.0, "yield_per_cell_ng must be positive");
    detail::require(noise_sigma >= 0.0, "noise_sigma must be >= 0");
    detail::require(grid_cols > 0 && grid_rows > 0 && tile_stride >= 16, "tile grid too small");
    detail::require(tissue_fraction_min > 0.0 && tissue_fraction_min <= tissue_fraction_max && tissue_fraction_max <= 1.0,
                    "tissue fractions must satisfy 0 < min <= max <= 1");
    detail::require(scrape_slides_min >= 1 && scrape_slides_min <= scrape_slides_max, "bad scrape slide range");
    const double cells = 16.0 * grid_cols * static_cast<double>(grid_rows);
    detail::require(cells < 5e7, "configured density x area is too large to plant");
  }
};

struct PlantedCounts {
  std::size_t total = 0;
  std::size_t tumor = 0;
  std::size_t lymphocyte = 0;
  std::size_t tissue_tiles = 0;
  std::size_t tumor_tiles = 0;
};

struct SyntheticSlide {
  SlideInputs inputs;
  PlantedCounts planted;
  std::vector<ExtractionEvent> events;
  double true_yield_per_slide = 0.0;  // ng, noise included
  std::string cancer_type;
  std::string procedure;
};

namespace impl {

inline std::vector<Point> ellipse_polygon(Point c, double a, double b, double angle, int vertices) {
  std::vector<Point> poly;
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int k = 0; k < vertices; ++k) {
    const double t = 2.0 * std::numbers::pi * k / vertices;
    const double x = a * std::cos(t), y = b * std::sin(t);
    poly.push_back({c.x + x * ca - y * sa, c.y + x * sa + y * ca});
  }
  return poly;
}

inline CellDetection make_cell(std::string id, Point c, double a, double b, double angle, Detector d) {
  CellDetection cell;
  cell.id = std::move(id);
  cell.centroid = c;
  cell.polygon = ellipse_polygon(c, a, b, angle, 10);
  double x0 = c.x, x1 = c.x, y0 = c.y, y1 = c.y;
  for (const auto& p : cell.polygon) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  cell.bbox = {x0, y0, x1 - x0, y1 - y0};
  cell.detector = d;
  return cell;
}

inline void paint_ellipse(RgbImage& im, const CellDetection& c, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const int x0 = std::max(0, static_cast<int>(std::floor(c.bbox.x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(c.bbox.y)));
  const int x1 = std::min(im.width() - 1, static_cast<int>(std::ceil(c.bbox.x + c.bbox.w)));
  const int y1 = std::min(im.height() - 1, static_cast<int>(std::ceil(c.bbox.y + c.bbox.h)));
  const double rx = std::max(c.bbox.w / 2, 0.5), ry = std::max(c.bbox.h / 2, 0.5);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = (x + 0.5 - c.centroid.x) / rx, dy = (y + 0.5 - c.centroid.y) / ry;
      if (dx * dx + dy * dy <= 1.0) im.set(x, y, r, g, b);
    }
}

}  // namespace impl

/// One slide. Deterministic in (config, seed).
inline SyntheticSlide synthesize_slide(const SlideSynthConfig& cfg, std::uint64_t seed, const std::string& slide_id) {
  Rng rng(seed);
  SyntheticSlide s;
  auto& in = s.inputs;
  in.slide_id = slide_id;
  in.magnification = cfg.magnification;
  in.pixel_pitch = cfg.pixel_pitch;
  in.tiles = TileClassMap(cfg.grid_cols, cfg.grid_rows, cfg.tile_stride);

  // Tissue = the tiles with the lowest blob potential; tumor = the innermost of those.
  struct Blob {
    double cx, cy, rx, ry;
  };
  std::vector<Blob> blobs;
  for (int b = 0; b < cfg.tissue_blobs; ++b)
    blobs.push_back({rng.uniform(0.2, 0.8) * cfg.grid_cols, rng.uniform(0.2, 0.8) * cfg.grid_rows,
                     rng.uniform(0.6, 1.4), rng.uniform(0.6, 1.4)});
  const auto n_tiles = static_cast<std::size_t>(cfg.grid_cols) * static_cast<std::size_t>(cfg.grid_rows);
  std::vector<std::pair<double, std::size_t>> pot(n_tiles);
  for (int ty = 0; ty < cfg.grid_rows; ++ty)
    for (int tx = 0; tx < cfg.grid_cols; ++tx) {
      double best = INFINITY;
      for (const auto& b : blobs) {
        const double dx = (tx + 0.5 - b.cx) / b.rx, dy = (ty + 0.5 - b.cy) / b.ry;
        best = std::min(best, std::hypot(dx, dy));
      }
      const auto idx = static_cast<std::size_t>(ty) * cfg.grid_cols + tx;
      pot[idx] = {best, idx};
    }
  std::stable_sort(pot.begin(), pot.end());
  const double frac = rng.uniform(cfg.tissue_fraction_min, cfg.tissue_fraction_max);
  const auto tissue = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(frac * n_tiles)));
  // Composition varies per slide around the configured tumor share, so
  // subtype counts are not proportional to the total.
  const double tumor_share = std::min(1.0, cfg.tumor_fraction * rng.uniform(0.3, 1.7));
  const double immune_share = rng.uniform(0.02, 0.35);
  const auto tumor = static_cast<std::size_t>(std::llround(tumor_share * static_cast<double>(tissue)));
  s.planted.tissue_tiles = tissue;
  s.planted.tumor_tiles = tumor;
  for (std::size_t k = 0; k < tissue; ++k) {
    const auto idx = pot[k].second;
    const int tx = static_cast<int>(idx % cfg.grid_cols), ty = static_cast<int>(idx / cfg.grid_cols);
    TileClass c;
    if (k < tumor) {
      c = TileClass::tumor;
    } else {
      const double u = rng.uniform();
      const double v = (u - immune_share) / (1.0 - immune_share);
      c = u < immune_share ? TileClass::immune
          : v < 0.55       ? TileClass::stroma
          : v < 0.8        ? TileClass::epithelium
                           : TileClass::other;
    }
    in.tiles.set(tx, ty, c);
  }

  std::optional<RgbImage> image;
  if (cfg.with_images) {
    image.emplace(cfg.grid_cols * cfg.tile_stride, cfg.grid_rows * cfg.tile_stride);
    image->fill(242, 236, 240);
    for (int ty = 0; ty < cfg.grid_rows; ++ty)
      for (int tx = 0; tx < cfg.grid_cols; ++tx) {
        if (in.tiles.at(tx, ty) == TileClass::background) continue;
        const auto shade = static_cast<std::uint8_t>(rng.uniform_int(180, 215));
        for (int y = ty * cfg.tile_stride; y < (ty + 1) * cfg.tile_stride; ++y)
          for (int x = tx * cfg.tile_stride; x < (tx + 1) * cfg.tile_stride; ++x)
            image->set(x, y, 225, static_cast<std::uint8_t>(shade - 40 + ((x * 7 + y * 13) & 15)), shade);
      }
  }

  // 4 x 4 lattice per tile, jitter +-1 px: distinct nuclei stay > 5 px apart,
  // so lymphocyte matching never merges two planted cells.
  const double spacing = cfg.tile_stride / 4.0;
  const double p_slot = cfg.cell_density / 16.0;
  std::size_t next_id = 0;
  for (int ty = 0; ty < cfg.grid_rows; ++ty)
    for (int tx = 0; tx < cfg.grid_cols; ++tx) {
      const TileClass tc = in.tiles.at(tx, ty);
      if (tc == TileClass::background) continue;
      for (int sy = 0; sy < 4; ++sy)
        for (int sx = 0; sx < 4; ++sx) {
          if (!rng.bernoulli(p_slot)) continue;
          const Point c{tx * cfg.tile_stride + (sx + 0.5) * spacing + rng.uniform(-1, 1),
                        ty * cfg.tile_stride + (sy + 0.5) * spacing + rng.uniform(-1, 1)};
          const double a = tc == TileClass::tumor ? rng.uniform(2.8, 3.8) : rng.uniform(2.0, 3.0);
          const double b = a * rng.uniform(0.55, 1.0);
          const double ang = rng.uniform(0, std::numbers::pi);
          const std::string id = "c" + std::to_string(next_id++);
          ++s.planted.total;
          if (tc == TileClass::immune) {
            in.lymph.push_back(impl::make_cell(id, c, a * 0.8, b * 0.8, ang, Detector::lymphocyte_model));
            ++s.planted.lymphocyte;
            // the general model often sees the same nucleus
            if (rng.bernoulli(0.5))
              in.general.push_back(impl::make_cell(id + "d", {c.x + rng.uniform(-1, 1), c.y + rng.uniform(-1, 1)}, a, b,
                                                   ang, Detector::general_model));
            if (image) impl::paint_ellipse(*image, in.lymph.back(), 60, 30, 120);
          } else {
            in.general.push_back(impl::make_cell(id, c, a, b, ang, Detector::general_model));
            s.planted.tumor += tc == TileClass::tumor;
            if (image)
              impl::paint_ellipse(*image, in.general.back(), tc == TileClass::tumor ? 95 : 120,
                                  tc == TileClass::tumor ? 55 : 80, tc == TileClass::tumor ? 150 : 170);
          }
        }
    }
  in.image = std::move(image);

  // Per-slide yield tracks the planted count; the scrape covers n serial sections.
  const double noise = cfg.noise_sigma > 0 ? rng.normal(0.0, cfg.noise_sigma) : 0.0;
  s.true_yield_per_slide = std::max(0.0, cfg.yield_per_cell_ng * static_cast<double>(s.planted.total) * (1.0 + noise));
  const int n = static_cast<int>(rng.uniform_int(cfg.scrape_slides_min, cfg.scrape_slides_max));
  s.events.push_back({1, s.true_yield_per_slide * n, n});
  static const char* kCancers[] = {"lung", "colorectal", "breast", "pancreas", "melanoma"};
  static const char* kProcedures[] = {"resection", "biopsy", "excision"};
  s.cancer_type = kCancers[rng.uniform_int(0, 4)];
  s.procedure = kProcedures[rng.uniform_int(0, 2)];
  return s;
}

inline std::string synthetic_slide_id(std::uint64_t seed, int i) {
  return "syn-" + std::to_string(seed) + "-" + std::to_string(i);
}

inline std::vector<SyntheticSlide> synthesize_slides(const SlideSynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::vector<SyntheticSlide> out;
  out.reserve(static_cast<std::size_t>(cfg.n_slides));
  for (int i = 0; i < cfg.n_slides; ++i)
    out.push_back(synthesize_slide(cfg, derive_seed(seed, static_cast<std::uint64_t>(i)), synthetic_slide_id(seed, i)));
  return out;
}

}  // namespace dnayield::service
