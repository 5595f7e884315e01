#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dnayield/core/text.hpp"
#include "dnayield/features/cells.hpp"
#include "dnayield/features/image.hpp"
#include "dnayield/features/shape.hpp"
#include "dnayield/features/summary.hpp"
#include "dnayield/features/texture.hpp"
#include "dnayield/mask/binary_mask.hpp"

namespace dnayield::features {

enum class FeatureGroup { cell_counts, tumor_shape, cell_shape, cell_texture };

inline constexpr std::array<std::size_t, 4> kGroupSizes = {5, 96, 660, 2700};
inline constexpr std::size_t kFeatureCount = 5 + 96 + 660 + 2700;
static_assert(kFeatureCount == 3461);

inline const char* to_string(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::cell_counts: return "cell_counts";
    case FeatureGroup::tumor_shape: return "tumor_shape";
    case FeatureGroup::cell_shape: return "cell_shape";
    case FeatureGroup::cell_texture: return "cell_texture";
  }
  return "";
}

inline FeatureGroup parse_feature_group(std::string_view s) {
  for (auto g : {FeatureGroup::cell_counts, FeatureGroup::tumor_shape, FeatureGroup::cell_shape,
                 FeatureGroup::cell_texture})
    if (s == to_string(g)) return g;
  throw InvalidInput("unknown feature group '" + std::string(s) + "'");
}

enum class MaskScope { whole_slide, macrodissection };

inline const char* to_string(MaskScope s) { return s == MaskScope::whole_slide ? "whole_slide" : "macrodissection"; }

inline MaskScope parse_mask_scope(std::string_view s) {
  if (s == "whole_slide") return MaskScope::whole_slide;
  if (s == "macrodissection") return MaskScope::macrodissection;
  throw InvalidInput("unknown mask scope '" + std::string(s) + "'");
}

/// Canonical feature names, in vector order.
inline const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n = {"cell_counts.total", "cell_counts.tumor", "cell_counts.lymphocyte",
                                  "cell_counts.pct_tumor", "cell_counts.pct_lymphocyte"};
    for (const char* f : region_shape_names())
      for (const auto& s : stat_names(StatSet::S12)) n.push_back(std::string("tumor_shape.") + f + "." + s);
    for (const char* f : cell_shape_names())
      for (const auto& s : stat_names(StatSet::S30)) n.push_back(std::string("cell_shape.") + f + "." + s);
    for (const char* c : texture_channel_names())
      for (const char* t : texture_stat_names())
        for (const auto& s : stat_names(StatSet::S30))
          n.push_back(std::string("cell_texture.") + c + "." + t + "." + s);
    return n;
  }();
  return names;
}

inline FeatureGroup feature_group_of(std::size_t index) {
  std::size_t edge = 0;
  for (std::size_t g = 0; g < kGroupSizes.size(); ++g) {
    edge += kGroupSizes[g];
    if (index < edge) return static_cast<FeatureGroup>(g);
  }
  throw InvalidInput("feature index out of range");
}

struct FeatureDiagnostics {
  std::size_t matched_general = 0;
  std::size_t outside_grid = 0;
  std::size_t cells_in_scope = 0;
  std::size_t cells_sampled = 0;
  std::size_t degenerate_polygons = 0;
  std::size_t bbox_outside_image = 0;
  std::size_t nonfinite_replaced = 0;
  bool texture_skipped = false;
};

struct FeatureVector {
  std::vector<double> values;
  MaskScope scope = MaskScope::whole_slide;
  std::uint64_t seed = 0;
  std::string slide_id;
  FeatureDiagnostics diagnostics;

  static const std::vector<std::string>& names() { return feature_names(); }
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Concatenates the four groups in fixed order and zeroes non-finite entries.
inline FeatureVector assemble_feature_vector(std::span<const double> counts, std::span<const double> tumor_shape,
                                             std::span<const double> cell_shape, std::span<const double> texture) {
  detail::require(counts.size() == kGroupSizes[0] && tumor_shape.size() == kGroupSizes[1] &&
                      cell_shape.size() == kGroupSizes[2] && texture.size() == kGroupSizes[3],
                  "feature group sizes must be 5/96/660/2700");
  FeatureVector fv;
  fv.values.reserve(kFeatureCount);
  for (auto part : {counts, tumor_shape, cell_shape, texture})
    for (double v : part) {
      if (!std::isfinite(v)) {
        ++fv.diagnostics.nonfinite_replaced;
        v = 0.0;
      }
      fv.values.push_back(v);
    }
  return fv;
}

/// Everything the feature generator reads for one slide. Cell and tile
/// coordinates share one frame, sampled at `magnification`.
struct SlideInputs {
  std::string slide_id;
  TileClassMap tiles;
  std::vector<CellDetection> general;
  std::vector<CellDetection> lymph;
  std::optional<RgbImage> image;
  double magnification = 10.0;
  double pixel_pitch = 1.0;  // micrometers per slide pixel
};

struct FeatureOptions {
  std::size_t max_cells = 3000;
  double match_radius = 5.0;
  double tumor_mask_magnification = 2.5;
};

/// Tumor tiles rasterized at the tumor-mask magnification.
inline mask::BinaryMask tumor_mask(const SlideInputs& in, const FeatureOptions& opt = {}) {
  return tiles_to_mask(in.tiles, TileClass::tumor, in.magnification, in.pixel_pitch,
                       opt.tumor_mask_magnification);
}

/// Keeps the pixels of `m` whose centers fall inside `scope`.
inline mask::BinaryMask restrict_to_scope(const mask::BinaryMask& m, const mask::BinaryMask& scope,
                                          double slide_magnification) {
  mask::BinaryMask out = m.blank_like();
  const double s = m.magnification() / slide_magnification;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.at(x, y) && centroid_in_scope({(x + 0.5) / s, (y + 0.5) / s}, scope, slide_magnification))
        out.set(x, y);
  return out;
}

/// Builds the 3,461-value vector. `scope` == nullptr means the whole slide.
inline FeatureVector generate_feature_vector(const SlideInputs& in, const mask::BinaryMask* scope,
                                             std::uint64_t seed, const FeatureOptions& opt = {}) {
  if (in.tiles.cols() == 0 || in.tiles.rows() == 0) throw InvalidInput("slide has no tile class map");
  const auto classified = classify_cells(in.general, in.lymph, in.tiles, opt.match_radius);
  const auto in_scope = filter_to_scope(classified.cells, scope, in.magnification);
  const auto counts = cell_count_features(in_scope);

  auto tumor = tumor_mask(in, opt);
  if (scope) tumor = restrict_to_scope(tumor, *scope, in.magnification);
  const auto tshape = tumor_shape_features(tumor);

  const auto sampled = sample_cells(in_scope, opt.max_cells, seed);
  const auto cshape = cell_shape_features(sampled);
  const auto tex = cell_texture_features(in.image ? &*in.image : nullptr, sampled);

  auto fv = assemble_feature_vector(counts, tshape, cshape.values, tex.values);
  fv.scope = scope ? MaskScope::macrodissection : MaskScope::whole_slide;
  fv.seed = seed;
  fv.slide_id = in.slide_id;
  auto& d = fv.diagnostics;
  d.matched_general = classified.matched_general;
  d.outside_grid = classified.outside_grid;
  d.cells_in_scope = in_scope.size();
  d.cells_sampled = sampled.size();
  d.degenerate_polygons = cshape.degenerate;
  d.bbox_outside_image = tex.outside_image;
  d.texture_skipped = tex.skipped;
  return fv;
}

inline std::string format_feature_csv(const FeatureVector& fv) {
  std::string out = "# slide_id=" + fv.slide_id + " scope=" + to_string(fv.scope) +
                    " seed=" + std::to_string(fv.seed) + "\nname,group,value\n";
  const auto& names = feature_names();
  for (std::size_t i = 0; i < fv.values.size(); ++i)
    out += names[i] + "," + to_string(feature_group_of(i)) + "," + text::format_double(fv.values[i]) + "\n";
  return out;
}

inline FeatureVector parse_feature_csv(std::string_view body) {
  const auto t = text::parse_csv(body);
  const int c_name = t.require_column("name"), c_group = t.require_column("group");
  const int c_value = t.require_column("value");
  if (t.rows.size() != kFeatureCount)
    throw InvalidInput("feature file has " + std::to_string(t.rows.size()) + " rows, expected 3461");
  FeatureVector fv;
  const auto& names = feature_names();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    if (row[c_name] != names[i]) throw InvalidInput("feature order mismatch at '" + row[c_name] + "'");
    if (parse_feature_group(row[c_group]) != feature_group_of(i))
      throw InvalidInput("feature group mismatch at '" + row[c_name] + "'");
    fv.values.push_back(text::to_double(row[c_value], "value"));
  }
  for (const auto& c : t.comments)
    for (const auto& tok : text::split(c, ' ')) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const auto k = tok.substr(0, eq), v = tok.substr(eq + 1);
      if (k == "slide_id") fv.slide_id = v;
      if (k == "scope") fv.scope = parse_mask_scope(v);
      if (k == "seed") fv.seed = static_cast<std::uint64_t>(text::to_int(v, "seed"));
    }
  return fv;
}

}  // namespace dnayield::features
