#pragma once

// Brute-force per-pixel references for the mask operations, shared by the
// unit tests and the acceptance runner.

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

#include "dnayield/core/random.hpp"
#include "dnayield/mask/binary_mask.hpp"

namespace oracle {

using dnayield::Rng;
using dnayield::mask::BinaryMask;

inline BinaryMask random_mask(Rng& rng, int w, int h, double density, double mag = 10.0) {
  BinaryMask m(w, h, mag, 1.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, rng.bernoulli(density));
  return m;
}

// Naive fixpoint labeling: every pixel starts with its own id and repeatedly
// takes the minimum id of its 8-neighbours until nothing changes.
inline std::vector<int> oracle_labels(const BinaryMask& m) {
  const int w = m.width(), h = m.height();
  std::vector<int> id(m.size(), -1);
  for (int i = 0; i < static_cast<int>(m.size()); ++i)
    if (m.data()[i]) id[i] = i;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        int& me = id[y * w + x];
        if (me < 0) continue;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const int other = id[ny * w + nx];
            if (other >= 0 && other < me) {
              me = other;
              changed = true;
            }
          }
      }
  }
  return id;
}

inline BinaryMask oracle_remove_small(const BinaryMask& m, double fraction) {
  const auto id = oracle_labels(m);
  std::map<int, int> sizes;
  for (int v : id)
    if (v >= 0) ++sizes[v];
  int largest = 0;
  for (auto& [k, s] : sizes) largest = std::max(largest, s);
  BinaryMask out = m.blank_like();
  for (std::size_t i = 0; i < id.size(); ++i)
    if (id[i] >= 0 && !(sizes[id[i]] < fraction * largest)) out.data()[i] = 1;
  return out;
}

inline BinaryMask oracle_fill_holes(const BinaryMask& m) {
  const int w = m.width(), h = m.height();
  std::vector<int> outside(m.size(), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!m.at(x, y) && (x == 0 || y == 0 || x == w - 1 || y == h - 1)) outside[y * w + x] = 1;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (m.at(x, y) || outside[y * w + x]) continue;
        const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (auto& d : nb) {
          const int nx = x + d[0], ny = y + d[1];
          if (nx >= 0 && ny >= 0 && nx < w && ny < h && outside[ny * w + nx]) {
            outside[y * w + x] = 1;
            changed = true;
            break;
          }
        }
      }
  }
  BinaryMask out = m.blank_like();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = outside[i] ? 0 : 1;
  return out;
}

inline BinaryMask oracle_dilate(BinaryMask m, int kernel_side, int iterations) {
  const int r = (kernel_side - 1) / 2;
  for (int it = 0; it < iterations; ++it) {
    BinaryMask next = m.blank_like();
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x) {
        bool any = false;
        for (int dy = -r; dy <= r && !any; ++dy)
          for (int dx = -r; dx <= r && !any; ++dx) any = m.get(x + dx, y + dy);
        next.set(x, y, any);
      }
    m = std::move(next);
  }
  return m;
}

inline BinaryMask oracle_downsample(const BinaryMask& m, int factor) {
  const int ow = (m.width() + factor - 1) / factor, oh = (m.height() + factor - 1) / factor;
  const double mag = m.magnification() / factor;
  BinaryMask out(ow, oh, mag, m.pixel_pitch() * m.magnification() / mag);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      bool any = false;
      for (int y = oy * factor; y < std::min(m.height(), (oy + 1) * factor); ++y)
        for (int x = ox * factor; x < std::min(m.width(), (ox + 1) * factor); ++x) any |= m.at(x, y);
      out.set(ox, oy, any);
    }
  return out;
}

// Jarvis march over integer points, then ray casting with an explicit
// on-boundary check for the rasterization.
inline BinaryMask oracle_hull(const BinaryMask& m) {
  using P = std::pair<long, long>;
  std::vector<P> pts;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.at(x, y)) pts.emplace_back(x, y);
  auto cr = [](P o, P a, P b) { return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first); };
  auto d2 = [](P a, P b) { return (a.first - b.first) * (a.first - b.first) + (a.second - b.second) * (a.second - b.second); };
  P start = *std::min_element(pts.begin(), pts.end());
  std::vector<P> hull;
  P cur = start;
  do {
    hull.push_back(cur);
    P cand = pts[0] == cur && pts.size() > 1 ? pts[1] : pts[0];
    for (const P& q : pts) {
      if (q == cur) continue;
      const long c = cr(cur, cand, q);
      if (c < 0 || (c == 0 && d2(cur, q) > d2(cur, cand))) cand = q;
    }
    cur = cand;
  } while (cur != start && hull.size() <= pts.size());
  auto on_segment = [&](P a, P b, P p) {
    return cr(a, b, p) == 0 && std::min(a.first, b.first) <= p.first && p.first <= std::max(a.first, b.first) &&
           std::min(a.second, b.second) <= p.second && p.second <= std::max(a.second, b.second);
  };
  BinaryMask out = m.blank_like();
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      const P p{x, y};
      bool inside = false, boundary = false;
      for (std::size_t i = 0; i < hull.size(); ++i) {
        const P a = hull[i], b = hull[(i + 1) % hull.size()];
        if (on_segment(a, b, p)) boundary = true;
        if ((a.second > p.second) != (b.second > p.second)) {
          const double xi = a.first + static_cast<double>(p.second - a.second) * (b.first - a.first) / static_cast<double>(b.second - a.second);
          if (p.first < xi) inside = !inside;
        }
      }
      out.set(x, y, inside || boundary || (hull.size() == 1 && p == hull[0]));
    }
  return out;
}

inline BinaryMask draw_rect(BinaryMask m, int x0, int y0, int w, int h) {
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) m.set(x, y);
  return m;
}


}  // namespace oracle
