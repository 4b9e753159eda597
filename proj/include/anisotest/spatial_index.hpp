#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "anisotest/geometry.hpp"

namespace anisotest {

/// Uniform bucket grid over a window holding a mutable point set.
///
/// Point ids are dense in [0, size()). Removing an id moves the last point
/// into the freed slot, so callers holding ids must re-read after removal.
class CellIndex {
 public:
  CellIndex(const Window& window, double cell_size);
  CellIndex(const Window& window, double cell_size, std::span<const Point> points);

  /// Cell size giving roughly `per_cell` points per bucket at the given count.
  static double suggested_cell_size(const Window& window, std::size_t n, double per_cell = 2.0);

  std::size_t size() const { return points_.size(); }
  const std::vector<Point>& points() const { return points_; }
  const Point& operator[](std::size_t id) const { return points_[id]; }

  std::size_t add(Point p);
  void move(std::size_t id, Point p);
  /// Removes id; the previous last id (if different) now lives at `id`.
  void remove(std::size_t id);

  /// Calls f(id, squared_distance) for every point within radius r of p (closed).
  template <class F>
  void for_each_within(Point p, double r, F&& f) const {
    const double r2 = r * r;
    const int cx0 = cell_x(p.x - r), cx1 = cell_x(p.x + r);
    const int cy0 = cell_y(p.y - r), cy1 = cell_y(p.y + r);
    for (int cy = cy0; cy <= cy1; ++cy)
      for (int cx = cx0; cx <= cx1; ++cx)
        for (std::uint32_t id : cells_[cy * nx_ + cx]) {
          const double dx = points_[id].x - p.x, dy = points_[id].y - p.y;
          const double d2 = dx * dx + dy * dy;
          if (d2 <= r2) f(static_cast<std::size_t>(id), d2);
        }
  }

  /// Nearest point to p among ids accepted by `keep(id)`; returns {id, distance}
  /// or {size(), +inf} when none qualifies.
  template <class Pred>
  std::pair<std::size_t, double> nearest(Point p, Pred&& keep) const {
    const int cx = cell_x(p.x), cy = cell_y(p.y);
    const int max_ring = std::max(std::max(cx, nx_ - 1 - cx), std::max(cy, ny_ - 1 - cy));
    double best2 = std::numeric_limits<double>::infinity();
    std::size_t best = points_.size();
    for (int ring = 0; ring <= max_ring; ++ring) {
      for (int y = cy - ring; y <= cy + ring; ++y) {
        if (y < 0 || y >= ny_) continue;
        const bool edge_row = (y == cy - ring || y == cy + ring);
        const int step = edge_row ? 1 : 2 * ring;
        for (int x = cx - ring; x <= cx + ring; x += (step == 0 ? 1 : step)) {
          if (x < 0 || x >= nx_) continue;
          for (std::uint32_t id : cells_[y * nx_ + x]) {
            const double dx = points_[id].x - p.x, dy = points_[id].y - p.y;
            const double d2 = dx * dx + dy * dy;
            if (d2 < best2 && keep(static_cast<std::size_t>(id))) {
              best2 = d2;
              best = id;
            }
          }
        }
      }
      // Anything in a later ring is at least ring * cell away.
      const double bound = ring * cell_;
      if (best2 <= bound * bound) break;
    }
    return {best, std::sqrt(best2)};
  }

 private:
  int cell_x(double x) const {
    const int c = static_cast<int>(std::floor((x - x0_) / cell_));
    return c < 0 ? 0 : (c >= nx_ ? nx_ - 1 : c);
  }
  int cell_y(double y) const {
    const int c = static_cast<int>(std::floor((y - y0_) / cell_));
    return c < 0 ? 0 : (c >= ny_ ? ny_ - 1 : c);
  }
  int cell_of(Point p) const { return cell_y(p.y) * nx_ + cell_x(p.x); }
  void detach(std::size_t id);

  double x0_, y0_, cell_;
  int nx_, ny_;
  std::vector<std::vector<std::uint32_t>> cells_;
  std::vector<Point> points_;
};

}  // namespace anisotest
