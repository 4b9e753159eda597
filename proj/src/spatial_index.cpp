#include "anisotest/spatial_index.hpp"

#include <algorithm>
#include <stdexcept>

namespace anisotest {

CellIndex::CellIndex(const Window& window, double cell_size)
    : x0_(window.xmin()), y0_(window.ymin()), cell_(cell_size) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("cell size must be positive");
  // Cap the grid so degenerate tiny cell sizes cannot exhaust memory.
  const double max_cells_per_axis = 1024.0;
  cell_ = std::max(cell_, std::max(window.width(), window.height()) / max_cells_per_axis);
  nx_ = std::max(1, static_cast<int>(std::ceil(window.width() / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil(window.height() / cell_)));
  cells_.resize(static_cast<std::size_t>(nx_) * ny_);
}

CellIndex::CellIndex(const Window& window, double cell_size, std::span<const Point> points)
    : CellIndex(window, cell_size) {
  points_.reserve(points.size());
  for (const Point& p : points) add(p);
}

double CellIndex::suggested_cell_size(const Window& window, std::size_t n, double per_cell) {
  const double count = std::max<double>(1.0, static_cast<double>(n));
  return std::sqrt(per_cell * window.area() / count);
}

std::size_t CellIndex::add(Point p) {
  const std::size_t id = points_.size();
  points_.push_back(p);
  cells_[cell_of(p)].push_back(static_cast<std::uint32_t>(id));
  return id;
}

void CellIndex::detach(std::size_t id) {
  auto& bucket = cells_[cell_of(points_[id])];
  auto it = std::find(bucket.begin(), bucket.end(), static_cast<std::uint32_t>(id));
  *it = bucket.back();
  bucket.pop_back();
}

void CellIndex::move(std::size_t id, Point p) {
  const int from = cell_of(points_[id]);
  const int to = cell_of(p);
  if (from != to) {
    detach(id);
    cells_[to].push_back(static_cast<std::uint32_t>(id));
  }
  points_[id] = p;
}

void CellIndex::remove(std::size_t id) {
  detach(id);
  const std::size_t last = points_.size() - 1;
  if (id != last) {
    auto& bucket = cells_[cell_of(points_[last])];
    *std::find(bucket.begin(), bucket.end(), static_cast<std::uint32_t>(last)) =
        static_cast<std::uint32_t>(id);
    points_[id] = points_[last];
  }
  points_.pop_back();
}

}  // namespace anisotest
