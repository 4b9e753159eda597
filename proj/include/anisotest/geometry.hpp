#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace anisotest {

/// Planar point or difference vector, in window units.
struct Point {
  double x = 0.0;
  double y = 0.0;

  /// Unit vector (cos a, sin a).
  static Point unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator-(Point a) { return {-a.x, -a.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point a, Point b) = default;

  double norm() const { return std::hypot(x, y); }
  double dot(Point o) const { return x * o.x + y * o.y; }
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Axis-aligned rectangular observation window.
class Window {
 public:
  Window(double xmin, double xmax, double ymin, double ymax);

  /// Square [-side/2, side/2]^2 centred at the origin.
  static Window centred_square(double side) { return {-side / 2, side / 2, -side / 2, side / 2}; }

  double xmin() const { return xmin_; }
  double xmax() const { return xmax_; }
  double ymin() const { return ymin_; }
  double ymax() const { return ymax_; }
  double width() const { return xmax_ - xmin_; }
  double height() const { return ymax_ - ymin_; }
  double area() const { return width() * height(); }
  Point centre() const { return {(xmin_ + xmax_) / 2, (ymin_ + ymax_) / 2}; }
  bool is_square() const { return width() == height(); }
  /// Shorter side; the reference length for range defaults.
  double min_side() const { return std::min(width(), height()); }
  double circumradius() const { return 0.5 * std::hypot(width(), height()); }

  /// Closed containment.
  bool contains(Point p) const {
    return p.x >= xmin_ && p.x <= xmax_ && p.y >= ymin_ && p.y <= ymax_;
  }
  /// Distance from an interior point to the boundary.
  double border_distance(Point p) const {
    return std::min(std::min(p.x - xmin_, xmax_ - p.x), std::min(p.y - ymin_, ymax_ - p.y));
  }
  Window dilated(double margin) const {
    return {xmin_ - margin, xmax_ + margin, ymin_ - margin, ymax_ + margin};
  }

  friend bool operator==(const Window&, const Window&) = default;

 private:
  double xmin_, xmax_, ymin_, ymax_;
};

/// Double cone DC(alpha, eps): directions within eps of alpha modulo pi.
class DoubleCone {
 public:
  DoubleCone(double alpha, double eps);

  double alpha() const { return alpha_; }
  double eps() const { return eps_; }

 private:
  double alpha_;  // normalised to [0, pi)
  double eps_;
};

/// Rectangle {t*u + s*u_perp : |t| <= half_length, |s| <= half_width}, u = (cos alpha, sin alpha).
struct OrientedRect {
  double alpha = 0.0;
  double half_width = 0.0;
  double half_length = 0.0;

  OrientedRect(double alpha_, double half_width_, double half_length_);
  double area() const { return 4.0 * half_width * half_length; }
};

/// Angle in [0, pi) reduced modulo pi.
double normalize_axial(double angle);

/// Shortest distance between two axial angles (both interpreted modulo pi), in [0, pi/2].
double axial_distance(double a, double b);

/// Axial direction of a nonzero vector in [0, pi). delta and -delta map to the identical value.
double axial_angle(Point delta);

std::vector<Point> rotate_points(std::span<const Point> pts, double theta);
Point rotate(Point p, double theta);

bool in_double_cone(Point delta, const DoubleCone& cone);
bool in_oriented_rect(Point delta, const OrientedRect& rect);

/// Coordinate extents (e_x, e_y) of DS(alpha, eps, d) = DC(alpha, eps) intersected with b(o, d).
Point cone_sector_extent(const DoubleCone& cone, double d);

/// |W eroded by DS(alpha, eps, d)|; 0 when the eroded set is empty.
double erosion_area_cone(const Window& win, const DoubleCone& cone, double d);
bool eroded_rect_contains(const Window& win, const DoubleCone& cone, double d, Point p);

/// |W intersected with W translated by delta|.
double translation_overlap_area(const Window& win, Point delta);

/// A finite set of distinct points inside a rectangular window.
class PointPattern {
 public:
  /// Validates containment and uniqueness.
  PointPattern(std::vector<Point> points, Window window);
  /// Skips validation; the caller guarantees the invariants.
  static PointPattern trusted(std::vector<Point> points, Window window);
  /// For simulator output: drops points outside the window and exact duplicates, keeping order.
  static PointPattern from_samples(std::vector<Point> points, Window window);

  const std::vector<Point>& points() const { return points_; }
  const Window& window() const { return window_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point& operator[](std::size_t i) const { return points_[i]; }
  double intensity() const { return static_cast<double>(points_.size()) / window_.area(); }

 private:
  struct TrustedTag {};
  PointPattern(std::vector<Point> points, Window window, TrustedTag)
      : points_(std::move(points)), window_(window) {}

  std::vector<Point> points_;
  Window window_;
};

/// Clamp into the closed window, absorbing floating round-off at the edges.
inline Point clamp_to(const Window& w, Point p) {
  return {std::clamp(p.x, w.xmin(), w.xmax()), std::clamp(p.y, w.ymin(), w.ymax())};
}

}  // namespace anisotest
