#include "anisotest/geometry.hpp"

#include <algorithm>
#include <sstream>

namespace anisotest {

namespace {
constexpr double kPi = std::numbers::pi;
}

Window::Window(double xmin, double xmax, double ymin, double ymax)
    : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax) {
  if (!(std::isfinite(xmin) && std::isfinite(xmax) && std::isfinite(ymin) && std::isfinite(ymax)))
    throw std::invalid_argument("window bounds must be finite");
  if (!(xmin < xmax) || !(ymin < ymax))
    throw std::invalid_argument("window requires xmin < xmax and ymin < ymax");
}

DoubleCone::DoubleCone(double alpha, double eps) : alpha_(normalize_axial(alpha)), eps_(eps) {
  if (!(eps > 0.0) || eps > kPi / 2)
    throw std::invalid_argument("double cone half-angle must lie in (0, pi/2]");
}

OrientedRect::OrientedRect(double alpha_, double half_width_, double half_length_)
    : alpha(alpha_), half_width(half_width_), half_length(half_length_) {
  if (!(half_width > 0.0) || !(half_length > 0.0))
    throw std::invalid_argument("oriented rectangle needs positive half-width and half-length");
}

double normalize_axial(double angle) {
  if (!std::isfinite(angle)) throw std::invalid_argument("angle must be finite");
  double a = std::fmod(angle, kPi);
  if (a < 0.0) a += kPi;
  if (a >= kPi) a -= kPi;
  return a;
}

double axial_distance(double a, double b) {
  double d = std::fabs(normalize_axial(a) - normalize_axial(b));
  return std::min(d, kPi - d);
}

double axial_angle(Point delta) {
  // Fold into the upper half-plane so that delta and -delta share one representative.
  if (delta.y < 0.0 || (delta.y == 0.0 && delta.x < 0.0)) delta = -delta;
  double a = std::atan2(delta.y, delta.x);
  return a >= kPi ? 0.0 : a;
}

Point rotate(Point p, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

std::vector<Point> rotate_points(std::span<const Point> pts, double theta) {
  if (!std::isfinite(theta)) throw std::invalid_argument("rotation angle must be finite");
  const double c = std::cos(theta), s = std::sin(theta);
  std::vector<Point> out;
  out.reserve(pts.size());
  for (const Point& p : pts) out.push_back({c * p.x - s * p.y, s * p.x + c * p.y});
  return out;
}

bool in_double_cone(Point delta, const DoubleCone& cone) {
  if (delta.x == 0.0 && delta.y == 0.0)
    throw std::invalid_argument("direction of the zero vector is undefined");
  const double d = std::fabs(axial_angle(delta) - cone.alpha());
  return std::min(d, kPi - d) <= cone.eps();
}

bool in_oriented_rect(Point delta, const OrientedRect& rect) {
  const Point u = Point::unit(rect.alpha);
  const double t = delta.x * u.x + delta.y * u.y;
  const double s = -delta.x * u.y + delta.y * u.x;
  return std::fabs(t) <= rect.half_length && std::fabs(s) <= rect.half_width;
}

Point cone_sector_extent(const DoubleCone& cone, double d) {
  if (!(d >= 0.0)) throw std::invalid_argument("erosion radius must be non-negative");
  const double lo = cone.alpha() - cone.eps();
  const double hi = cone.alpha() + cone.eps();
  auto covers = [&](double angle) { return lo <= angle && angle <= hi; };
  double cx = std::max(std::fabs(std::cos(lo)), std::fabs(std::cos(hi)));
  double sy = std::max(std::fabs(std::sin(lo)), std::fabs(std::sin(hi)));
  if (covers(0.0) || covers(kPi)) cx = 1.0;
  if (covers(-kPi / 2) || covers(kPi / 2) || covers(3 * kPi / 2)) sy = 1.0;
  return {d * cx, d * sy};
}

double erosion_area_cone(const Window& win, const DoubleCone& cone, double d) {
  const Point e = cone_sector_extent(cone, d);
  const double w = win.width() - 2.0 * e.x;
  const double h = win.height() - 2.0 * e.y;
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

bool eroded_rect_contains(const Window& win, const DoubleCone& cone, double d, Point p) {
  const Point e = cone_sector_extent(cone, d);
  return p.x >= win.xmin() + e.x && p.x <= win.xmax() - e.x && p.y >= win.ymin() + e.y &&
         p.y <= win.ymax() - e.y;
}

double translation_overlap_area(const Window& win, Point delta) {
  const double w = win.width() - std::fabs(delta.x);
  const double h = win.height() - std::fabs(delta.y);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

PointPattern::PointPattern(std::vector<Point> points, Window window)
    : points_(std::move(points)), window_(window) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const Point& p = points_[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw std::invalid_argument("point " + std::to_string(i) + " has non-finite coordinates");
    if (!window_.contains(p)) {
      std::ostringstream os;
      os << "point " << i << " (" << p.x << ", " << p.y << ") lies outside the window";
      throw std::invalid_argument(os.str());
    }
  }
  std::vector<Point> sorted = points_;
  std::sort(sorted.begin(), sorted.end(),
            [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("point pattern contains duplicate locations");
}

PointPattern PointPattern::trusted(std::vector<Point> points, Window window) {
  return PointPattern(std::move(points), window, TrustedTag{});
}

PointPattern PointPattern::from_samples(std::vector<Point> points, Window window) {
  std::erase_if(points, [&](Point p) { return !window.contains(p); });
  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Point pa = points[a], pb = points[b];
    return pa.x < pb.x || (pa.x == pb.x && (pa.y < pb.y || (pa.y == pb.y && a < b)));
  });
  std::vector<char> keep(points.size(), 1);
  for (std::size_t k = 1; k < order.size(); ++k)
    if (points[order[k]] == points[order[k - 1]]) keep[order[k]] = 0;
  std::vector<Point> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    if (keep[i]) out.push_back(points[i]);
  return trusted(std::move(out), window);
}

}  // namespace anisotest
