#include "anisotest/summaries.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "anisotest/spatial_index.hpp"

namespace anisotest {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_points(const PointPattern& pat, std::size_t n, const char* what) {
  if (pat.size() < n)
    throw std::invalid_argument(std::string(what) + " requires at least " + std::to_string(n) +
                                " points, got " + std::to_string(pat.size()));
}

// A weighted event at a threshold; sums are taken in sorted order so that
// estimates do not depend on point labelling.
struct Contribution {
  double at;
  double weight;
  friend bool operator<(const Contribution& a, const Contribution& b) {
    return a.at < b.at || (a.at == b.at && a.weight < b.weight);
  }
};

// Cumulative sums of weights with threshold <= each node (strict=false) or < node (strict=true).
std::vector<double> cumulate(std::vector<Contribution>& contrib, const std::vector<double>& nodes,
                             bool strict) {
  std::sort(contrib.begin(), contrib.end());
  std::vector<double> out(nodes.size(), 0.0);
  double acc = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    while (k < contrib.size() && (strict ? contrib[k].at < nodes[i] : contrib[k].at <= nodes[i])) {
      acc += contrib[k].weight;
      ++k;
    }
    out[i] = acc;
  }
  return out;
}

// Visits each unordered pair {i, j} within distance `radius` once.
template <class F>
void for_each_close_pair(const PointPattern& pat, double radius, F&& f) {
  const Window& w = pat.window();
  const double cell = std::max(radius, CellIndex::suggested_cell_size(w, pat.size()));
  CellIndex index(w, cell, pat.points());
  for (std::size_t i = 0; i < pat.size(); ++i) {
    index.for_each_within(pat[i], radius, [&](std::size_t j, double) {
      if (j > i) f(i, j);
    });
  }
}

}  // namespace

RangeGrid::RangeGrid(double r_max_, int count_) : r_max(r_max_), count(count_) {
  if (!(r_max > 0.0) || count < 1) throw std::invalid_argument("range grid needs r_max > 0, count >= 1");
}

std::vector<double> RangeGrid::nodes() const {
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = node(i);
  return out;
}

AngleGrid::AngleGrid(int count_) : count(count_) {
  if (count < 1) throw std::invalid_argument("angle grid needs count >= 1");
}

std::vector<double> AngleGrid::nodes() const {
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = (i + 1) * kPi / count;
  return out;
}

FrequencyGrid::FrequencyGrid(int p_max_) : p_max(p_max_) {
  if (p_max < 1) throw std::invalid_argument("frequency grid needs p_max >= 1");
}

double nearest_in_cone(const PointPattern& pat, std::size_t i, const DoubleCone& cone) {
  require_points(pat, 2, "nearest_in_cone");
  if (i >= pat.size()) throw std::out_of_range("point index out of range");
  const Point xi = pat[i];
  double best = kInf;
  for (std::size_t j = 0; j < pat.size(); ++j) {
    if (j == i) continue;
    const Point d = pat[j] - xi;
    if (in_double_cone(d, cone)) best = std::min(best, d.norm());
  }
  return best;
}

std::vector<double> nearest_in_cone_all(const PointPattern& pat, const DoubleCone& cone) {
  require_points(pat, 2, "nearest_in_cone");
  const auto& pts = pat.points();
  // Cells sized so that a cone of half-angle eps still sees a few candidates per ring.
  const double per_cell = std::max(1.0, 2.0 * (kPi / 2) / cone.eps());
  CellIndex index(pat.window(), CellIndex::suggested_cell_size(pat.window(), pts.size(), per_cell),
                  pts);
  std::vector<double> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point xi = pts[i];
    auto [id, d] = index.nearest(xi, [&](std::size_t j) {
      return j != i && in_double_cone(pts[j] - xi, cone);
    });
    // Distances are recomputed exactly as in the direct scan.
    out[i] = std::isfinite(d) ? (pts[id] - xi).norm() : kInf;
  }
  return out;
}

SummaryCurve g_loc_hat(const PointPattern& pat, double alpha, double eps, const RangeGrid& grid) {
  require_points(pat, 2, "g_loc_hat");
  const DoubleCone cone(alpha, eps);
  const Window& w = pat.window();
  const std::vector<double> d = nearest_in_cone_all(pat, cone);
  std::vector<Contribution> contrib;
  contrib.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i])) continue;
    if (!eroded_rect_contains(w, cone, d[i], pat[i])) continue;
    const double area = erosion_area_cone(w, cone, d[i]);
    if (area <= 0.0) continue;
    contrib.push_back({d[i], 1.0 / area});
  }
  SummaryCurve out;
  out.nodes = grid.nodes();
  std::vector<double> numer = cumulate(contrib, out.nodes, /*strict=*/true);
  double total = 0.0;
  for (const Contribution& c : contrib) total += c.weight;  // same sorted order
  if (!(total > 0.0))
    throw std::runtime_error("g_loc_hat: no usable points (every cone neighbour distance is "
                             "infinite or its point lies outside the eroded window)");
  out.values.resize(numer.size());
  for (std::size_t i = 0; i < numer.size(); ++i) out.values[i] = numer[i] / total;
  return out;
}

SummaryCurve k_cyl_hat(const PointPattern& pat, double alpha, double zeta, const RangeGrid& grid) {
  require_points(pat, 2, "k_cyl_hat");
  if (!(zeta > 0.0)) throw std::invalid_argument("k_cyl_hat: aspect ratio must be positive");
  const Window& w = pat.window();
  const Point u = Point::unit(alpha);
  const double reach = grid.r_max * std::sqrt(1.0 + zeta * zeta);
  std::vector<Contribution> contrib;
  for_each_close_pair(pat, reach, [&](std::size_t i, std::size_t j) {
    const Point d = pat[i] - pat[j];
    const double t = std::fabs(d.x * u.x + d.y * u.y);
    const double s = std::fabs(-d.x * u.y + d.y * u.x);
    // Inside Cyl(alpha, zeta r, r) iff r >= t and zeta r >= s.
    const double threshold = std::max(t, s / zeta);
    if (threshold > grid.r_max) return;
    const double overlap = translation_overlap_area(w, d);
    if (!(overlap > 0.0)) throw std::runtime_error("k_cyl_hat: zero translation overlap");
    contrib.push_back({threshold, 2.0 / overlap});  // both ordered pairs
  });
  SummaryCurve out;
  out.nodes = grid.nodes();
  out.values = cumulate(contrib, out.nodes, /*strict=*/false);
  const double n = static_cast<double>(pat.size());
  const double scale = w.area() * w.area() / (n * n);
  for (double& v : out.values) v *= scale;
  return out;
}

namespace {

// Fixed summation order, so relabelling the points cannot change a single bit.
std::vector<Point> sorted_points(const PointPattern& pat) {
  std::vector<Point> pts = pat.points();
  std::sort(pts.begin(), pts.end(), [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  return pts;
}

}  // namespace

std::complex<double> dft(const PointPattern& pat, Point omega) {
  std::complex<double> acc{0.0, 0.0};
  for (const Point& p : sorted_points(pat)) acc += std::polar(1.0, -(omega.x * p.x + omega.y * p.y));
  return acc / std::sqrt(pat.window().area());
}

Periodogram::Periodogram(const PointPattern& pat, const FrequencyGrid& fg) : p_max_(fg.p_max) {
  require_points(pat, 1, "periodogram");
  const Window& w = pat.window();
  const int side = 2 * p_max_ + 1;
  values_.assign(static_cast<std::size_t>(side) * side, 0.0);
  const double f1 = 2.0 * kPi / w.width(), f2 = 2.0 * kPi / w.height();
  // Per-point phase factors for each axis, then products; only the upper half-plane is
  // computed and mirrored, which makes F(-omega) == F(omega) bitwise.
  std::vector<std::complex<double>> sums(static_cast<std::size_t>(side) * (p_max_ + 1));
  std::vector<std::complex<double>> e1(side), e2(p_max_ + 1);
  for (const Point& p : sorted_points(pat)) {
    for (int p1 = -p_max_; p1 <= p_max_; ++p1) e1[p1 + p_max_] = std::polar(1.0, -f1 * p1 * p.x);
    for (int p2 = 0; p2 <= p_max_; ++p2) e2[p2] = std::polar(1.0, -f2 * p2 * p.y);
    for (int p2 = 0; p2 <= p_max_; ++p2)
      for (int p1 = 0; p1 < side; ++p1) sums[static_cast<std::size_t>(p2) * side + p1] += e1[p1] * e2[p2];
  }
  const double inv_area = 1.0 / w.area();
  for (int p2 = 0; p2 <= p_max_; ++p2) {
    for (int p1 = -p_max_; p1 <= p_max_; ++p1) {
      if (p2 == 0 && p1 < 0) continue;
      const std::complex<double> s = sums[static_cast<std::size_t>(p2) * side + (p1 + p_max_)];
      const double v = std::norm(s) * inv_area;
      values_[index(p1, p2)] = v;
      values_[index(-p1, -p2)] = v;
    }
  }
}

double Periodogram::grid_mean() const {
  double acc = 0.0;
  std::size_t count = 0;
  for (int p2 = -p_max_; p2 <= p_max_; ++p2)
    for (int p1 = -p_max_; p1 <= p_max_; ++p1) {
      if (p1 == 0 && p2 == 0) continue;
      acc += at(p1, p2);
      ++count;
    }
  return acc / static_cast<double>(count);
}

Periodogram periodogram(const PointPattern& pat, const FrequencyGrid& fg) { return Periodogram(pat, fg); }

double frequency_angle(int p1, int p2) {
  if (p1 == 0 && p2 == 0) throw std::invalid_argument("frequency angle undefined at the origin");
  if (p1 == 0) return kPi / 2;
  double a = std::atan(static_cast<double>(p2) / static_cast<double>(p1));
  if (a < 0.0) a += kPi;
  return a;
}

SummaryCurve theta_spectrum(const Periodogram& pg, double bandwidth, const AngleGrid& ag) {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("theta_spectrum: bandwidth must be positive");
  const int pm = pg.p_max();
  SummaryCurve out;
  out.nodes = ag.nodes();
  out.values.resize(out.nodes.size());
  for (std::size_t k = 0; k < out.nodes.size(); ++k) {
    double acc = 0.0;
    std::size_t count = 0;
    for (int p2 = -pm; p2 <= pm; ++p2)
      for (int p1 = -pm; p1 <= pm; ++p1) {
        if (p1 == 0 && p2 == 0) continue;
        if (axial_distance(frequency_angle(p1, p2), out.nodes[k]) < bandwidth) {
          acc += pg.at(p1, p2);
          ++count;
        }
      }
    if (count == 0) throw std::invalid_argument("theta_spectrum: bandwidth too small for grid");
    out.values[k] = acc / static_cast<double>(count);
  }
  return out;
}

SummaryCurve theta_spectrum(const PointPattern& pat, const FrequencyGrid& fg, double bandwidth,
                            const AngleGrid& ag) {
  return theta_spectrum(Periodogram(pat, fg), bandwidth, ag);
}

SummaryCurve ripley_k_hat(const PointPattern& pat, const RangeGrid& grid) {
  require_points(pat, 2, "ripley_k_hat");
  const Window& w = pat.window();
  std::vector<Contribution> contrib;
  for_each_close_pair(pat, grid.r_max, [&](std::size_t i, std::size_t j) {
    const Point d = pat[i] - pat[j];
    const double overlap = translation_overlap_area(w, d);
    if (!(overlap > 0.0)) throw std::runtime_error("ripley_k_hat: zero translation overlap");
    contrib.push_back({d.norm(), 2.0 / overlap});
  });
  SummaryCurve out;
  out.nodes = grid.nodes();
  out.values = cumulate(contrib, out.nodes, /*strict=*/false);
  const double n = static_cast<double>(pat.size());
  const double scale = w.area() * w.area() / (n * n);
  for (double& v : out.values) v *= scale;
  return out;
}

SummaryCurve pcf_hat(const PointPattern& pat, const RangeGrid& grid, double bandwidth) {
  require_points(pat, 2, "pcf_hat");
  const Window& w = pat.window();
  const double n = static_cast<double>(pat.size());
  const double bw = bandwidth > 0.0 ? bandwidth : 0.15 / std::sqrt(n / w.area());
  std::vector<Contribution> contrib;
  for_each_close_pair(pat, grid.r_max + bw, [&](std::size_t i, std::size_t j) {
    const Point d = pat[i] - pat[j];
    const double overlap = translation_overlap_area(w, d);
    if (!(overlap > 0.0)) throw std::runtime_error("pcf_hat: zero translation overlap");
    contrib.push_back({d.norm(), 2.0 / overlap});
  });
  std::sort(contrib.begin(), contrib.end());
  SummaryCurve out;
  out.nodes = grid.nodes();
  out.values.assign(out.nodes.size(), 0.0);
  const double scale = w.area() * w.area() / (n * n);
  bool empty_mass = false;
  for (std::size_t k = 0; k < out.nodes.size(); ++k) {
    const double r = out.nodes[k];
    double acc = 0.0;
    auto lo = std::lower_bound(contrib.begin(), contrib.end(), Contribution{r - bw, -kInf});
    for (auto it = lo; it != contrib.end() && it->at <= r + bw; ++it) {
      const double u = (r - it->at) / bw;
      const double kern = 0.75 / bw * (1.0 - u * u);
      if (kern > 0.0) acc += kern * it->weight;
    }
    if (acc == 0.0) empty_mass = true;
    out.values[k] = scale * acc / (2.0 * kPi * r);
  }
  if (empty_mass) {
    out.flagged = true;
    out.note = "no pairs within the smoothing window at some ranges; values set to 0";
  }
  return out;
}

SummaryCurve spherical_contact_hat(const PointPattern& pat, int probes_per_axis,
                                   const RangeGrid& grid) {
  require_points(pat, 1, "spherical_contact_hat");
  if (probes_per_axis < 10)
    throw std::invalid_argument("spherical_contact_hat: at least 100 probes (10 per axis) required");
  const Window& w = pat.window();
  CellIndex index(w, CellIndex::suggested_cell_size(w, pat.size()), pat.points());
  const std::vector<double> nodes = grid.nodes();
  std::vector<long> surviving(nodes.size(), 0), covered(nodes.size(), 0);
  const double dx = w.width() / probes_per_axis, dy = w.height() / probes_per_axis;
  for (int iy = 0; iy < probes_per_axis; ++iy)
    for (int ix = 0; ix < probes_per_axis; ++ix) {
      const Point u{w.xmin() + (ix + 0.5) * dx, w.ymin() + (iy + 0.5) * dy};
      const double b = w.border_distance(u);
      const double d = index.nearest(u, [](std::size_t) { return true; }).second;
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (b < nodes[k]) break;
        ++surviving[k];
        if (d <= nodes[k]) ++covered[k];
      }
    }
  SummaryCurve out;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (surviving[k] == 0) {
      out.flagged = true;
      out.note = "no probes survive erosion beyond r = " +
                 (k == 0 ? std::string("0") : std::to_string(nodes[k - 1])) + "; curve truncated";
      break;
    }
    out.nodes.push_back(nodes[k]);
    out.values.push_back(static_cast<double>(covered[k]) / static_cast<double>(surviving[k]));
  }
  return out;
}

}  // namespace anisotest
