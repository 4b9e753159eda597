#pragma once

#include <complex>
#include <string>
#include <vector>

#include "anisotest/geometry.hpp"

namespace anisotest {

/// Ranges r_i = i * r_max / count, i = 1..count (r_0 = 0 excluded).
struct RangeGrid {
  double r_max;
  int count;

  RangeGrid(double r_max_, int count_);
  double node(int i) const { return (i + 1) * r_max / count; }  // zero-based
  std::vector<double> nodes() const;
};

/// Angles alpha_i = i * pi / count, i = 1..count.
struct AngleGrid {
  int count;

  explicit AngleGrid(int count_);
  std::vector<double> nodes() const;
};

/// Integer frequency indices p1, p2 in [-p_max, p_max], origin excluded.
struct FrequencyGrid {
  int p_max;

  explicit FrequencyGrid(int p_max_);
};

/// A summary function evaluated on a grid of ranges or angles.
struct SummaryCurve {
  std::vector<double> nodes;
  std::vector<double> values;
  /// Set when part of the requested grid could not be estimated.
  bool flagged = false;
  std::string note;
};

/// Distance from point i to its nearest neighbour inside the double cone
/// centred at it, or +infinity when the cone holds no other point.
double nearest_in_cone(const PointPattern& pat, std::size_t i, const DoubleCone& cone);
/// nearest_in_cone for every point at once.
std::vector<double> nearest_in_cone_all(const PointPattern& pat, const DoubleCone& cone);

/// Local directional nearest-neighbour distribution with Hanisch edge correction.
SummaryCurve g_loc_hat(const PointPattern& pat, double alpha, double eps, const RangeGrid& grid);

/// Cylindrical K-function with fixed aspect ratio zeta, translation edge correction.
SummaryCurve k_cyl_hat(const PointPattern& pat, double alpha, double zeta, const RangeGrid& grid);

/// |W|^{-1/2} sum_j exp(-i omega . x_j).
std::complex<double> dft(const PointPattern& pat, Point omega);

/// Bartlett periodogram on the integer frequency grid, omega = 2 pi (p1 / l1, p2 / l2).
class Periodogram {
 public:
  Periodogram(const PointPattern& pat, const FrequencyGrid& fg);

  int p_max() const { return p_max_; }
  double at(int p1, int p2) const { return values_[index(p1, p2)]; }
  /// Mean over all grid frequencies except the origin.
  double grid_mean() const;

 private:
  std::size_t index(int p1, int p2) const {
    return static_cast<std::size_t>(p2 + p_max_) * (2 * p_max_ + 1) + (p1 + p_max_);
  }
  int p_max_;
  std::vector<double> values_;
};

Periodogram periodogram(const PointPattern& pat, const FrequencyGrid& fg);

/// Axial angle of the frequency index (p1, p2): arctan(p2 / p1) mod pi, pi/2 on p1 = 0.
double frequency_angle(int p1, int p2);

/// Direction spectrum: periodogram averaged over frequencies within `bandwidth`
/// (wrapped modulo pi) of each grid angle.
SummaryCurve theta_spectrum(const PointPattern& pat, const FrequencyGrid& fg, double bandwidth,
                            const AngleGrid& ag);
SummaryCurve theta_spectrum(const Periodogram& pg, double bandwidth, const AngleGrid& ag);

/// Ripley's K with translation edge correction.
SummaryCurve ripley_k_hat(const PointPattern& pat, const RangeGrid& grid);

/// Pair-correlation function: Epanechnikov-smoothed, translation corrected,
/// half-width 0.15 / sqrt(n / |W|) unless `bandwidth` > 0.
SummaryCurve pcf_hat(const PointPattern& pat, const RangeGrid& grid, double bandwidth = 0.0);

/// Border-corrected spherical contact distribution from a regular probe grid
/// with `probes_per_axis`^2 cell-centred probes.
SummaryCurve spherical_contact_hat(const PointPattern& pat, int probes_per_axis,
                                   const RangeGrid& grid);

inline constexpr int kDefaultProbesPerAxis = 128;

}  // namespace anisotest
