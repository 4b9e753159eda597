#pragma once

#include <optional>

#include "anisotest/geometry.hpp"
#include "anisotest/processes.hpp"
#include "anisotest/summaries.hpp"

namespace anisotest {

struct FitResult {
  ModelSpec model;
  double objective = 0.0;
  bool converged = false;
  /// The fitted model degenerated to Poisson(n / |W|).
  bool fallback_to_poisson = false;
};

/// Default contrast grid: 100 ranges up to l/4, l the shorter window side.
RangeGrid default_fit_grid(const Window& win);

/// K(r) = pi r^2 + (1 - exp(-r^2 / (4 sigma^2))) / kappa.
double thomas_k(double r, double kappa, double sigma);
/// g(r) = exp(sigma2 exp(-r / h)).
double lgcp_pcf(double r, double sigma2, double h);

/// Minimum contrast on K^{1/4} over [l/100, l/4].
FitResult fit_thomas_mincontrast(const PointPattern& pat, const RangeGrid& grid);
FitResult fit_thomas_mincontrast(const PointPattern& pat);
/// Minimum contrast on the pair-correlation function over [l/100, l/4].
FitResult fit_lgcp_mincontrast(const PointPattern& pat, const RangeGrid& grid);
FitResult fit_lgcp_mincontrast(const PointPattern& pat);

/// Range maximising sqrt(pi r^2) - sqrt(K(r)) on r = i l / 400 < l / 4.
struct StraussRangeEstimate {
  double range = 0.0;
  double maximum = 0.0;
  /// False when the maximand is <= 0 everywhere (no repulsion detected).
  bool repelling = false;
};
StraussRangeEstimate estimate_strauss_range(const PointPattern& pat);

/// beta maximising the pseudolikelihood for fixed gamma.
double strauss_profile_beta(const PointPattern& pat, double rd, double gamma);
/// Maximum pseudolikelihood with 64 x 64 midpoint quadrature.
FitResult fit_strauss_mpl(const PointPattern& pat, double rd);

}  // namespace anisotest
