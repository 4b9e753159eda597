#include "anisotest/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace anisotest {

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                             std::vector<double> steps, const NelderMeadOptions& opts) {
  const std::size_t d = x0.size();
  if (d == 0 || steps.size() != d) throw std::invalid_argument("nelder_mead: dimension mismatch");
  auto eval = [&](const std::vector<double>& x) {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> simplex(d + 1, x0);
  for (std::size_t i = 0; i < d; ++i) simplex[i + 1][i] += steps[i];
  std::vector<double> values(d + 1);
  for (std::size_t i = 0; i <= d; ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(d + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    // Stable on ties so the start point wins over later vertices with equal value.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::vector<double>> s(d + 1);
    std::vector<double> v(d + 1);
    for (std::size_t i = 0; i <= d; ++i) s[i] = simplex[order[i]], v[i] = values[order[i]];
    simplex.swap(s);
    values.swap(v);
  };

  NelderMeadResult res;
  auto affine = [&](const std::vector<double>& c, const std::vector<double>& x, double t) {
    std::vector<double> out(d);
    for (std::size_t k = 0; k < d; ++k) out[k] = c[k] + t * (x[k] - c[k]);
    return out;
  };

  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    sort_simplex();
    const double lo = values.front(), hi = values.back();
    if (std::isfinite(hi) && hi - lo <= opts.rel_tol * (std::abs(lo) + std::abs(hi)) + 1e-300) {
      res.converged = true;
      break;
    }
    std::vector<double> centroid(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < d; ++k) centroid[k] += simplex[i][k] / static_cast<double>(d);

    const auto xr = affine(centroid, simplex[d], -1.0);
    const double fr = eval(xr);
    if (fr < values[0]) {
      const auto xe = affine(centroid, simplex[d], -2.0);
      const double fe = eval(xe);
      if (fe < fr) simplex[d] = xe, values[d] = fe;
      else simplex[d] = xr, values[d] = fr;
      continue;
    }
    if (fr < values[d - 1]) {
      simplex[d] = xr, values[d] = fr;
      continue;
    }
    const bool outside = fr < values[d];
    const auto xc = outside ? affine(centroid, xr, 0.5) : affine(centroid, simplex[d], 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : values[d])) {
      simplex[d] = xc, values[d] = fc;
      continue;
    }
    for (std::size_t i = 1; i <= d; ++i) {
      simplex[i] = affine(simplex[0], simplex[i], 0.5);
      values[i] = eval(simplex[i]);
    }
  }
  sort_simplex();
  res.x = simplex[0];
  res.value = values[0];
  res.iterations = it;
  return res;
}

}  // namespace anisotest
