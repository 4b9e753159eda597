#include "anisotest/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "anisotest/optimize.hpp"
#include "anisotest/spatial_index.hpp"

namespace anisotest {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kQuadrature = 64;

void require_n(const PointPattern& pat, const char* who) {
  if (pat.size() < 10) throw std::invalid_argument(std::string(who) + ": at least 10 points required");
}

FitResult poisson_fallback(const PointPattern& pat, double objective, bool converged) {
  return {model::Poisson{pat.intensity()}, objective, converged, true};
}

// Trapezoid rule for the squared difference over grid nodes inside [lo, hi].
template <class Model>
double contrast(const SummaryCurve& est, double lo, double hi, double q, Model&& model) {
  double total = 0.0, prev_r = 0.0, prev_v = 0.0;
  bool first = true;
  for (std::size_t k = 0; k < est.nodes.size(); ++k) {
    const double r = est.nodes[k];
    if (r < lo || r > hi) continue;
    const double e = q == 1.0 ? est.values[k] : std::pow(std::max(est.values[k], 0.0), q);
    const double m = q == 1.0 ? model(r) : std::pow(model(r), q);
    const double v = (e - m) * (e - m);
    if (!first) total += 0.5 * (r - prev_r) * (v + prev_v);
    prev_r = r, prev_v = v, first = false;
  }
  return total;
}

// t(u) for the quadrature midpoints and for the data points (self excluded).
struct StraussCounts {
  std::vector<int> data, dummy;
  double cell_weight = 0.0;
};

StraussCounts strauss_counts(const PointPattern& pat, double rd) {
  const Window& w = pat.window();
  CellIndex index(w, std::max(rd, CellIndex::suggested_cell_size(w, pat.size())), pat.points());
  StraussCounts c;
  c.data.resize(pat.size());
  for (std::size_t i = 0; i < pat.size(); ++i) {
    int t = 0;
    index.for_each_within(pat[i], rd, [&](std::size_t j, double) { t += j != i; });
    c.data[i] = t;
  }
  const double dx = w.width() / kQuadrature, dy = w.height() / kQuadrature;
  c.cell_weight = dx * dy;
  c.dummy.reserve(kQuadrature * kQuadrature);
  for (int iy = 0; iy < kQuadrature; ++iy)
    for (int ix = 0; ix < kQuadrature; ++ix) {
      int t = 0;
      index.for_each_within({w.xmin() + (ix + 0.5) * dx, w.ymin() + (iy + 0.5) * dy}, rd,
                            [&](std::size_t, double) { ++t; });
      c.dummy.push_back(t);
    }
  return c;
}

// sum_k w gamma^{t_k}, with 0^0 = 1.
double strauss_mass(const StraussCounts& c, double log_gamma) {
  double s = 0.0;
  for (int t : c.dummy) s += t == 0 ? 1.0 : std::exp(t * log_gamma);
  return s * c.cell_weight;
}

}  // namespace

RangeGrid default_fit_grid(const Window& win) { return RangeGrid(win.min_side() / 4.0, 100); }

double thomas_k(double r, double kappa, double sigma) {
  return kPi * r * r + (1.0 - std::exp(-r * r / (4.0 * sigma * sigma))) / kappa;
}

double lgcp_pcf(double r, double sigma2, double h) { return std::exp(sigma2 * std::exp(-r / h)); }

FitResult fit_thomas_mincontrast(const PointPattern& pat, const RangeGrid& grid) {
  require_n(pat, "fit_thomas_mincontrast");
  const Window& w = pat.window();
  const double l = w.min_side(), n = static_cast<double>(pat.size());
  const SummaryCurve k = ripley_k_hat(pat, grid);
  auto objective = [&](std::span<const double> x) {
    const double kappa = std::exp(x[0]), sigma = std::exp(x[1]);
    return contrast(k, l / 100.0, l / 4.0, 0.25, [&](double r) { return thomas_k(r, kappa, sigma); });
  };
  const double kappa0 = n / (4.0 * w.area()), sigma0 = l / 20.0;
  const NelderMeadResult nm = nelder_mead(objective, {std::log(kappa0), std::log(sigma0)}, {0.5, 0.5});
  const double kappa = std::exp(nm.x[0]), sigma = std::exp(nm.x[1]);
  if (!std::isfinite(kappa) || !std::isfinite(sigma) || sigma > l / 2.0 || kappa * w.area() > n)
    return poisson_fallback(pat, nm.value, nm.converged);
  return {model::Thomas{kappa, n / (w.area() * kappa), sigma}, nm.value, nm.converged, false};
}

FitResult fit_thomas_mincontrast(const PointPattern& pat) {
  return fit_thomas_mincontrast(pat, default_fit_grid(pat.window()));
}

FitResult fit_lgcp_mincontrast(const PointPattern& pat, const RangeGrid& grid) {
  require_n(pat, "fit_lgcp_mincontrast");
  const Window& w = pat.window();
  const double l = w.min_side(), n = static_cast<double>(pat.size());
  const SummaryCurve g = pcf_hat(pat, grid);
  // sigma2 is projected onto [0, inf); h is optimised on the log scale.
  auto objective = [&](std::span<const double> x) {
    const double s2 = std::max(x[0], 0.0), h = std::exp(x[1]);
    return contrast(g, l / 100.0, l / 4.0, 1.0, [&](double r) { return lgcp_pcf(r, s2, h); });
  };
  double gmax = 0.0;
  for (std::size_t k = 0; k < g.nodes.size(); ++k)
    if (g.nodes[k] >= l / 100.0 && g.nodes[k] <= l / 4.0) gmax = std::max(gmax, g.values[k]);
  const double s20 = gmax > 1.0 ? std::log(gmax) : 0.0;
  const NelderMeadResult nm = nelder_mead(objective, {s20, std::log(l / 50.0)}, {0.5, 0.5});
  const double s2 = std::max(nm.x[0], 0.0), h = std::exp(nm.x[1]);
  if (!std::isfinite(h)) return poisson_fallback(pat, nm.value, nm.converged);
  model::Lgcp m;
  m.sigma2 = s2;
  m.scale = h;
  m.mu = std::log(n / w.area()) - s2 / 2.0;
  return {m, nm.value, nm.converged, s2 == 0.0};
}

FitResult fit_lgcp_mincontrast(const PointPattern& pat) {
  return fit_lgcp_mincontrast(pat, default_fit_grid(pat.window()));
}

StraussRangeEstimate estimate_strauss_range(const PointPattern& pat) {
  require_n(pat, "estimate_strauss_range");
  const double l = pat.window().min_side();
  const RangeGrid grid(99.0 * l / 400.0, 99);
  const SummaryCurve k = ripley_k_hat(pat, grid);
  StraussRangeEstimate out;
  out.maximum = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k.nodes.size(); ++i) {
    const double r = k.nodes[i];
    const double v = std::sqrt(kPi) * r - std::sqrt(std::max(k.values[i], 0.0));
    if (v > out.maximum) out.maximum = v, out.range = r;
  }
  out.repelling = out.maximum > 0.0;
  return out;
}

double strauss_profile_beta(const PointPattern& pat, double rd, double gamma) {
  if (!(rd > 0.0)) throw std::invalid_argument("strauss_profile_beta: interaction range must be > 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("strauss_profile_beta: gamma must lie in [0, 1]");
  const StraussCounts c = strauss_counts(pat, rd);
  const double lg = gamma > 0.0 ? std::log(gamma) : -std::numeric_limits<double>::infinity();
  return static_cast<double>(pat.size()) / strauss_mass(c, lg);
}

FitResult fit_strauss_mpl(const PointPattern& pat, double rd) {
  require_n(pat, "fit_strauss_mpl");
  if (!(rd > 0.0)) throw std::invalid_argument("fit_strauss_mpl: interaction range must be > 0");
  const StraussCounts c = strauss_counts(pat, rd);
  const double n = static_cast<double>(pat.size());
  double s = 0.0;
  for (int t : c.data) s += t;

  // Profile log pseudolikelihood in g = log(gamma); concave, derivative s - n E_g[t].
  auto profile = [&](double g) { return n * std::log(n / strauss_mass(c, g)) + g * s - n; };
  auto slope = [&](double g) {
    double num = 0.0, den = 0.0;
    for (int t : c.dummy) {
      const double e = t == 0 ? 1.0 : std::exp(t * g);
      num += t * e;
      den += e;
    }
    return s - n * num / den;
  };

  model::Strauss m;
  m.range = rd;
  if (slope(0.0) >= 0.0) {
    return {model::Poisson{pat.intensity()}, -profile(0.0), true, true};
  }
  if (s == 0.0) {
    // No close pairs: the pseudolikelihood increases all the way to the hard core.
    m.gamma = 0.0;
    m.beta = n / strauss_mass(c, -std::numeric_limits<double>::infinity());
    return {m, -(n * std::log(m.beta) - n), true, false};
  }
  double lo = -30.0, hi = 0.0;
  if (slope(lo) < 0.0) {
    hi = lo;
  } else {
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      (slope(mid) >= 0.0 ? lo : hi) = mid;
    }
  }
  const double g = 0.5 * (lo + hi);
  m.gamma = std::exp(g);
  m.beta = n / strauss_mass(c, g);
  return {m, -profile(g), true, false};
}

}  // namespace anisotest
