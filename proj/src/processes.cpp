#include "anisotest/processes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "anisotest/gaussian_field.hpp"
#include "anisotest/spatial_index.hpp"

namespace anisotest {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

Point uniform_in(const Window& w, RngStream& rng) {
  return {rng.uniform(w.xmin(), w.xmax()), rng.uniform(w.ymin(), w.ymax())};
}

std::vector<Point> poisson_points(double lambda, const Window& w, RngStream& rng) {
  const std::uint64_t n = rng.poisson(lambda * w.area());
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) pts.push_back(uniform_in(w, rng));
  return pts;
}

}  // namespace

std::string model_name(const ModelSpec& spec) {
  return std::visit(overloaded{
                        [](const model::Poisson&) { return std::string("poisson"); },
                        [](const model::Lgcp&) { return std::string("lgcp"); },
                        [](const model::GibbsLJ&) { return std::string("gibbs"); },
                        [](const model::Plcp&) { return std::string("plcp"); },
                        [](const model::Thomas&) { return std::string("thomas"); },
                        [](const model::Strauss&) { return std::string("strauss"); },
                    },
                    spec);
}

double model_anisotropy(const ModelSpec& spec) {
  return std::visit(overloaded{
                        [](const model::Lgcp& m) { return m.a; },
                        [](const model::GibbsLJ& m) { return m.a; },
                        [](const model::Plcp& m) { return m.a; },
                        [](const auto&) { return 1.0; },
                    },
                    spec);
}

ModelSpec with_anisotropy(const ModelSpec& spec, double a) {
  ModelSpec out = spec;
  std::visit(overloaded{
                 [a](model::Lgcp& m) { m.a = a; },
                 [a](model::GibbsLJ& m) { m.a = a; },
                 [a](model::Plcp& m) { m.a = a; },
                 [](auto&) {},
             },
             out);
  return out;
}

void validate(const ModelSpec& spec) {
  std::visit(overloaded{
                 [](const model::Poisson& m) { require(m.lambda >= 0.0, "poisson: lambda must be >= 0"); },
                 [](const model::Lgcp& m) {
                   require(std::isfinite(m.mu), "lgcp: mu must be finite");
                   require(m.sigma2 >= 0.0, "lgcp: sigma2 must be >= 0");
                   require(m.scale > 0.0, "lgcp: scale must be > 0");
                   require(m.a > 0.0 && m.a <= 1.0, "lgcp: anisotropy a must lie in (0, 1]");
                 },
                 [](const model::GibbsLJ& m) {
                   require(std::isfinite(m.alpha_chem), "gibbs: alpha must be finite");
                   require(m.rho >= 0.0, "gibbs: rho must be >= 0");
                   require(m.sigma > 0.0, "gibbs: sigma must be > 0");
                   require(m.eps_cone > 0.0 && m.eps_cone <= kPi / 2, "gibbs: cone half-angle must lie in (0, pi/2]");
                   require(m.a > 0.0 && m.a <= 1.0, "gibbs: anisotropy a must lie in (0, 1]");
                   require(m.iterations >= 1, "gibbs: iterations must be >= 1");
                 },
                 [](const model::Plcp& m) {
                   require(m.rho_lines >= 0.0 && m.nu >= 0.0, "plcp: intensities must be >= 0");
                   require(m.sigma_perp >= 0.0, "plcp: sigma must be >= 0");
                   require(m.a > 0.0 && m.a <= 1.0, "plcp: anisotropy a must lie in (0, 1]");
                 },
                 [](const model::Thomas& m) {
                   require(m.kappa_parent >= 0.0 && m.mu_offspring >= 0.0, "thomas: intensities must be >= 0");
                   require(m.sigma_offspring > 0.0, "thomas: sigma must be > 0");
                 },
                 [](const model::Strauss& m) {
                   require(m.beta >= 0.0, "strauss: beta must be >= 0");
                   require(m.gamma >= 0.0 && m.gamma <= 1.0, "strauss: gamma must lie in [0, 1]");
                   require(m.range > 0.0, "strauss: interaction range must be > 0");
                   require(m.iterations >= 1, "strauss: iterations must be >= 1");
                 },
             },
             spec);
}

ModelSpec study_model(const std::string& name, double a, double theta) {
  if (name == "lgcp") {
    model::Lgcp m;
    m.sigma2 = 3.0;
    m.scale = 0.02;
    m.mu = std::log(400.0) - m.sigma2 / 2.0;
    m.a = a;
    m.theta = theta;
    return m;
  }
  if (name == "gibbs") {
    model::GibbsLJ m;
    m.a = a;
    m.theta = theta;
    return m;
  }
  if (name == "plcp") {
    model::Plcp m;
    m.a = a;
    m.theta = theta;
    return m;
  }
  throw std::invalid_argument("unknown study model '" + name + "' (expected lgcp, gibbs or plcp)");
}

double plcp_concentration(double a) { return 5.0 * (1.0 - std::exp(1.0 - 1.0 / a)); }

PointPattern sim_poisson(double lambda, const Window& win, RngStream& rng) {
  require(lambda >= 0.0, "sim_poisson: lambda must be >= 0");
  return PointPattern::from_samples(poisson_points(lambda, win, rng), win);
}

double sample_von_mises(double mu, double kappa, RngStream& rng) {
  require(kappa >= 0.0, "von Mises concentration must be >= 0");
  double angle;
  if (kappa < 1e-8) {
    angle = rng.uniform(0.0, 2.0 * kPi);
  } else {
    // Best & Fisher (1979) wrapped-Cauchy envelope.
    const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
    const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
    const double r = (1.0 + rho * rho) / (2.0 * rho);
    double f;
    for (;;) {
      const double u1 = rng.uniform(), u2 = rng.uniform();
      const double z = std::cos(kPi * u1);
      f = (1.0 + r * z) / (r + z);
      const double c = kappa * (r - f);
      if (c * (2.0 - c) - u2 > 0.0) break;
      if (u2 > 0.0 && std::log(c / u2) + 1.0 - c >= 0.0) break;
    }
    const double u3 = rng.uniform();
    angle = mu + (u3 > 0.5 ? 1.0 : -1.0) * std::acos(std::clamp(f, -1.0, 1.0));
  }
  angle = std::fmod(angle, 2.0 * kPi);
  if (angle < 0.0) angle += 2.0 * kPi;
  if (angle >= 2.0 * kPi) angle = 0.0;
  return angle;
}

PointPattern sim_lgcp(const model::Lgcp& spec, const Window& win, RngStream& rng) {
  validate(spec);
  const bool transform = spec.a != 1.0;
  const double ct = std::cos(spec.theta), st = std::sin(spec.theta);
  // Forward map q -> R(theta) C(a) q and its inverse.
  auto forward = [&](Point q) {
    const Point s{q.x / spec.a, q.y * spec.a};
    return Point{ct * s.x - st * s.y, st * s.x + ct * s.y};
  };
  auto inverse = [&](Point p) {
    const Point r{ct * p.x + st * p.y, -st * p.x + ct * p.y};
    return Point{r.x * spec.a, r.y / spec.a};
  };

  Window box = win;
  if (transform) {
    double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
    for (Point c : {Point{win.xmin(), win.ymin()}, Point{win.xmax(), win.ymin()},
                    Point{win.xmin(), win.ymax()}, Point{win.xmax(), win.ymax()}}) {
      const Point q = inverse(c);
      x0 = std::min(x0, q.x), x1 = std::max(x1, q.x);
      y0 = std::min(y0, q.y), y1 = std::max(y1, q.y);
    }
    box = Window(x0, x1, y0, y1);
  }

  const double res_x = std::min(spec.scale / 2.0, box.width() / 256.0);
  const double res_y = std::min(spec.scale / 2.0, box.height() / 256.0);
  FieldGrid grid;
  grid.nx = static_cast<int>(std::ceil(box.width() / res_x - 1e-9));
  grid.ny = static_cast<int>(std::ceil(box.height() / res_y - 1e-9));
  grid.dx = box.width() / grid.nx;
  grid.dy = box.height() / grid.ny;

  std::vector<double> field;
  if (spec.sigma2 > 0.0) {
    field = cached_field_sampler(grid, {spec.sigma2, spec.scale})->sample(rng);
  } else {
    field.assign(static_cast<std::size_t>(grid.nx) * grid.ny, 0.0);
  }

  const double cell_area = grid.dx * grid.dy;
  std::vector<Point> pts;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const double mean = std::exp(spec.mu + field[static_cast<std::size_t>(j) * grid.nx + i]) * cell_area;
      const std::uint64_t count = rng.poisson(mean);
      for (std::uint64_t k = 0; k < count; ++k) {
        const Point q{box.xmin() + (i + rng.uniform()) * grid.dx, box.ymin() + (j + rng.uniform()) * grid.dy};
        const Point p = transform ? forward(q) : q;
        if (win.contains(p)) pts.push_back(p);
      }
    }
  return PointPattern::from_samples(std::move(pts), win);
}

double lj_sigma_in_cone(const model::GibbsLJ& spec) { return spec.sigma * std::sqrt(2.0 - std::cbrt(spec.a)); }
double lj_sigma_outside(const model::GibbsLJ& spec) { return spec.sigma * std::pow(spec.a, 1.0 / 6.0); }

namespace {

struct LjKernel {
  DoubleCone cone;
  double sigma_in, sigma_out, four_rho;
  bool guard;

  explicit LjKernel(const model::GibbsLJ& spec)
      : cone(spec.theta, spec.eps_cone),
        sigma_in(lj_sigma_in_cone(spec)),
        sigma_out(lj_sigma_outside(spec)),
        four_rho(4.0 * spec.rho),
        guard(spec.rho > 0.0) {}

  double operator()(Point d) const {
    const double r2 = d.x * d.x + d.y * d.y;
    if (r2 == 0.0) throw std::invalid_argument("Lennard-Jones potential undefined at zero separation");
    const double s = in_double_cone(d, cone) ? sigma_in : sigma_out;
    if (guard && r2 * 100.0 < s * s) return kInf;
    const double q2 = s * s / r2;
    const double q6 = q2 * q2 * q2;
    return four_rho * (q6 * q6 - q6);
  }
};

// Shared birth-death-move driver. `local(u, skip)` returns the interaction energy of
// a point at u with every current point except index `skip`.
template <class Local>
void birth_death_move(CellIndex& state, const Window& win, double alpha, int iterations, RngStream& rng,
                      Local&& local, double& energy, ChainTrace* trace) {
  const double area = win.area();
  ChainTrace t;
  const std::size_t none = std::numeric_limits<std::size_t>::max();
  for (int it = 0; it < iterations; ++it) {
    const double kind = rng.uniform();
    const std::size_t n = state.size();
    if (kind < 1.0 / 3.0) {
      ++t.births;
      const Point u = uniform_in(win, rng);
      const double delta = alpha + local(u, none);
      const double log_ratio = -delta + std::log(area / static_cast<double>(n + 1));
      if (std::log(rng.uniform()) < log_ratio) {
        state.add(u);
        energy += delta;
        ++t.accepted_births;
      }
    } else if (kind < 2.0 / 3.0) {
      ++t.deaths;
      if (n == 0) continue;
      const std::size_t i = rng.index(n);
      const double delta = -alpha - local(state[i], i);
      const double log_ratio = -delta + std::log(static_cast<double>(n) / area);
      if (std::log(rng.uniform()) < log_ratio) {
        state.remove(i);
        energy += delta;
        ++t.accepted_deaths;
      }
    } else {
      ++t.moves;
      if (n == 0) continue;
      const std::size_t i = rng.index(n);
      const Point u = uniform_in(win, rng);
      const double before = local(state[i], i);
      const double after = local(u, i);
      const double delta = after - before;
      if (std::log(rng.uniform()) < -delta) {
        state.move(i, u);
        energy += delta;
        ++t.accepted_moves;
      }
    }
    if (!std::isfinite(energy)) t.all_energies_finite = false;
  }
  if (trace) {
    const double keep_inc = energy;
    *trace = t;
    trace->energy_incremental = keep_inc;
  }
}

}  // namespace

double lj_pair_potential(Point delta, const model::GibbsLJ& spec) { return LjKernel(spec)(delta); }

double gibbs_lj_energy(const model::GibbsLJ& spec, const PointPattern& pat) {
  const LjKernel phi(spec);
  double e = spec.alpha_chem * static_cast<double>(pat.size());
  for (std::size_t j = 1; j < pat.size(); ++j)
    for (std::size_t i = 0; i < j; ++i) e += phi(pat[i] - pat[j]);
  return e;
}

PointPattern sim_gibbs_lj_from(const model::GibbsLJ& spec, const PointPattern& initial, int iterations,
                               RngStream& rng, ChainTrace* trace) {
  validate(spec);
  require(iterations >= 1, "sim_gibbs_lj: iterations must be >= 1");
  const Window& win = initial.window();
  const LjKernel phi(spec);
  CellIndex state(win, CellIndex::suggested_cell_size(win, initial.size()), initial.points());
  auto local = [&](Point u, std::size_t skip) {
    double e = 0.0;
    const auto& pts = state.points();
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (j == skip) continue;
      const Point d = u - pts[j];
      if (d.x == 0.0 && d.y == 0.0) return kInf;
      e += phi(d);
    }
    return e;
  };
  double energy = gibbs_lj_energy(spec, initial);
  birth_death_move(state, win, spec.alpha_chem, iterations, rng, local, energy, trace);
  PointPattern out = PointPattern::from_samples(state.points(), win);
  if (trace) trace->energy_recomputed = gibbs_lj_energy(spec, out);
  return out;
}

PointPattern sim_gibbs_lj(const model::GibbsLJ& spec, const Window& win, int iterations, RngStream& rng,
                          ChainTrace* trace) {
  validate(spec);
  // Start from Poisson, thinned so that no pair sits inside the potential's overflow guard.
  const LjKernel phi(spec);
  std::vector<Point> start;
  for (const Point& p : poisson_points(spec.initial_intensity, win, rng)) {
    bool ok = true;
    for (const Point& q : start)
      if (!std::isfinite(phi(p - q))) {
        ok = false;
        break;
      }
    if (ok) start.push_back(p);
  }
  return sim_gibbs_lj_from(spec, PointPattern::from_samples(std::move(start), win), iterations, rng, trace);
}

PlcpRealisation sim_plcp_with_lines(const model::Plcp& spec, const Window& win, RngStream& rng) {
  validate(spec);
  const Point c = win.centre();
  const double margin = 4.0 * spec.sigma_perp;
  const double radius = win.circumradius() + margin;
  const double kappa = plcp_concentration(spec.a);
  const std::uint64_t n_lines = rng.poisson(2.0 * radius * spec.rho_lines);
  std::vector<PlcpLine> lines;
  std::vector<Point> pts;
  std::vector<std::size_t> parent;
  for (std::uint64_t l = 0; l < n_lines; ++l) {
    const double phi = sample_von_mises(spec.theta, kappa, rng);
    const double offset = rng.uniform(-radius, radius);
    lines.push_back({phi, offset});
    const Point u = Point::unit(phi);
    const Point nrm{-u.y, u.x};
    const double half = std::sqrt(std::max(0.0, radius * radius - offset * offset)) + margin;
    const std::uint64_t m = rng.poisson(spec.nu * 2.0 * half);
    for (std::uint64_t k = 0; k < m; ++k) {
      const double t = rng.uniform(-half, half);
      const double shift = spec.sigma_perp > 0.0 ? rng.normal(0.0, spec.sigma_perp) : 0.0;
      const Point p = c + t * u + (offset + shift) * nrm;
      if (win.contains(p)) {
        pts.push_back(p);
        parent.push_back(lines.size() - 1);
      }
    }
  }
  // from_samples keeps order, so parents stay aligned unless a duplicate was dropped.
  PointPattern pattern = PointPattern::from_samples(pts, win);
  if (pattern.size() != pts.size()) {
    std::vector<std::size_t> kept;
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size() && k < pattern.size(); ++i)
      if (pts[i] == pattern[k]) kept.push_back(parent[i]), ++k;
    parent = std::move(kept);
  }
  return {std::move(pattern), std::move(lines), std::move(parent)};
}

PointPattern sim_plcp(const model::Plcp& spec, const Window& win, RngStream& rng) {
  return sim_plcp_with_lines(spec, win, rng).pattern;
}

PointPattern sim_thomas(const model::Thomas& spec, const Window& win, RngStream& rng) {
  validate(spec);
  const Window parents_win = win.dilated(4.0 * spec.sigma_offspring);
  const std::vector<Point> parents = poisson_points(spec.kappa_parent, parents_win, rng);
  std::vector<Point> pts;
  for (const Point& c : parents) {
    const std::uint64_t m = rng.poisson(spec.mu_offspring);
    for (std::uint64_t k = 0; k < m; ++k) {
      const Point p{c.x + rng.normal(0.0, spec.sigma_offspring), c.y + rng.normal(0.0, spec.sigma_offspring)};
      if (win.contains(p)) pts.push_back(p);
    }
  }
  return PointPattern::from_samples(std::move(pts), win);
}

std::size_t close_pair_count(const PointPattern& pat, double r) {
  if (pat.size() < 2) return 0;
  CellIndex index(pat.window(), std::max(r, CellIndex::suggested_cell_size(pat.window(), pat.size())),
                  pat.points());
  std::size_t count = 0;
  for (std::size_t i = 0; i < pat.size(); ++i)
    index.for_each_within(pat[i], r, [&](std::size_t j, double) {
      if (j > i) ++count;
    });
  return count;
}

PointPattern sim_strauss(const model::Strauss& spec, const Window& win, int iterations, RngStream& rng,
                         ChainTrace* trace) {
  validate(spec);
  require(iterations >= 1, "sim_strauss: iterations must be >= 1");
  const double log_gamma = spec.gamma > 0.0 ? std::log(spec.gamma) : -kInf;
  const double r = spec.range;
  // Start from Poisson; under a hard core (gamma = 0) conflicting points are thinned.
  CellIndex state(win, std::max(r, CellIndex::suggested_cell_size(win, 1 + static_cast<std::size_t>(
                                                                          spec.initial_intensity * win.area()))));
  for (const Point& p : poisson_points(spec.initial_intensity, win, rng)) {
    if (spec.gamma == 0.0) {
      bool clash = false;
      state.for_each_within(p, r, [&](std::size_t, double) { clash = true; });
      if (clash) continue;
    }
    state.add(p);
  }
  auto neighbours = [&](Point u, std::size_t skip) {
    std::size_t t = 0;
    state.for_each_within(u, r, [&](std::size_t j, double) {
      if (j != skip) ++t;
    });
    return t;
  };
  // Energy -n log(beta) - s log(gamma); the chemical term is carried as alpha = -log(beta).
  auto local = [&](Point u, std::size_t skip) {
    const std::size_t t = neighbours(u, skip);
    return t == 0 ? 0.0 : -static_cast<double>(t) * log_gamma;
  };
  const double alpha = spec.beta > 0.0 ? -std::log(spec.beta) : kInf;
  auto energy_of = [&](std::size_t n, std::size_t s) {
    return static_cast<double>(n) * alpha + (s == 0 ? 0.0 : -static_cast<double>(s) * log_gamma);
  };
  const PointPattern start = PointPattern::trusted(state.points(), win);
  double energy = energy_of(start.size(), close_pair_count(start, r));
  birth_death_move(state, win, alpha, iterations, rng, local, energy, trace);
  PointPattern out = PointPattern::from_samples(state.points(), win);
  if (trace) trace->energy_recomputed = energy_of(out.size(), close_pair_count(out, r));
  return out;
}

PointPattern simulate(const ModelSpec& spec, const Window& win, RngStream& rng) {
  return std::visit(overloaded{
                        [&](const model::Poisson& m) { return sim_poisson(m.lambda, win, rng); },
                        [&](const model::Lgcp& m) { return sim_lgcp(m, win, rng); },
                        [&](const model::GibbsLJ& m) { return sim_gibbs_lj(m, win, m.iterations, rng); },
                        [&](const model::Plcp& m) { return sim_plcp(m, win, rng); },
                        [&](const model::Thomas& m) { return sim_thomas(m, win, rng); },
                        [&](const model::Strauss& m) { return sim_strauss(m, win, m.iterations, rng); },
                    },
                    spec);
}

}  // namespace anisotest
