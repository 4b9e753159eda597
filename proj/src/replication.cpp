#include "anisotest/replication.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "anisotest/spatial_index.hpp"
#include "anisotest/summaries.hpp"

namespace anisotest {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_square(const Window& w, const char* who) {
  if (!w.is_square()) throw std::invalid_argument(std::string(who) + ": window must be square");
}

std::vector<double> grid_line(double lo, double hi, int k) {
  std::vector<double> out(k);
  for (int i = 0; i < k; ++i) out[i] = k == 1 ? 0.5 * (lo + hi) : lo + i * (hi - lo) / (k - 1);
  out.back() = k == 1 ? out.back() : hi;
  return out;
}

}  // namespace

std::vector<Point> tile_target_centres(const Window& win, int k) {
  const double half = win.width() / (2.0 * k);
  std::vector<Point> out;
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) out.push_back({win.xmin() + (2 * i + 1) * half, win.ymin() + (2 * j + 1) * half});
  return out;
}

std::vector<Point> tile_source_candidates(const Window& win, int k) {
  require_square(win, "tile_replicate");
  if (k < 2) throw std::invalid_argument("tile_replicate: k must be >= 2 (no valid source region otherwise)");
  const double rho = std::numbers::sqrt2 * win.width() / (2.0 * k);
  const auto xs = grid_line(win.xmin() + rho, win.xmax() - rho, k);
  const auto ys = grid_line(win.ymin() + rho, win.ymax() - rho, k);
  std::vector<Point> out;
  for (double y : ys)
    for (double x : xs) out.push_back({x, y});
  return out;
}

PointPattern tile_replicate(const PointPattern& pat, const TilingConfig& cfg, RngStream& rng,
                            std::vector<TileDraw>* log) {
  const Window& w = pat.window();
  const int k = cfg.k;
  const std::vector<Point> candidates = tile_source_candidates(w, k);
  const std::vector<Point> targets = tile_target_centres(w, k);
  const double half = w.width() / (2.0 * k);
  const double rho = std::numbers::sqrt2 * half;
  if (log) log->clear();

  std::vector<Point> out;
  for (const Point& tb : targets) {
    const Window tile(tb.x - half, tb.x + half, tb.y - half, tb.y + half);
    if (cfg.identity) {
      for (const Point& x : pat.points())
        if (tile.contains(x)) out.push_back(x);
      if (log) log->push_back({tb, tb, 0.0});
      continue;
    }
    const Point ta = candidates[rng.index(candidates.size())];
    const double theta = rng.uniform(0.0, 2.0 * kPi);
    if (log) log->push_back({tb, ta, theta});
    const double c = std::cos(theta), s = std::sin(theta);
    for (const Point& x : pat.points()) {
      const Point d = x - ta;
      if (d.x * d.x + d.y * d.y > rho * rho) continue;
      const Point y{c * d.x - s * d.y + tb.x, s * d.x + c * d.y + tb.y};
      if (tile.contains(y)) out.push_back(clamp_to(w, y));
    }
  }
  return PointPattern::from_samples(std::move(out), w);
}

namespace {

// Probe-grid spherical contact bookkeeping with incremental single-point moves.
class ContactState {
 public:
  ContactState(const SrTarget& t, const std::vector<Point>& pts)
      : t_(t),
        index_(t.window, CellIndex::suggested_cell_size(t.window, pts.size()), pts),
        covered_(t.nodes.size(), 0),
        surviving_(t.nodes.size(), 0) {
    const Window& w = t.window;
    const int m = t.probes_per_axis;
    const double dx = w.width() / m, dy = w.height() / m;
    step_x_ = dx, step_y_ = dy;
    for (int iy = 0; iy < m; ++iy)
      for (int ix = 0; ix < m; ++ix) {
        const Point u{w.xmin() + (ix + 0.5) * dx, w.ymin() + (iy + 0.5) * dy};
        const double b = w.border_distance(u);
        int level = -1;
        while (level + 1 < static_cast<int>(t.nodes.size()) && b >= t.nodes[level + 1]) ++level;
        probes_.push_back(u);
        level_.push_back(level);
        for (int k = 0; k <= level; ++k) ++surviving_[k];
      }
    dist_.assign(probes_.size(), kInf);
    nn_.assign(probes_.size(), 0);
    bucket_.assign(probes_.size(), 0);
    stamp_.assign(probes_.size(), 0);
    refresh();
  }

  void refresh() {
    std::fill(covered_.begin(), covered_.end(), 0);
    dmax_ = 0.0;
    for (std::size_t p = 0; p < probes_.size(); ++p) {
      const auto [id, d] = index_.nearest(probes_[p], [](std::size_t) { return true; });
      dist_[p] = d;
      nn_[p] = id;
      bucket_[p] = bucket_of(d);
      dmax_ = std::max(dmax_, d);
      shift(covered_, p, bucket_[p], +1);
    }
  }

  std::vector<double> curve(const std::vector<long>& covered) const {
    std::vector<double> v(covered.size(), 0.0);
    for (std::size_t k = 0; k < v.size(); ++k)
      if (surviving_[k] > 0) v[k] = static_cast<double>(covered[k]) / static_cast<double>(surviving_[k]);
    return v;
  }
  std::vector<double> curve() const { return curve(covered_); }

  /// Tentatively moves point i; returns the contact curve after the move.
  std::vector<double> propose(std::size_t i, Point to) {
    from_ = index_[i];
    moving_ = i;
    to_ = to;
    index_.move(i, to);
    changes_.clear();
    ++epoch_;
    const double reach = std::isfinite(dmax_) ? dmax_ : std::max(t_.window.width(), t_.window.height()) * 2.0;
    for_probes_near(from_, reach, [&](std::size_t p) {
      if (nn_[p] != i || stamp_[p] == epoch_) return;
      stamp_[p] = epoch_;
      const auto [id, d] = index_.nearest(probes_[p], [](std::size_t) { return true; });
      changes_.push_back({p, id, d});
    });
    for_probes_near(to, reach, [&](std::size_t p) {
      const double ddx = to.x - probes_[p].x, ddy = to.y - probes_[p].y;
      const double d = std::sqrt(ddx * ddx + ddy * ddy);
      if (stamp_[p] == epoch_) {
        // Already recomputed against the moved point.
        return;
      }
      if (d < dist_[p]) {
        stamp_[p] = epoch_;
        changes_.push_back({p, i, d});
      }
    });
    std::vector<long> cov = covered_;
    for (const Change& c : changes_) {
      shift(cov, c.probe, bucket_[c.probe], -1);
      shift(cov, c.probe, bucket_of(c.dist), +1);
    }
    pending_ = cov;
    return curve(cov);
  }

  void accept() {
    for (const Change& c : changes_) {
      dist_[c.probe] = c.dist;
      nn_[c.probe] = c.id;
      bucket_[c.probe] = bucket_of(c.dist);
      dmax_ = std::max(dmax_, c.dist);
    }
    covered_ = pending_;
  }

  void reject() { index_.move(moving_, from_); }

  const std::vector<Point>& points() const { return index_.points(); }

 private:
  struct Change {
    std::size_t probe, id;
    double dist;
  };

  std::size_t bucket_of(double d) const {
    return static_cast<std::size_t>(std::lower_bound(t_.nodes.begin(), t_.nodes.end(), d) - t_.nodes.begin());
  }

  void shift(std::vector<long>& cov, std::size_t p, std::size_t bucket, long by) const {
    for (int k = static_cast<int>(bucket); k <= level_[p]; ++k) cov[k] += by;
  }

  template <class F>
  void for_probes_near(Point c, double r, F&& f) const {
    const Window& w = t_.window;
    const int m = t_.probes_per_axis;
    auto lo = [&](double v, double o, double s) { return std::max(0, static_cast<int>(std::floor((v - o) / s - 0.5))); };
    auto hi = [&](double v, double o, double s) {
      return std::min(m - 1, static_cast<int>(std::ceil((v - o) / s - 0.5)));
    };
    const int x0 = lo(c.x - r, w.xmin(), step_x_), x1 = hi(c.x + r, w.xmin(), step_x_);
    const int y0 = lo(c.y - r, w.ymin(), step_y_), y1 = hi(c.y + r, w.ymin(), step_y_);
    for (int iy = y0; iy <= y1; ++iy)
      for (int ix = x0; ix <= x1; ++ix) f(static_cast<std::size_t>(iy) * m + ix);
  }

  const SrTarget& t_;
  CellIndex index_;
  std::vector<Point> probes_;
  std::vector<int> level_;
  std::vector<double> dist_;
  std::vector<std::size_t> nn_, bucket_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t epoch_ = 0;
  std::vector<long> covered_, surviving_, pending_;
  std::vector<Change> changes_;
  double step_x_ = 0.0, step_y_ = 0.0, dmax_ = 0.0;
  std::size_t moving_ = 0;
  Point from_, to_;
};

double deviation(const SrTarget& t, const SrConfig& cfg, std::size_t n, const std::vector<double>& curve) {
  double e = 0.0;
  if (cfg.match_count) {
    const double dn = static_cast<double>(n) - static_cast<double>(t.n);
    e += dn * dn;
  }
  if (cfg.match_spherical_contact) e += integrated_squared_difference(t.nodes, t.contact, curve, t.upto);
  return e;
}

void validate(const SrConfig& cfg) {
  if (cfg.iterations < 1) throw std::invalid_argument("stochastic reconstruction: iterations must be >= 1");
  if (!cfg.match_count && !cfg.match_spherical_contact)
    throw std::invalid_argument("stochastic reconstruction: at least one summary must be matched");
  if (cfg.probes_per_axis < 10) throw std::invalid_argument("stochastic reconstruction: at least 10 probes per axis");
  if (cfg.contact_nodes < 1) throw std::invalid_argument("stochastic reconstruction: contact grid needs nodes");
  if (cfg.schedule == SrConfig::Schedule::geometric && cfg.t_first > 0.0 && cfg.t_last > 0.0 &&
      cfg.t_first < cfg.t_last)
    throw std::invalid_argument("stochastic reconstruction: geometric schedule needs T1 >= TM > 0");
}

}  // namespace

double integrated_squared_difference(const std::vector<double>& nodes, const std::vector<double>& a,
                                     const std::vector<double>& b, std::size_t upto) {
  if (a.size() != nodes.size() || b.size() != nodes.size() || upto >= nodes.size())
    throw std::invalid_argument("integrated_squared_difference: length mismatch");
  double total = 0.0;
  for (std::size_t k = 1; k <= upto; ++k) {
    const double d0 = a[k - 1] - b[k - 1], d1 = a[k] - b[k];
    total += 0.5 * (nodes[k] - nodes[k - 1]) * (d0 * d0 + d1 * d1);
  }
  return total;
}

SrTarget sr_target(const PointPattern& pat, const SrConfig& cfg) {
  validate(cfg);
  if (pat.empty()) throw std::invalid_argument("stochastic reconstruction: observed pattern is empty");
  SrTarget t{pat.window(), pat.size(), cfg.probes_per_axis, {}, {}, 0};
  const RangeGrid grid(pat.window().min_side() / 4.0, cfg.contact_nodes);
  t.nodes.push_back(0.0);
  for (double r : grid.nodes()) t.nodes.push_back(r);
  t.contact = sr_contact_curve(pat, t);
  t.upto = t.nodes.size() - 1;
  for (std::size_t k = 0; k < t.contact.size(); ++k)
    if (t.contact[k] >= 1.0) {
      t.upto = k;
      break;
    }
  return t;
}

std::vector<double> sr_contact_curve(const PointPattern& pat, const SrTarget& target) {
  return ContactState(target, pat.points()).curve();
}

double sr_total_deviation(const PointPattern& candidate, const SrTarget& target, const SrConfig& cfg) {
  std::vector<double> curve;
  if (cfg.match_spherical_contact) curve = sr_contact_curve(candidate, target);
  return deviation(target, cfg, candidate.size(), curve);
}

PointPattern sr_replicate(const PointPattern& pat, const SrConfig& cfg, RngStream& rng, SrTrace* trace,
                          const PointPattern* initial) {
  return sr_replicate(pat, sr_target(pat, cfg), cfg, rng, trace, initial);
}

PointPattern sr_replicate(const PointPattern& pat, const SrTarget& target, const SrConfig& cfg, RngStream& rng,
                          SrTrace* trace, const PointPattern* initial) {
  validate(cfg);
  const Window& w = pat.window();
  if (pat.empty()) throw std::invalid_argument("stochastic reconstruction: observed pattern is empty");
  std::vector<Point> start;
  if (initial) {
    if (!(initial->window() == w)) throw std::invalid_argument("stochastic reconstruction: initial state window differs");
    start = initial->points();
  } else {
    for (std::size_t i = 0; i < pat.size(); ++i) start.push_back({rng.uniform(w.xmin(), w.xmax()), rng.uniform(w.ymin(), w.ymax())});
  }
  if (start.empty()) throw std::invalid_argument("stochastic reconstruction: initial state is empty");

  ContactState state(target, start);
  const std::size_t n = start.size();
  auto energy_of = [&](const std::vector<double>& curve) { return deviation(target, cfg, n, curve); };
  double energy = energy_of(cfg.match_spherical_contact ? state.curve() : std::vector<double>{});
  const double e0 = energy;

  const bool annealing = cfg.schedule == SrConfig::Schedule::geometric;
  const double t1 = cfg.t_first > 0.0 ? cfg.t_first : 1e-2 * e0;
  const double tm = cfg.t_last > 0.0 ? cfg.t_last : 1e-6 * e0;
  const int iters = cfg.iterations;

  if (trace) {
    trace->rows.clear();
    trace->rows.reserve(iters);
    trace->initial_deviation = e0;
  }
  for (int m = 1; m <= iters; ++m) {
    const std::size_t i = rng.index(n);
    const Point to{rng.uniform(w.xmin(), w.xmax()), rng.uniform(w.ymin(), w.ymax())};
    const double u = rng.uniform();
    const std::vector<double> curve = state.propose(i, to);
    const double cand = energy_of(cfg.match_spherical_contact ? curve : std::vector<double>{});
    const double delta = cand - energy;
    bool accept = delta < 0.0;
    if (!accept && delta > 0.0 && annealing && t1 > 0.0 && tm > 0.0) {
      const double temp = iters == 1 ? t1 : t1 * std::pow(tm / t1, static_cast<double>(m - 1) / (iters - 1));
      accept = u < std::exp(-delta / temp);
    }
    if (accept) {
      state.accept();
      energy = cand;
    } else {
      state.reject();
    }
    if (cfg.full_refresh > 0 && m % cfg.full_refresh == 0) {
      state.refresh();
      energy = energy_of(cfg.match_spherical_contact ? state.curve() : std::vector<double>{});
    }
    if (trace) trace->rows.push_back({m, energy, accept});
  }
  if (trace) trace->final_deviation = energy;
  return PointPattern::from_samples(state.points(), w);
}

void write_sr_trace_csv(const SrTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file '" + path + "'");
  out << "iteration,deviation,accepted\n";
  char buf[64];
  for (const SrTraceRow& r : trace.rows) {
    const auto res = std::to_chars(buf, buf + sizeof buf, r.deviation);
    out << r.iteration << ',' << std::string_view(buf, res.ptr - buf) << ',' << (r.accepted ? 1 : 0) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing trace file '" + path + "'");
}

PointPattern parametric_replicate(const ModelSpec& model, const Window& win, RngStream& rng) {
  if (model_anisotropy(model) != 1.0) throw std::invalid_argument("null model must be isotropic");
  return simulate(model, win, rng);
}

std::string replication_name(const ReplicationConfig& cfg) {
  if (std::holds_alternative<TilingConfig>(cfg)) return "tiling";
  if (std::holds_alternative<SrConfig>(cfg)) return "sr";
  return "mc";
}

}  // namespace anisotest
