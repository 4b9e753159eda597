#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "anisotest/replication.hpp"
#include "anisotest/summaries.hpp"

using namespace anisotest;
using std::numbers::pi;

namespace {

const Window centred = Window::centred_square(1.0);
const Window small = Window::centred_square(0.5);

std::vector<Point> sorted(std::vector<Point> v) {
  std::sort(v.begin(), v.end(), [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  return v;
}

PointPattern lgcp_small(std::uint64_t seed, int s) {
  RngStream rng(derive_seed(seed, 0, s, 0));
  return sim_lgcp({std::log(400.0) - 1.5, 3.0, 0.02, 1.0, 0.0}, small, rng);
}

}  // namespace

TEST_CASE("tiling geometry") {
  const auto t = tile_target_centres(centred, 2);
  REQUIRE(t.size() == 4);
  for (const Point& c : t) {
    CHECK(std::fabs(c.x) == doctest::Approx(0.25));
    CHECK(std::fabs(c.y) == doctest::Approx(0.25));
  }
  const auto src = tile_source_candidates(centred, 2);
  REQUIRE(src.size() == 4);
  for (const Point& c : src) {
    CHECK(std::fabs(c.x) <= 0.1464466 + 1e-7);
    CHECK(std::fabs(c.y) <= 0.1464466 + 1e-7);
  }
  CHECK(std::fabs(src.front().x) == doctest::Approx(0.5 - std::sqrt(2.0) / 4));

  RngStream rng(1);
  const PointPattern p({{0.1, 0.1}}, Window(0, 1, 0, 2));
  CHECK_THROWS(tile_replicate(p, {3}, rng));
  CHECK_THROWS(tile_replicate(PointPattern({{0.1, 0.1}}, centred), {1}, rng));
}

TEST_CASE("tile_replicate") {
  RngStream rng(2);
  CHECK(tile_replicate(PointPattern({}, centred), {3}, rng).empty());

  RngStream a(7), b(7);
  const PointPattern obs = lgcp_small(3, 0);
  CHECK(tile_replicate(obs, {4}, a).points() == tile_replicate(obs, {4}, b).points());

  const PointPattern one({{0, 0}}, centred);
  for (int s = 0; s < 200; ++s) {
    RngStream r(derive_seed(4, 0, s, 0));
    std::vector<TileDraw> log;
    const auto rep = tile_replicate(one, {2}, r, &log);
    CHECK(rep.size() <= 4);
    for (const Point& y : rep.points()) {
      bool in_some = false;
      for (const TileDraw& d : log)
        in_some |= std::fabs(y.x - d.target.x) <= 0.25 + 1e-12 && std::fabs(y.y - d.target.y) <= 0.25 + 1e-12;
      CHECK(in_some);
    }
  }
}

TEST_CASE("tiling replays from the logged draws") {
  for (int s = 0; s < 20; ++s) {
    const PointPattern obs = lgcp_small(5, s);
    RngStream r(derive_seed(6, 0, s, 0));
    std::vector<TileDraw> log;
    const int k = 2 + s % 5;
    const auto rep = tile_replicate(obs, {k}, r, &log);
    REQUIRE(log.size() == static_cast<std::size_t>(k * k));
    const double half = small.width() / (2 * k), rho = std::sqrt(2.0) * half;
    std::vector<Point> expect;
    for (const TileDraw& d : log)
      for (const Point& x : obs.points()) {
        if (distance(x, d.source) > rho) continue;
        const Point y = rotate(x - d.source, d.theta) + d.target;
        if (std::fabs(y.x - d.target.x) <= half && std::fabs(y.y - d.target.y) <= half) expect.push_back(y);
      }
    for (const Point& y : rep.points()) CHECK(small.contains(y));
    const auto got = sorted(rep.points());
    expect = sorted(expect);
    REQUIRE(got.size() == expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(std::fabs(got[i].x - expect[i].x) <= 1e-12);
      CHECK(std::fabs(got[i].y - expect[i].y) <= 1e-12);
    }
  }
}

TEST_CASE("tiling identity mode reproduces the input") {
  for (int s = 0; s < 10; ++s) {
    const PointPattern obs = lgcp_small(8, s);
    RngStream r(1);
    TilingConfig cfg{3, true};
    CHECK(sorted(tile_replicate(obs, cfg, r).points()) == sorted(obs.points()));
  }
  // points on shared tile edges are not duplicated
  const PointPattern edge({{0, 0}, {0.25, 0.1}, {-0.5, 0.5}}, centred);
  RngStream r(1);
  CHECK(sorted(tile_replicate(edge, {2, true}, r).points()) == sorted(edge.points()));
}

TEST_CASE("sr deviation") {
  const PointPattern obs = lgcp_small(9, 0);
  SrConfig cfg;
  const SrTarget t = sr_target(obs, cfg);
  CHECK(sr_total_deviation(obs, t, cfg) == 0.0);
  CHECK(t.nodes.front() == 0.0);
  CHECK(t.upto < t.nodes.size());
  CHECK(t.contact[t.upto] == 1.0);
  for (std::size_t k = 0; k < t.upto; ++k) CHECK(t.contact[k] < 1.0);

  // the shared curve is the border-corrected estimator on the same probe grid
  const auto ref = spherical_contact_hat(obs, cfg.probes_per_axis, RangeGrid(small.width() / 4, cfg.contact_nodes));
  for (std::size_t k = 0; k < ref.values.size(); ++k) CHECK(t.contact[k + 1] == ref.values[k]);

  SrConfig count_only = cfg;
  count_only.match_spherical_contact = false;
  std::vector<Point> pts = obs.points();
  pts.pop_back();
  pts.pop_back();
  CHECK(sr_total_deviation(PointPattern(pts, small), sr_target(obs, count_only), count_only) == 4.0);

  std::vector<double> nodes, a, b;
  for (int i = 0; i <= 100; ++i) {
    nodes.push_back(0.002 * i);
    a.push_back(std::sin(i * 0.1));
    b.push_back(std::sin(i * 0.1) + 0.3);
  }
  CHECK(integrated_squared_difference(nodes, a, b, 80) == doctest::Approx(0.09 * nodes[80]).epsilon(1e-6));
}

TEST_CASE("sr_replicate") {
  SrConfig improve;
  improve.schedule = SrConfig::Schedule::improvement_only;
  improve.iterations = 2000;
  for (int s = 0; s < 10; ++s) {
    const PointPattern obs = lgcp_small(10, s);
    if (obs.size() < 5) continue;
    const SrTarget t = sr_target(obs, improve);
    RngStream rng(derive_seed(11, 0, s, 0));
    SrTrace tr;
    const auto rep = sr_replicate(obs, t, improve, rng, &tr);
    CHECK(rep.size() == obs.size());
    REQUIRE(tr.rows.size() == 2000);
    double prev = tr.initial_deviation;
    bool monotone = true;
    for (const auto& row : tr.rows) {
      monotone &= row.deviation <= prev;
      prev = row.deviation;
    }
    CHECK(monotone);
    CHECK(tr.final_deviation == sr_total_deviation(rep, t, improve));
    CHECK(tr.final_deviation <= tr.initial_deviation);
  }

  const PointPattern obs = lgcp_small(12, 0);
  RngStream rng(1);
  SrTrace tr;
  const auto same = sr_replicate(obs, improve, rng, &tr, &obs);
  CHECK(same.points() == obs.points());
  CHECK(tr.final_deviation == 0.0);
  for (const auto& row : tr.rows) CHECK_FALSE(row.accepted);

  SrConfig anneal;
  anneal.iterations = 1000;
  RngStream a(3), b(3);
  CHECK(sr_replicate(obs, anneal, a).points() == sr_replicate(obs, anneal, b).points());

  SrConfig bad = anneal;
  bad.match_count = bad.match_spherical_contact = false;
  CHECK_THROWS(sr_replicate(obs, bad, a));
}

TEST_CASE("parametric_replicate") {
  RngStream a(4), b(4), c(4);
  const auto p = parametric_replicate(model::Poisson{400}, centred, a);
  CHECK(p.points() == sim_poisson(400, centred, b).points());
  CHECK_THROWS_WITH(parametric_replicate(model::Lgcp{0, 3, 0.02, 0.6, 0}, centred, c), "null model must be isotropic");
  RngStream d(5), e(5);
  CHECK(parametric_replicate(model::Thomas{}, centred, d).points() ==
        parametric_replicate(model::Thomas{}, centred, e).points());
}
