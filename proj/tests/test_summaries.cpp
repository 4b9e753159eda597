#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "anisotest/processes.hpp"
#include "anisotest/summaries.hpp"
#include "naive.hpp"

using namespace anisotest;
using std::numbers::pi;

namespace {

bool close(double a, double b, double tol = 1e-12) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::fabs(a - b) <= tol * std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
}

bool all_close(const std::vector<double>& a, const std::vector<double>& b, double tol = 1e-12) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!close(a[i], b[i], tol)) return false;
  return true;
}

PointPattern small_random(RngStream& rng, const Window& w, int n) {
  std::vector<Point> pts;
  for (int i = 0; i < n; ++i) pts.push_back({rng.uniform(w.xmin(), w.xmax()), rng.uniform(w.ymin(), w.ymax())});
  return PointPattern(pts, w);
}

PointPattern permuted(const PointPattern& p, RngStream& rng) {
  std::vector<Point> pts = p.points();
  std::shuffle(pts.begin(), pts.end(), rng.engine());
  return PointPattern(pts, p.window());
}

const Window unit(0, 1, 0, 1);
const Window centred = Window::centred_square(1.0);

}  // namespace

TEST_CASE("grids") {
  RangeGrid g(0.25, 5);
  auto n = g.nodes();
  REQUIRE(n.size() == 5);
  CHECK(n.front() == doctest::Approx(0.05));
  CHECK(n.back() == 0.25);
  for (std::size_t i = 1; i < n.size(); ++i) CHECK(n[i] > n[i - 1]);
  auto a = AngleGrid(36).nodes();
  CHECK(a.back() == doctest::Approx(pi));
  CHECK(a.front() > 0.0);
  CHECK_THROWS(RangeGrid(0.0, 3));
  CHECK_THROWS(AngleGrid(0));
}

TEST_CASE("nearest_in_cone") {
  const PointPattern a({{0.5, 0.5}, {0.6, 0.5}}, unit);
  CHECK(nearest_in_cone(a, 0, DoubleCone(0, pi / 8)) == doctest::Approx(0.1));
  const PointPattern b({{0.5, 0.5}, {0.5, 0.6}}, unit);
  CHECK(std::isinf(nearest_in_cone(b, 0, DoubleCone(0, pi / 8))));
  CHECK_THROWS(nearest_in_cone(PointPattern({{0.5, 0.5}}, unit), 0, DoubleCone(0, pi / 8)));

  RngStream rng(2);
  for (int t = 0; t < 50; ++t) {
    const PointPattern p = small_random(rng, unit, 5);
    const double alpha = rng.uniform(0, pi), eps = rng.uniform(0.05, pi / 2);
    const auto all = nearest_in_cone_all(p, DoubleCone(alpha, eps));
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(close(nearest_in_cone(p, i, DoubleCone(alpha, eps)), naive::nn_in_cone(p, i, alpha, eps)));
      CHECK(all[i] == nearest_in_cone(p, i, DoubleCone(alpha, eps)));
    }
  }
}

TEST_CASE("g_loc_hat examples") {
  const PointPattern p({{0.5, 0.5}, {0.6, 0.5}}, unit);
  const RangeGrid g(0.2, 4);  // 0.05, 0.1, 0.15, 0.2
  const auto c = g_loc_hat(p, 0, pi / 8, g);
  CHECK(c.values[3] == doctest::Approx(1.0));
  CHECK(c.values[0] == 0.0);
  // 0.6 - 0.5 rounds below 0.1, so check strictness on an exactly representable gap
  const PointPattern e({{0.5, 0.5}, {0.625, 0.5}}, unit);
  const auto ce = g_loc_hat(e, 0, pi / 8, RangeGrid(0.25, 2));
  CHECK(ce.values[0] == 0.0);
  CHECK(ce.values[1] == 1.0);
  const PointPattern q({{0.5, 0.5}, {0.5, 0.6}}, unit);
  CHECK_THROWS(g_loc_hat(q, 0, pi / 8, g));
}

TEST_CASE("k_cyl_hat examples") {
  const PointPattern p({{0, 0}, {0.1, 0}}, centred);
  CHECK(k_cyl_hat(p, 0, 0.15, RangeGrid(0.1, 1)).values[0] == doctest::Approx(5.0 / 9.0));
  CHECK(k_cyl_hat(p, 0, 0.15, RangeGrid(0.09, 1)).values[0] == 0.0);
}

TEST_CASE("dft and periodogram examples") {
  const PointPattern one({{0.3, 0.7}}, unit);
  CHECK(std::abs(dft(one, {3.1, -7.2})) == doctest::Approx(1.0));
  const PointPattern two({{0, 0}, {0.5, 0}}, unit);
  CHECK(std::abs(dft(two, {2 * pi, 0})) < 1e-15);
  CHECK(std::abs(dft(two, {0, 0})) == doctest::Approx(2.0));

  const Window w(0, 2, 0, 1);
  const PointPattern single({{1.2, 0.4}}, w);
  const Periodogram pg(single, FrequencyGrid(5));
  for (int p1 = -5; p1 <= 5; ++p1)
    for (int p2 = -5; p2 <= 5; ++p2)
      if (p1 || p2) CHECK(pg.at(p1, p2) == doctest::Approx(0.5));
  CHECK(Periodogram(two, FrequencyGrid(2)).at(1, 0) < 1e-30);
  const auto th = theta_spectrum(single, FrequencyGrid(5), 7.5 * pi / 180, AngleGrid(12));
  for (double v : th.values) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("theta_spectrum wraps modulo pi") {
  CHECK(frequency_angle(0, 3) == pi / 2);
  CHECK(frequency_angle(2, 0) == 0.0);
  CHECK(frequency_angle(-2, 0) == 0.0);
  // angle 0.01 is 0.02 away from pi - 0.01 once wrapped
  CHECK(axial_distance(0.01, pi - 0.01) == doctest::Approx(0.02));
  const PointPattern p({{0.1, 0.2}, {0.7, 0.4}, {0.3, 0.9}}, unit);
  const FrequencyGrid fg(15);
  // angle pi has the same neighbourhood as angle 0
  const auto a = theta_spectrum(p, fg, 0.1, AngleGrid(1));
  const Periodogram pg(p, fg);
  double acc = 0;
  int cnt = 0;
  for (int p1 = -15; p1 <= 15; ++p1)
    for (int p2 = -15; p2 <= 15; ++p2)
      if ((p1 || p2) && naive::wrapped(frequency_angle(p1, p2), 0.0) < 0.1) acc += pg.at(p1, p2), ++cnt;
  CHECK(close(a.values[0], acc / cnt));
  CHECK_THROWS(theta_spectrum(p, FrequencyGrid(1), 0.01, AngleGrid(36)));
}

TEST_CASE("ripley and pcf examples") {
  const PointPattern p({{0, 0}, {0.1, 0}}, centred);
  CHECK(ripley_k_hat(p, RangeGrid(0.2, 1)).values[0] == doctest::Approx(5.0 / 9.0));
  CHECK(ripley_k_hat(p, RangeGrid(0.05, 1)).values[0] == 0.0);
  const auto g = pcf_hat(p, RangeGrid(0.4, 4));
  CHECK(g.values[3] == 0.0);
  CHECK(g.flagged);
}

TEST_CASE("spherical contact examples") {
  const PointPattern centre({{0.5, 0.5}}, unit);
  const auto c = spherical_contact_hat(centre, 20, RangeGrid(0.45, 9));
  CHECK(c.values.back() == doctest::Approx(1.0));
  // past the inradius no probe survives the border erosion
  const auto t = spherical_contact_hat(centre, 20, RangeGrid(0.8, 8));
  CHECK(t.flagged);
  CHECK(t.values.size() < 8);
  const PointPattern corner({{0, 0}}, unit);
  CHECK(spherical_contact_hat(corner, 20, RangeGrid(0.05, 1)).values[0] == 0.0);
  CHECK_THROWS(spherical_contact_hat(corner, 5, RangeGrid(0.05, 1)));
}

TEST_CASE("brute-force equivalence on small patterns") {
  RngStream rng(20240101);
  const Window windows[] = {unit, centred, Window(-0.3, 0.5, 0.1, 0.6)};
  for (int t = 0; t < 100; ++t) {
    const Window& w = windows[t % 3];
    const int n = 2 + static_cast<int>(rng.index(5));
    const PointPattern p = small_random(rng, w, n);
    const double alpha = rng.uniform(0, pi), eps = rng.uniform(0.2, pi / 2), zeta = rng.uniform(0.05, 1.0);
    const RangeGrid g(0.5 * w.min_side(), 25);
    const auto r = g.nodes();
    CAPTURE(t);

    bool usable = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = naive::nn_in_cone(p, i, alpha, eps);
      if (std::isfinite(d) && eroded_rect_contains(w, DoubleCone(alpha, eps), d, p[i])) usable = true;
    }
    if (usable)
      CHECK(all_close(g_loc_hat(p, alpha, eps, g).values, naive::g_loc(p, alpha, eps, r)));
    else
      CHECK_THROWS(g_loc_hat(p, alpha, eps, g));

    CHECK(all_close(k_cyl_hat(p, alpha, zeta, g).values, naive::k_cyl(p, alpha, zeta, r)));
    CHECK(all_close(ripley_k_hat(p, g).values, naive::ripley_k(p, r)));
    CHECK(all_close(pcf_hat(p, g).values, naive::pcf(p, r)));

    const Periodogram pg(p, FrequencyGrid(4));
    for (int p1 = -4; p1 <= 4; ++p1)
      for (int p2 = -4; p2 <= 4; ++p2) CHECK(close(pg.at(p1, p2), naive::periodogram(p, p1, p2)));
    const auto th = theta_spectrum(p, FrequencyGrid(6), 0.25, AngleGrid(10));
    CHECK(all_close(th.values, naive::theta(p, 6, 0.25, 10)));

    const RangeGrid cg(0.3 * w.min_side(), 6);
    const auto sc = spherical_contact_hat(p, 16, cg);
    const auto expect = naive::contact(p, 16, cg.nodes());
    for (std::size_t k = 0; k < sc.values.size(); ++k) CHECK(close(sc.values[k], expect[k]));
  }
}

TEST_CASE("estimator invariants") {
  RngStream rng(99);
  const Window w(-0.5, 0.5, -0.5, 0.5);
  for (int t = 0; t < 10; ++t) {
    const PointPattern p = sim_poisson(150, w, rng);
    const PointPattern q = permuted(p, rng);
    const double alpha = naive::representable_angle(rng.uniform(0, pi));
    const RangeGrid g(0.25, 20);

    const auto gl = g_loc_hat(p, alpha, pi / 8, g);
    CHECK(gl.values == g_loc_hat(q, alpha, pi / 8, g).values);
    CHECK(gl.values == g_loc_hat(p, alpha + pi, pi / 8, g).values);
    for (std::size_t k = 0; k < gl.values.size(); ++k) {
      CHECK(gl.values[k] >= 0.0);
      CHECK(gl.values[k] <= 1.0);
      if (k) CHECK(gl.values[k] >= gl.values[k - 1]);
    }

    const auto kc = k_cyl_hat(p, alpha, 0.15, g);
    CHECK(kc.values == k_cyl_hat(q, alpha, 0.15, g).values);
    CHECK(kc.values == k_cyl_hat(p, alpha + pi, 0.15, g).values);
    for (std::size_t k = 1; k < kc.values.size(); ++k) CHECK(kc.values[k] >= kc.values[k - 1]);

    CHECK(ripley_k_hat(p, g).values == ripley_k_hat(q, g).values);
    CHECK(pcf_hat(p, g).values == pcf_hat(q, g).values);
    CHECK(spherical_contact_hat(p, 32, g).values == spherical_contact_hat(q, 32, g).values);

    const Periodogram pa(p, FrequencyGrid(15)), pb(q, FrequencyGrid(15));
    for (int p1 = -15; p1 <= 15; ++p1)
      for (int p2 = -15; p2 <= 15; ++p2) {
        CHECK(pa.at(p1, p2) >= 0.0);
        CHECK(pa.at(p1, p2) == pa.at(-p1, -p2));
        CHECK(pa.at(p1, p2) == pb.at(p1, p2));
      }
    const auto ta = theta_spectrum(pa, 7.5 * pi / 180, AngleGrid(36));
    const auto tb = theta_spectrum(pb, 7.5 * pi / 180, AngleGrid(36));
    CHECK(ta.values == tb.values);
  }
}
