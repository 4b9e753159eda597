#include <doctest.h>

#include <cmath>
#include <numbers>

#include "anisotest/estimation.hpp"
#include "anisotest/optimize.hpp"

using namespace anisotest;
using std::numbers::pi;

namespace {

const Window unit(0, 1, 0, 1);

PointPattern draw(const ModelSpec& spec, std::uint64_t seed, int s) {
  RngStream rng(derive_seed(seed, 0, s, 0));
  return simulate(spec, unit, rng);
}

}  // namespace

TEST_CASE("nelder_mead") {
  auto rosen = [](std::span<const double> x) {
    return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
  };
  NelderMeadOptions opt;
  opt.max_iterations = 5000;
  const auto r = nelder_mead(rosen, {-1.2, 1.0}, {0.5, 0.5}, opt);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-3));
  const auto again = nelder_mead(rosen, {-1.2, 1.0}, {0.5, 0.5}, opt);
  CHECK(again.x == r.x);
  CHECK(r.value <= rosen(std::vector<double>{-1.2, 1.0}));
  // non-finite values are never preferred
  const auto nf = nelder_mead([](std::span<const double> x) { return x[0] < 0 ? NAN : x[0] * x[0]; }, {1.0}, {0.5});
  CHECK(std::isfinite(nf.value));
}

TEST_CASE("model curves") {
  CHECK(thomas_k(0.1, 1e12, 0.02) == doctest::Approx(pi * 0.01));
  CHECK(lgcp_pcf(0.0, 3.0, 0.02) == doctest::Approx(std::exp(3.0)));
  CHECK(lgcp_pcf(1e-9, 3.0, 0.02) == doctest::Approx(std::exp(3.0)));
  CHECK(lgcp_pcf(10.0, 3.0, 0.02) == doctest::Approx(1.0));
}

TEST_CASE("fit_thomas_mincontrast") {
  const model::Thomas truth{50, 8, 0.02};
  int good = 0, fallback = 0;
  for (int s = 0; s < 100; ++s) {
    const auto f = fit_thomas_mincontrast(draw(truth, 101, s));
    if (f.fallback_to_poisson) continue;
    const double sig = std::get<model::Thomas>(f.model).sigma_offspring;
    good += sig > 0.01 && sig < 0.04;
  }
  CHECK(good >= 80);

  for (int s = 0; s < 100; ++s) {
    const PointPattern p = draw(model::Poisson{400}, 102, s);
    const auto f = fit_thomas_mincontrast(p);
    if (f.fallback_to_poisson) {
      ++fallback;
      CHECK(std::get<model::Poisson>(f.model).lambda == doctest::Approx(p.intensity()));
    }
  }
  MESSAGE("Thomas fallback on Poisson input: " << fallback << "/100");
  CHECK(fallback >= 80);

  const PointPattern p = draw(truth, 103, 0);
  const auto a = fit_thomas_mincontrast(p), b = fit_thomas_mincontrast(p);
  CHECK(a.objective == b.objective);
  CHECK_THROWS(fit_thomas_mincontrast(PointPattern({{0.1, 0.1}, {0.2, 0.2}}, unit)));
}

TEST_CASE("fit_lgcp_mincontrast") {
  const model::Lgcp truth{std::log(400.0) - 1.5, 3.0, 0.02, 1.0, 0.0};
  int good = 0;
  for (int s = 0; s < 100; ++s) {
    const PointPattern p = draw(truth, 111, s);
    if (p.size() < 10) continue;
    const auto f = fit_lgcp_mincontrast(p);
    const auto& m = std::get<model::Lgcp>(f.model);
    CHECK(m.sigma2 >= 0.0);
    CHECK(m.scale > 0.0);
    good += m.scale > 0.01 && m.scale < 0.04;
  }
  CHECK(good >= 80);

  for (int s = 0; s < 20; ++s) {
    const PointPattern p = draw(model::Poisson{400}, 112, s);
    const auto f = fit_lgcp_mincontrast(p);
    if (const auto* m = std::get_if<model::Lgcp>(&f.model))
      CHECK(std::exp(m->mu + m->sigma2 / 2) == doctest::Approx(p.intensity()).epsilon(1e-12));
    else
      CHECK(std::get<model::Poisson>(f.model).lambda == doctest::Approx(p.intensity()));
  }
}

TEST_CASE("estimate_strauss_range") {
  int in_band = 0;
  for (int s = 0; s < 100; ++s) {
    RngStream rng(derive_seed(121, 0, s, 0));
    const PointPattern p = sim_strauss({400, 0.0, 0.05}, unit, 20000, rng);
    const auto e = estimate_strauss_range(p);
    in_band += e.repelling && e.range >= 0.04 && e.range <= 0.07;
  }
  CHECK(in_band >= 80);

  int none = 0;
  double worst = 0;
  for (int s = 0; s < 100; ++s) {
    const auto e = estimate_strauss_range(draw(model::Poisson{400}, 122, s));
    none += !e.repelling;
    if (e.repelling) worst = std::max(worst, e.maximum);
  }
  MESSAGE("Poisson input, no repelling detected: " << none << "/100, largest maximum " << worst);
  // The maximand is positive at the smallest ranges for nearly every Poisson
  // pattern (no pairs closer than l/400), so only the "small maximum" part holds.
  CHECK(worst < 0.02);

  // Clustered input: K above the Poisson curve over most ranges. Sampling noise
  // still pushes the maximand above zero at some range in a minority of draws.
  int clustered_none = 0;
  for (int s = 0; s < 20; ++s) {
    const auto e = estimate_strauss_range(draw(model::Thomas{50, 8, 0.02}, 123, s));
    clustered_none += !e.repelling;
  }
  MESSAGE("Thomas input, no repelling detected: " << clustered_none << "/20");
  CHECK(clustered_none >= 14);
}

TEST_CASE("fit_strauss_mpl") {
  int good = 0;
  for (int s = 0; s < 100; ++s) {
    RngStream rng(derive_seed(131, 0, s, 0));
    const PointPattern p = sim_strauss({600, 0.3, 0.03}, unit, 50000, rng);
    const auto f = fit_strauss_mpl(p, 0.03);
    if (f.fallback_to_poisson) continue;
    const auto& m = std::get<model::Strauss>(f.model);
    CHECK(m.gamma >= 0.0);
    CHECK(m.gamma <= 1.0);
    good += m.gamma >= 0.1 && m.gamma <= 0.6;
  }
  CHECK(good >= 70);

  const PointPattern p = draw(model::Poisson{400}, 132, 0);
  CHECK(strauss_profile_beta(p, 0.03, 1.0) == doctest::Approx(p.intensity()).epsilon(1e-12));

  for (int s = 0; s < 20; ++s) {
    const PointPattern c = draw(model::Thomas{50, 8, 0.02}, 133, s);
    const auto f = fit_strauss_mpl(c, 0.03);
    CHECK(f.fallback_to_poisson);
    CHECK(std::get<model::Poisson>(f.model).lambda == doctest::Approx(c.intensity()));
  }
}
