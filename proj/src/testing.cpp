#include "anisotest/testing.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "anisotest/processes.hpp"
#include "json.hpp"

namespace anisotest {

namespace {

constexpr double kVarianceFloor = 1e-12;

RangeGrid range_grid(const PointPattern& pat, const DssChoice& dss) {
  const double r_max = dss.r_max > 0.0 ? dss.r_max : pat.window().min_side() / 4.0;
  return RangeGrid(r_max, dss.kappa);
}

void check_finite(const FunctionalVector& v) {
  for (double x : v.values)
    if (!std::isfinite(x)) throw std::runtime_error("test functional has a non-finite entry");
}

void check_ensemble(const FunctionalVector& v0, const std::vector<FunctionalVector>& reps, std::size_t min_n,
                    const char* who) {
  if (reps.size() < min_n)
    throw std::invalid_argument(std::string(who) + ": at least " + std::to_string(min_n) + " replicates required");
  if (v0.values.empty()) throw std::invalid_argument(std::string(who) + ": empty functional");
  for (const auto& r : reps)
    if (r.values.size() != v0.values.size())
      throw std::invalid_argument(std::string(who) + ": replicate length differs from the observed functional");
}

struct Moments {
  std::vector<double> mean, var;
};

// Mean and unbiased variance over reps, optionally with one replicate swapped for `extra`.
Moments moments(const std::vector<FunctionalVector>& reps, const FunctionalVector* extra, std::size_t skip) {
  const std::size_t dim = reps.front().values.size();
  Moments m{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  std::size_t count = 0;
  auto each = [&](auto&& f) {
    if (extra) f(*extra);
    for (std::size_t i = 0; i < reps.size(); ++i)
      if (i != skip) f(reps[i]);
  };
  each([&](const FunctionalVector& v) {
    ++count;
    for (std::size_t k = 0; k < dim; ++k) m.mean[k] += v.values[k];
  });
  for (double& x : m.mean) x /= static_cast<double>(count);
  each([&](const FunctionalVector& v) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double d = v.values[k] - m.mean[k];
      m.var[k] += d * d;
    }
  });
  for (double& x : m.var) x /= static_cast<double>(count - 1);
  return m;
}

double quadratic(const std::vector<double>& v, const std::vector<double>& mean, const std::vector<double>* var,
                 const std::vector<char>& keep) {
  double t = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!keep[k]) continue;
    const double d = v[k] - mean[k];
    t += var ? d * d / (*var)[k] : d * d;
  }
  return t;
}

StatResult statistic(const FunctionalVector& v0, const std::vector<FunctionalVector>& reps, Recentering rc,
                     bool standardise) {
  const std::size_t none = reps.size();
  const Moments plug = moments(reps, nullptr, none);
  StatResult out;
  out.m_hat = plug.mean;
  out.var_hat = plug.var;
  std::vector<char> keep(v0.values.size(), 1);
  if (standardise) {
    for (std::size_t k = 0; k < keep.size(); ++k)
      if (!(plug.var[k] >= kVarianceFloor)) {
        keep[k] = 0;
        out.dropped.push_back(k);
      }
    if (out.dropped.size() == keep.size()) throw std::runtime_error("degenerate replicate ensemble");
  }
  out.t0 = quadratic(v0.values, plug.mean, standardise ? &plug.var : nullptr, keep);
  out.trep.reserve(reps.size());
  for (std::size_t i = 0; i < reps.size(); ++i) {
    if (rc == Recentering::plugin) {
      out.trep.push_back(quadratic(reps[i].values, plug.mean, standardise ? &plug.var : nullptr, keep));
    } else {
      const Moments loo = moments(reps, &v0, i);
      std::vector<char> k2 = keep;
      if (standardise)
        for (std::size_t k = 0; k < k2.size(); ++k)
          if (!(loo.var[k] >= kVarianceFloor)) k2[k] = 0;
      out.trep.push_back(quadratic(reps[i].values, loo.mean, standardise ? &loo.var : nullptr, k2));
    }
  }
  return out;
}

}  // namespace

FunctionalVector functional_range(const PointPattern& pat, const DssChoice& dss) {
  if (pat.size() < 2) throw std::invalid_argument("range functional needs at least 2 points");
  const RangeGrid grid = range_grid(pat, dss);
  SummaryCurve a, b;
  if (dss.kind == DssKind::gloc) {
    a = g_loc_hat(pat, dss.alpha1, dss.eps, grid);
    b = g_loc_hat(pat, dss.alpha2, dss.eps, grid);
  } else if (dss.kind == DssKind::kcyl) {
    a = k_cyl_hat(pat, dss.alpha1, dss.zeta, grid);
    b = k_cyl_hat(pat, dss.alpha2, dss.zeta, grid);
  } else {
    throw std::invalid_argument("functional_range: theta is a direction functional");
  }
  FunctionalVector v{std::vector<double>(a.values.size()), dss.kind};
  for (std::size_t i = 0; i < v.values.size(); ++i) v.values[i] = a.values[i] - b.values[i];
  check_finite(v);
  return v;
}

FunctionalVector functional_direction(const PointPattern& pat, const DssChoice& dss) {
  if (pat.empty()) throw std::invalid_argument("direction functional needs at least 1 point");
  const SummaryCurve s = theta_spectrum(pat, FrequencyGrid(dss.p_max), dss.bandwidth, AngleGrid(dss.kappa));
  FunctionalVector v{s.values, DssKind::theta};
  check_finite(v);
  return v;
}

FunctionalVector compute_functional(const PointPattern& pat, const DssChoice& dss) {
  return dss.kind == DssKind::theta ? functional_direction(pat, dss) : functional_range(pat, dss);
}

StatResult stat_ms(const FunctionalVector& v0, const std::vector<FunctionalVector>& reps, Recentering recentering) {
  check_ensemble(v0, reps, 2, "stat_ms");
  return statistic(v0, reps, recentering, false);
}

StatResult stat_ms_std(const FunctionalVector& v0, const std::vector<FunctionalVector>& reps,
                       Recentering recentering) {
  check_ensemble(v0, reps, 3, "stat_ms_std");
  return statistic(v0, reps, recentering, true);
}

StatResult compute_statistic(StatKind kind, const FunctionalVector& v0, const std::vector<FunctionalVector>& reps,
                             Recentering recentering) {
  return kind == StatKind::ms ? stat_ms(v0, reps, recentering) : stat_ms_std(v0, reps, recentering);
}

double mc_p_value(double t0, const std::vector<double>& trep, PValueOrientation orientation) {
  if (trep.empty()) throw std::invalid_argument("mc_p_value: at least one replicate required");
  std::size_t count = 0;
  for (double t : trep) count += orientation == PValueOrientation::standard ? (t >= t0) : (t0 >= t);
  return static_cast<double>(1 + count) / static_cast<double>(1 + trep.size());
}

RngStream replicate_stream(std::uint64_t seed, std::size_t i) { return RngStream(derive_seed(seed, 0, 0, i + 1)); }

PointPattern generate_replicate(const PointPattern& pat, const ReplicationConfig& cfg, RngStream& rng) {
  if (const auto* t = std::get_if<TilingConfig>(&cfg)) return tile_replicate(pat, *t, rng);
  if (const auto* s = std::get_if<SrConfig>(&cfg)) return sr_replicate(pat, *s, rng);
  return parametric_replicate(std::get<ParametricConfig>(cfg).model, pat.window(), rng);
}

std::vector<TestResult> run_isotropy_tests(const PointPattern& pat, const std::vector<TestSpec>& specs,
                                           const TestOptions& opts, std::uint64_t seed) {
  if (specs.empty()) throw std::invalid_argument("no test statistics requested");
  if (opts.n_replicates < 1) throw std::invalid_argument("number of replicates must be >= 1");
  if (!(opts.alpha_level > 0.0 && opts.alpha_level < 1.0))
    throw std::invalid_argument("alpha level must lie in (0, 1)");
  const std::size_t n_rep = static_cast<std::size_t>(opts.n_replicates);

  std::vector<FunctionalVector> v0(specs.size());
  for (std::size_t s = 0; s < specs.size(); ++s) v0[s] = compute_functional(pat, specs[s].dss);

  const SrTarget* target = nullptr;
  std::optional<SrTarget> sr_tgt;
  if (const auto* sr = std::get_if<SrConfig>(&opts.replication)) {
    sr_tgt = sr_target(pat, *sr);
    target = &*sr_tgt;
  }

  std::vector<std::vector<FunctionalVector>> reps(specs.size(), std::vector<FunctionalVector>(n_rep));
  parallel_for(n_rep, opts.threads, [&](std::size_t i) {
    try {
      RngStream rng = replicate_stream(seed, i);
      const PointPattern rep = target ? sr_replicate(pat, *target, std::get<SrConfig>(opts.replication), rng)
                                      : generate_replicate(pat, opts.replication, rng);
      for (std::size_t s = 0; s < specs.size(); ++s) reps[s][i] = compute_functional(rep, specs[s].dss);
    } catch (const std::exception& e) {
      throw std::runtime_error("replicate " + std::to_string(i) + ": " + e.what());
    }
  });

  std::vector<TestResult> out;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const StatResult st = compute_statistic(specs[s].stat, v0[s], reps[s], opts.recentering);
    TestResult r;
    r.dss = to_string(specs[s].dss.kind);
    r.statistic = to_string(specs[s].stat);
    r.replication = opts.replication_label.empty() ? replication_name(opts.replication) : opts.replication_label;
    r.n_replicates = opts.n_replicates;
    r.t0 = st.t0;
    r.trep = st.trep;
    r.p_value = mc_p_value(st.t0, st.trep, opts.orientation);
    r.reject = r.p_value <= opts.alpha_level;
    r.alpha_level = opts.alpha_level;
    r.m_hat = st.m_hat;
    r.var_hat = st.var_hat;
    r.dropped = st.dropped;
    r.seed = seed;
    out.push_back(std::move(r));
  }
  return out;
}

TestResult run_isotropy_test(const PointPattern& pat, const TestSpec& spec, const TestOptions& opts,
                             std::uint64_t seed) {
  return run_isotropy_tests(pat, {spec}, opts, seed).front();
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard lock(mutex);
        if (i > failed_at) return;
      }
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (i < failed_at) failed_at = i, failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ANISOTEST_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

std::string to_string(DssKind k) {
  switch (k) {
    case DssKind::gloc: return "gloc";
    case DssKind::kcyl: return "kcyl";
    case DssKind::theta: return "theta";
  }
  return "?";
}

std::string to_string(StatKind k) {
  switch (k) {
    case StatKind::ms: return "ms";
    case StatKind::ms_range_std: return "ms-range-std";
    case StatKind::ms_dir_std: return "ms-dir-std";
  }
  return "?";
}

std::string to_string(PValueOrientation o) { return o == PValueOrientation::standard ? "standard" : "as-printed"; }
std::string to_string(Recentering r) { return r == Recentering::plugin ? "plugin" : "loo"; }

DssKind parse_dss(const std::string& s) {
  if (s == "gloc") return DssKind::gloc;
  if (s == "kcyl") return DssKind::kcyl;
  if (s == "theta") return DssKind::theta;
  throw std::invalid_argument("unknown dss '" + s + "' (expected gloc, kcyl or theta)");
}

StatKind parse_stat(const std::string& s) {
  if (s == "ms") return StatKind::ms;
  if (s == "ms-range-std") return StatKind::ms_range_std;
  if (s == "ms-dir-std") return StatKind::ms_dir_std;
  throw std::invalid_argument("unknown statistic '" + s + "' (expected ms, ms-range-std or ms-dir-std)");
}

PValueOrientation parse_orientation(const std::string& s) {
  if (s == "standard") return PValueOrientation::standard;
  if (s == "as-printed") return PValueOrientation::as_printed;
  throw std::invalid_argument("unknown p-value orientation '" + s + "' (expected standard or as-printed)");
}

Recentering parse_recentering(const std::string& s) {
  if (s == "plugin") return Recentering::plugin;
  if (s == "loo") return Recentering::loo;
  throw std::invalid_argument("unknown recentering '" + s + "' (expected plugin or loo)");
}

StatKind default_stat(DssKind k) {
  switch (k) {
    case DssKind::gloc: return StatKind::ms;
    case DssKind::kcyl: return StatKind::ms_range_std;
    case DssKind::theta: return StatKind::ms_dir_std;
  }
  return StatKind::ms;
}

std::string test_result_json(const TestResult& r, const std::string& scenario) {
  nlohmann::ordered_json j;
  j["dss"] = r.dss;
  j["statistic"] = r.statistic;
  j["replication"] = r.replication;
  j["n_replicates"] = r.n_replicates;
  j["T0"] = r.t0;
  j["p_value"] = r.p_value;
  j["reject"] = r.reject;
  j["alpha_level"] = r.alpha_level;
  j["dropped_coordinates"] = r.dropped;
  j["seed"] = r.seed;
  if (!scenario.empty()) j["scenario"] = nlohmann::ordered_json::parse(scenario);
  return j.dump(2);
}

TestResult test_result_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  TestResult r;
  r.dss = j.at("dss").get<std::string>();
  r.statistic = j.at("statistic").get<std::string>();
  r.replication = j.at("replication").get<std::string>();
  r.n_replicates = j.at("n_replicates").get<int>();
  r.t0 = j.at("T0").get<double>();
  r.p_value = j.at("p_value").get<double>();
  r.reject = j.at("reject").get<bool>();
  r.alpha_level = j.at("alpha_level").get<double>();
  r.dropped = j.at("dropped_coordinates").get<std::vector<std::size_t>>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

}  // namespace anisotest
