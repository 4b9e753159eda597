#pragma once

#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "anisotest/geometry.hpp"
#include "anisotest/replication.hpp"
#include "anisotest/summaries.hpp"

namespace anisotest {

enum class DssKind { gloc, kcyl, theta };
enum class StatKind { ms, ms_range_std, ms_dir_std };
enum class PValueOrientation { standard, as_printed };
enum class Recentering { plugin, loo };

/// Directional summary and its discretisation.
struct DssChoice {
  DssKind kind = DssKind::gloc;
  double eps = std::numbers::pi / 8;
  double zeta = 0.15;
  double alpha1 = 0.0;
  double alpha2 = std::numbers::pi / 2;
  /// Maximum range; non-positive means a quarter of the shorter window side.
  double r_max = 0.0;
  /// Number of ranges or angles.
  int kappa = 36;
  /// Theta-spectrum angular bandwidth (radians) and frequency bound.
  double bandwidth = 7.5 * std::numbers::pi / 180.0;
  int p_max = 15;
};

struct FunctionalVector {
  std::vector<double> values;
  DssKind kind = DssKind::gloc;
};

/// S_{alpha1}(r_i) - S_{alpha2}(r_i) for G_loc or K_cyl.
FunctionalVector functional_range(const PointPattern& pat, const DssChoice& dss);
/// Theta-spectrum at the grid angles.
FunctionalVector functional_direction(const PointPattern& pat, const DssChoice& dss);
FunctionalVector compute_functional(const PointPattern& pat, const DssChoice& dss);

struct StatResult {
  double t0 = 0.0;
  std::vector<double> trep;
  std::vector<double> m_hat;
  std::vector<double> var_hat;
  std::vector<std::size_t> dropped;
};

/// Mean squared deviation from the replicate mean.
StatResult stat_ms(const FunctionalVector& v0, const std::vector<FunctionalVector>& reps,
                   Recentering recentering = Recentering::plugin);
/// Variance-standardised mean squared deviation; zero-variance coordinates are dropped.
StatResult stat_ms_std(const FunctionalVector& v0, const std::vector<FunctionalVector>& reps,
                       Recentering recentering = Recentering::plugin);
StatResult compute_statistic(StatKind kind, const FunctionalVector& v0, const std::vector<FunctionalVector>& reps,
                             Recentering recentering = Recentering::plugin);

/// (1 + #{Trep >= T0}) / (1 + N); the as-printed orientation counts T0 >= Trep instead.
double mc_p_value(double t0, const std::vector<double>& trep,
                  PValueOrientation orientation = PValueOrientation::standard);

struct TestSpec {
  DssChoice dss;
  StatKind stat = StatKind::ms;
};

struct TestOptions {
  ReplicationConfig replication = TilingConfig{};
  int n_replicates = 199;
  double alpha_level = 0.05;
  PValueOrientation orientation = PValueOrientation::standard;
  Recentering recentering = Recentering::plugin;
  int threads = 1;
  /// Label written to results; defaults to the replication method name.
  std::string replication_label;
};

struct TestResult {
  std::string dss;
  std::string statistic;
  std::string replication;
  int n_replicates = 0;
  double t0 = 0.0;
  std::vector<double> trep;
  double p_value = 1.0;
  bool reject = false;
  double alpha_level = 0.05;
  std::vector<double> m_hat;
  std::vector<double> var_hat;
  std::vector<std::size_t> dropped;
  std::uint64_t seed = 0;
};

TestResult run_isotropy_test(const PointPattern& pat, const TestSpec& spec, const TestOptions& opts,
                             std::uint64_t seed);
/// Several statistics evaluated on one shared set of replicates.
std::vector<TestResult> run_isotropy_tests(const PointPattern& pat, const std::vector<TestSpec>& specs,
                                           const TestOptions& opts, std::uint64_t seed);

/// Replicate i of a test uses this stream.
RngStream replicate_stream(std::uint64_t seed, std::size_t i);
PointPattern generate_replicate(const PointPattern& pat, const ReplicationConfig& cfg, RngStream& rng);

/// Calls f(i) for i in [0, n) on up to `threads` workers. The exception of the
/// lowest failing index is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f);
/// --threads, else ANISOTEST_THREADS, else 1.
int resolve_threads(int requested);

std::string to_string(DssKind k);
std::string to_string(StatKind k);
std::string to_string(PValueOrientation o);
std::string to_string(Recentering r);
DssKind parse_dss(const std::string& s);
StatKind parse_stat(const std::string& s);
PValueOrientation parse_orientation(const std::string& s);
Recentering parse_recentering(const std::string& s);
/// Study default pairing: gloc -> ms, kcyl -> ms-range-std, theta -> ms-dir-std.
StatKind default_stat(DssKind k);

/// JSON document for one test; `scenario` (a JSON object text) is embedded when non-empty.
std::string test_result_json(const TestResult& r, const std::string& scenario = "");
TestResult test_result_from_json(const std::string& text);

}  // namespace anisotest
