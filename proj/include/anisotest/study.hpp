#pragma once

#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "anisotest/estimation.hpp"
#include "anisotest/testing.hpp"

namespace anisotest {

/// One replication entry of a study: tiling (swept over n_tiles), sr, mc-oracle,
/// mc-fitted or mc-misspecified.
struct ReplicationVariant {
  std::string method;
  std::vector<int> n_tiles;
  /// Tiling only: restrict to windows of this side length.
  std::optional<double> window_side;
  /// SR only: 0 picks 5000 for sides <= 0.5 and 20000 otherwise.
  int sr_iterations = 0;
};

struct StudyConfig {
  std::vector<std::string> models{"lgcp", "gibbs", "plcp"};
  std::vector<double> a_levels{0.4, 0.6, 0.8, 1.0};
  double theta = std::numbers::pi / 6;
  std::vector<Window> windows{Window::centred_square(0.5), Window::centred_square(1.0)};
  int n_patterns = 1000;
  std::vector<std::string> dss_list{"gloc", "kcyl", "theta"};
  /// Empty: each dss gets its default statistic. Otherwise every dss x statistic pair.
  std::vector<std::string> stat_kinds;
  std::vector<ReplicationVariant> replications;
  int n_replicates = 1000;
  int sr_replicates = 99;
  double alpha_level = 0.05;
  std::uint64_t master_seed = 1;
  int threads = 0;
  double eps = std::numbers::pi / 8;
  double zeta = 0.15;
  int kappa = 36;
  double r_max = 0.0;
  double bandwidth_deg = 7.5;
  int p_max = 15;
  PValueOrientation orientation = PValueOrientation::standard;
  Recentering recentering = Recentering::plugin;
  int chain_iterations = 50000;
};

StudyConfig desk_preset();
StudyConfig paper_preset();
StudyConfig preset(const std::string& name);
/// Fields absent from the JSON keep the values of `base`.
StudyConfig study_config_from_json(const std::string& text, const StudyConfig& base);
StudyConfig study_config_from_json(const std::string& text);
void validate(const StudyConfig& cfg);

struct ScenarioKey {
  int scenario_id = 0;
  std::string model;
  double a = 1.0;
  double window_side = 0.0;
  std::string dss;
  std::string statistic;
  std::string replication;
  int n_tiles = 0;  // 0 when not tiling
};

struct ScenarioResult {
  ScenarioKey key;
  int n_patterns = 0;  // successful tests
  int n_failures = 0;
  int rejections = 0;
  double rejection_rate = 0.0;
  double mean_p = 0.0;
  std::optional<double> size_exceedance;
};

struct StudyDetail {
  int scenario_id;
  int pattern;
  std::optional<TestResult> result;
  std::string error;
};

struct StudyOutput {
  std::vector<ScenarioResult> results;
  std::vector<std::string> notices;
  std::vector<StudyDetail> details;
};

struct StudyRunOptions {
  bool keep_details = false;
  std::function<void(const std::string&)> progress;
};

StudyOutput run_study(const StudyConfig& cfg, const StudyRunOptions& opts = {});

std::string results_csv(const std::vector<ScenarioResult>& results);
std::string results_json(const std::vector<ScenarioResult>& results);
std::vector<ScenarioResult> parse_results_csv(const std::string& text);
/// Writes CSV or JSON by format name ("csv" or "json").
void emit_outputs(const std::vector<ScenarioResult>& results, const std::string& format, const std::string& path);
/// Writes one JSON file per test into `dir`.
void write_details(const StudyOutput& out, const std::string& dir);
std::string scenario_json(const ScenarioKey& key, int pattern);

/// Aggregates per-test detail JSON files into scenario rows.
std::vector<ScenarioResult> summarize(const std::vector<std::string>& detail_paths, double alpha_level_default = 0.05);

/// Fits the null model used by a parametric variant; label receives the output label.
ModelSpec null_model_for(const std::string& method, const ModelSpec& truth, const PointPattern& pat,
                         int chain_iterations, std::string* label = nullptr);

/// Tiling tests for the desert-shrub workflow: K_cyl, zeta 0.15, alpha1 = pi/2,
/// alpha2 = 0, r_max a quarter of the side, 100 ranges, N_tile = 16..64.
std::vector<TestResult> ambrosia_tiling_tests(const PointPattern& pat, int n_replicates, std::uint64_t seed,
                                              int threads);

}  // namespace anisotest
