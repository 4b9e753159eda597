#pragma once

#include <string>
#include <variant>
#include <vector>

#include "anisotest/geometry.hpp"
#include "anisotest/processes.hpp"
#include "anisotest/rng.hpp"

namespace anisotest {

struct TilingConfig {
  /// N_tile = k * k.
  int k = 3;
  /// Debug: no rotation and t_a = t_b for every tile (reproduces the input).
  bool identity = false;
};

struct TileDraw {
  Point target;
  Point source;
  double theta;
};

/// Source-centre candidates: k x k grid spanning W eroded by sqrt(2) l / 2k.
std::vector<Point> tile_source_candidates(const Window& win, int k);
/// Target centres: k x k grid of tile centres.
std::vector<Point> tile_target_centres(const Window& win, int k);

PointPattern tile_replicate(const PointPattern& pat, const TilingConfig& cfg, RngStream& rng,
                            std::vector<TileDraw>* log = nullptr);

struct SrConfig {
  enum class Schedule { improvement_only, geometric };

  int iterations = 5000;
  bool match_count = true;
  bool match_spherical_contact = true;
  Schedule schedule = Schedule::geometric;
  /// Geometric temperatures; non-positive means the default 1e-2 E(z0) and 1e-6 E(z0).
  double t_first = 0.0;
  double t_last = 0.0;
  int probes_per_axis = 64;
  /// Spherical-contact grid: `contact_nodes` ranges up to side / 4.
  int contact_nodes = 64;
  int full_refresh = 500;
};

/// Observed-pattern summaries the reconstruction is matched to.
struct SrTarget {
  Window window;
  std::size_t n = 0;
  int probes_per_axis = 64;
  /// Ranges starting at r = 0.
  std::vector<double> nodes;
  std::vector<double> contact;
  /// Integration stops at nodes[upto]: first node where the observed curve reaches 1.
  std::size_t upto = 0;
};

SrTarget sr_target(const PointPattern& pat, const SrConfig& cfg);
/// Spherical contact curve of `pat` on the target's probe grid and nodes.
std::vector<double> sr_contact_curve(const PointPattern& pat, const SrTarget& target);
/// Trapezoid integral of (a - b)^2 over nodes[0..upto].
double integrated_squared_difference(const std::vector<double>& nodes, const std::vector<double>& a,
                                     const std::vector<double>& b, std::size_t upto);
double sr_total_deviation(const PointPattern& candidate, const SrTarget& target, const SrConfig& cfg);

struct SrTraceRow {
  int iteration;
  double deviation;
  bool accepted;
};

struct SrTrace {
  double initial_deviation = 0.0;
  double final_deviation = 0.0;
  std::vector<SrTraceRow> rows;
};

void write_sr_trace_csv(const SrTrace& trace, const std::string& path);

/// Low-temperature stochastic reconstruction. `initial` replaces the binomial start (debug hook).
PointPattern sr_replicate(const PointPattern& pat, const SrConfig& cfg, RngStream& rng, SrTrace* trace = nullptr,
                          const PointPattern* initial = nullptr);
PointPattern sr_replicate(const PointPattern& pat, const SrTarget& target, const SrConfig& cfg, RngStream& rng,
                          SrTrace* trace = nullptr, const PointPattern* initial = nullptr);

struct ParametricConfig {
  ModelSpec model;
};

/// Simulates from an isotropic null model.
PointPattern parametric_replicate(const ModelSpec& model, const Window& win, RngStream& rng);

using ReplicationConfig = std::variant<TilingConfig, SrConfig, ParametricConfig>;

std::string replication_name(const ReplicationConfig& cfg);

}  // namespace anisotest
