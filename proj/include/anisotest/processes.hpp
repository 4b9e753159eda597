#pragma once

#include <string>
#include <variant>
#include <vector>

#include "anisotest/geometry.hpp"
#include "anisotest/rng.hpp"

namespace anisotest {

namespace model {

struct Poisson {
  double lambda = 400.0;
};

/// Log-Gaussian Cox process with exponential covariance and geometric anisotropy
/// X = R(theta) C(a) X0, C(a) = diag(1/a, a).
struct Lgcp {
  double mu = 0.0;
  double sigma2 = 3.0;
  double scale = 0.02;
  double a = 1.0;
  double theta = 0.0;
};

/// Gibbs process with anisotropic Lennard-Jones pair potential.
struct GibbsLJ {
  double alpha_chem = 0.6931471805599453;  // -log(0.5)
  double rho = 10.0;
  double sigma = 0.02;
  double eps_cone = 0.7853981633974483;  // pi/4
  double a = 1.0;
  double theta = 0.0;
  int iterations = 50000;
  double initial_intensity = 400.0;
};

/// Poisson line cluster process with von Mises line directions.
struct Plcp {
  double rho_lines = 16.0;
  double nu = 25.0;
  double sigma_perp = 0.015;
  double a = 1.0;
  double theta = 0.0;
};

struct Thomas {
  double kappa_parent = 50.0;
  double mu_offspring = 8.0;
  double sigma_offspring = 0.02;
};

struct Strauss {
  double beta = 400.0;
  double gamma = 1.0;
  double range = 0.02;
  int iterations = 50000;
  double initial_intensity = 400.0;
};

}  // namespace model

using ModelSpec =
    std::variant<model::Poisson, model::Lgcp, model::GibbsLJ, model::Plcp, model::Thomas, model::Strauss>;

/// Short lowercase name: poisson, lgcp, gibbs, plcp, thomas, strauss.
std::string model_name(const ModelSpec& spec);
/// Anisotropy parameter a (1 for models without one).
double model_anisotropy(const ModelSpec& spec);
/// Copy with the anisotropy parameter replaced (no-op for isotropic-only models).
ModelSpec with_anisotropy(const ModelSpec& spec, double a);
/// Throws std::invalid_argument if parameters are out of bounds.
void validate(const ModelSpec& spec);

/// The paper-study default for a generating model name (lgcp, gibbs, plcp).
ModelSpec study_model(const std::string& name, double a, double theta);

/// kappa(a) = 5 (1 - exp(1 - 1/a)).
double plcp_concentration(double a);

PointPattern sim_poisson(double lambda, const Window& win, RngStream& rng);
/// Angle in [0, 2 pi) from the von Mises law (Best-Fisher rejection sampler).
double sample_von_mises(double mu, double kappa, RngStream& rng);
PointPattern sim_lgcp(const model::Lgcp& spec, const Window& win, RngStream& rng);

/// Pair potential for the difference vector delta; +inf inside the overflow guard.
double lj_pair_potential(Point delta, const model::GibbsLJ& spec);
double lj_sigma_in_cone(const model::GibbsLJ& spec);
double lj_sigma_outside(const model::GibbsLJ& spec);

/// Diagnostics from a birth-death-move chain.
struct ChainTrace {
  long births = 0, deaths = 0, moves = 0;
  long accepted_births = 0, accepted_deaths = 0, accepted_moves = 0;
  /// Final energy from incremental updates and from full recomputation.
  double energy_incremental = 0.0;
  double energy_recomputed = 0.0;
  bool all_energies_finite = true;
};

PointPattern sim_gibbs_lj(const model::GibbsLJ& spec, const Window& win, int iterations, RngStream& rng,
                          ChainTrace* trace = nullptr);
/// Variant starting from a supplied state (testing hook).
PointPattern sim_gibbs_lj_from(const model::GibbsLJ& spec, const PointPattern& initial, int iterations,
                               RngStream& rng, ChainTrace* trace = nullptr);
/// Full energy sum_i alpha + sum_{i<j} phi(x_i - x_j).
double gibbs_lj_energy(const model::GibbsLJ& spec, const PointPattern& pat);

struct PlcpLine {
  double angle;   // direction of the line
  double offset;  // signed distance from the window centre
};

struct PlcpRealisation {
  PointPattern pattern;
  std::vector<PlcpLine> lines;
  std::vector<std::size_t> parent;  // line index for each retained point
};

PointPattern sim_plcp(const model::Plcp& spec, const Window& win, RngStream& rng);
PlcpRealisation sim_plcp_with_lines(const model::Plcp& spec, const Window& win, RngStream& rng);

PointPattern sim_thomas(const model::Thomas& spec, const Window& win, RngStream& rng);

PointPattern sim_strauss(const model::Strauss& spec, const Window& win, int iterations, RngStream& rng,
                         ChainTrace* trace = nullptr);
/// Number of unordered pairs closer than r (closed).
std::size_t close_pair_count(const PointPattern& pat, double r);

/// Dispatches to the matching simulator with the spec's default chain length.
PointPattern simulate(const ModelSpec& spec, const Window& win, RngStream& rng);

}  // namespace anisotest
