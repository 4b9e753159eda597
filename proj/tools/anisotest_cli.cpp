#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "anisotest/estimation.hpp"
#include "anisotest/pattern_io.hpp"
#include "anisotest/processes.hpp"
#include "anisotest/replication.hpp"
#include "anisotest/study.hpp"
#include "anisotest/testing.hpp"

using namespace anisotest;

namespace {

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& it : items) {
    const auto eq = it.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--param expects name=value, got '" + it + "'");
    out[it.substr(0, eq)] = parse_number(it.substr(eq + 1));
  }
  return out;
}

ModelSpec build_model(const std::string& name, double a, double theta, const std::map<std::string, double>& params) {
  ModelSpec spec;
  if (name == "lgcp" || name == "gibbs" || name == "plcp") spec = study_model(name, a, theta);
  else if (name == "poisson") spec = model::Poisson{};
  else if (name == "thomas") spec = model::Thomas{};
  else if (name == "strauss") spec = model::Strauss{};
  else throw std::invalid_argument("unknown model '" + name + "'");
  std::map<std::string, double*> fields;
  std::visit(
      [&](auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, model::Poisson>) fields = {{"lambda", &m.lambda}};
        if constexpr (std::is_same_v<T, model::Lgcp>)
          fields = {{"mu", &m.mu}, {"sigma2", &m.sigma2}, {"scale", &m.scale}};
        if constexpr (std::is_same_v<T, model::GibbsLJ>)
          fields = {{"alpha_chem", &m.alpha_chem}, {"rho", &m.rho}, {"sigma", &m.sigma}, {"eps_cone", &m.eps_cone},
                    {"initial_intensity", &m.initial_intensity}};
        if constexpr (std::is_same_v<T, model::Plcp>)
          fields = {{"rho_lines", &m.rho_lines}, {"nu", &m.nu}, {"sigma_perp", &m.sigma_perp}};
        if constexpr (std::is_same_v<T, model::Thomas>)
          fields = {{"kappa_parent", &m.kappa_parent}, {"mu_offspring", &m.mu_offspring},
                    {"sigma_offspring", &m.sigma_offspring}};
        if constexpr (std::is_same_v<T, model::Strauss>)
          fields = {{"beta", &m.beta}, {"gamma", &m.gamma}, {"range", &m.range},
                    {"initial_intensity", &m.initial_intensity}};
      },
      spec);
  for (const auto& [k, v] : params) {
    if (k == "iterations") {
      if (auto* g = std::get_if<model::GibbsLJ>(&spec)) g->iterations = static_cast<int>(v);
      else if (auto* s = std::get_if<model::Strauss>(&spec)) s->iterations = static_cast<int>(v);
      else throw std::invalid_argument("model " + name + " has no parameter 'iterations'");
      continue;
    }
    auto f = fields.find(k);
    if (f == fields.end()) throw std::invalid_argument("model " + name + " has no parameter '" + k + "'");
    *f->second = v;
  }
  validate(spec);
  return spec;
}

ModelSpec fitted_null(const std::string& family, const PointPattern& pat) {
  if (family == "poisson") return model::Poisson{pat.intensity()};
  if (family == "thomas") return fit_thomas_mincontrast(pat).model;
  if (family == "lgcp") return fit_lgcp_mincontrast(pat).model;
  if (family == "strauss") {
    const StraussRangeEstimate rd = estimate_strauss_range(pat);
    return rd.repelling ? fit_strauss_mpl(pat, rd.range).model : ModelSpec{model::Poisson{pat.intensity()}};
  }
  throw std::invalid_argument("unknown null model '" + family + "' (expected poisson, thomas, lgcp or strauss)");
}

struct ReplicationFlags {
  std::string method = "tiling";
  int n_tiles = 9;
  int sr_iterations = 5000;
  std::string null_model = "thomas";
};

ReplicationConfig build_replication(const ReplicationFlags& f, const PointPattern& pat) {
  if (f.method == "tiling") {
    const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(f.n_tiles))));
    if (k * k != f.n_tiles) throw std::invalid_argument("--n-tiles must be a perfect square");
    return TilingConfig{k, false};
  }
  if (f.method == "sr") {
    SrConfig sr;
    sr.iterations = f.sr_iterations;
    return sr;
  }
  if (f.method == "mc") return ParametricConfig{fitted_null(f.null_model, pat)};
  throw std::invalid_argument("unknown method '" + f.method + "' (expected tiling, sr or mc)");
}

void add_replication_flags(CLI::App* app, ReplicationFlags& f) {
  app->add_option("--method", f.method, "Replication method: tiling, sr or mc")->capture_default_str();
  app->add_option("--n-tiles", f.n_tiles, "Number of tiles (a perfect square)")->capture_default_str();
  app->add_option("--sr-iterations", f.sr_iterations, "Stochastic reconstruction iterations")->capture_default_str();
  app->add_option("--null-model", f.null_model, "Fitted null model for mc: poisson, thomas, lgcp, strauss")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonparametric isotropy tests for planar point patterns"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_path;
  std::string window_text = "-0.5,0.5,-0.5,0.5";

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a pattern from a model and write it as CSV");
  std::string model_name_flag = "lgcp";
  double a = 1.0, theta = std::numbers::pi / 6;
  std::vector<std::string> params;
  std::string lines_path;
  sim->add_option("--model", model_name_flag, "poisson, lgcp, gibbs, plcp, thomas or strauss")->capture_default_str();
  sim->add_option("--a", a, "Anisotropy strength in (0, 1]")->capture_default_str();
  sim->add_option("--theta", theta, "Preferred direction (radians)")->capture_default_str();
  sim->add_option("--param", params, "Model parameter override name=value (repeatable)");
  sim->add_option("--window", window_text, "xmin,xmax,ymin,ymax")->capture_default_str();
  sim->add_option("--seed", seed)->capture_default_str();
  sim->add_option("--out", out_path, "Output CSV (stdout if omitted)");
  sim->add_option("--lines", lines_path, "PLCP only: write latent lines as CSV");

  // test
  auto* test = app.add_subcommand("test", "Test a pattern for isotropy and write the result as JSON");
  std::string pattern_path;
  std::string dss_name = "gloc", stat_name;
  DssChoice dss;
  ReplicationFlags rflags;
  int n_rep = 199;
  double alpha_level = 0.05;
  std::string orientation = "standard", recentering = "plugin";
  test->add_option("--pattern", pattern_path, "Pattern CSV with x,y columns")->required();
  test->add_option("--window", window_text, "xmin,xmax,ymin,ymax")->capture_default_str();
  test->add_option("--dss", dss_name, "gloc, kcyl or theta")->capture_default_str();
  test->add_option("--stat", stat_name, "ms, ms-range-std or ms-dir-std (default depends on --dss)");
  add_replication_flags(test, rflags);
  test->add_option("--n-rep", n_rep, "Number of replicates")->capture_default_str();
  test->add_option("--alpha1", dss.alpha1, "First direction (radians)")->capture_default_str();
  test->add_option("--alpha2", dss.alpha2, "Second direction (radians)")->capture_default_str();
  test->add_option("--zeta", dss.zeta, "Cylinder aspect ratio for kcyl")->capture_default_str();
  test->add_option("--eps", dss.eps, "Cone half-angle for gloc")->capture_default_str();
  test->add_option("--r-max", dss.r_max, "Maximum range (default: a quarter of the window side)");
  test->add_option("--kappa", dss.kappa, "Number of ranges or angles")->capture_default_str();
  test->add_option("--alpha-level", alpha_level, "Significance level")->capture_default_str();
  test->add_option("--pvalue-orientation", orientation, "standard or as-printed")->capture_default_str();
  test->add_option("--recentering", recentering, "plugin or loo")->capture_default_str();
  test->add_option("--seed", seed)->capture_default_str();
  test->add_option("--threads", threads, "Worker threads (fallback: ANISOTEST_THREADS)");
  test->add_option("--out", out_path, "Output JSON (stdout if omitted)");

  // replicate
  auto* rep = app.add_subcommand("replicate", "Write isotropic replicates of a pattern as CSV files");
  bool trace_flag = false;
  rep->add_option("--pattern", pattern_path, "Pattern CSV with x,y columns")->required();
  rep->add_option("--window", window_text, "xmin,xmax,ymin,ymax")->capture_default_str();
  add_replication_flags(rep, rflags);
  rep->add_option("--n-rep", n_rep, "Number of replicates")->capture_default_str();
  rep->add_option("--seed", seed)->capture_default_str();
  rep->add_option("--out", out_path, "Output directory")->required();
  rep->add_flag("--trace", trace_flag, "Also write per-replicate SR deviation traces / tiling draws");

  // study
  auto* study = app.add_subcommand("study", "Run a simulation study and write scenario rejection rates");
  std::string config_path, preset_name, format = "csv", details_dir;
  int n_patterns = 0, study_nrep = 0;
  bool seed_given = false;
  study->add_option("--config", config_path, "Study config JSON");
  study->add_option("--preset", preset_name, "desk or paper");
  study->add_option("--seed", seed, "Master seed")->each([&](const std::string&) { seed_given = true; });
  study->add_option("--threads", threads, "Worker threads (fallback: ANISOTEST_THREADS)");
  study->add_option("--n-patterns", n_patterns, "Override the number of patterns per scenario");
  study->add_option("--n-rep", study_nrep, "Override the number of replicates");
  study->add_option("--alpha-level", alpha_level, "Significance level");
  study->add_option("--pvalue-orientation", orientation, "standard or as-printed");
  study->add_option("--recentering", recentering, "plugin or loo");
  study->add_option("--format", format, "csv or json")->capture_default_str();
  study->add_option("--details", details_dir, "Directory for per-test JSON files");
  study->add_option("--out", out_path, "Output file (stdout if omitted)");

  // summarize
  auto* summ = app.add_subcommand("summarize", "Aggregate per-test JSON files into scenario rates");
  std::vector<std::string> inputs;
  summ->add_option("inputs", inputs, "Detail JSON files or directories")->required();
  summ->add_option("--out", out_path, "Output CSV (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      const Window w = parse_window(window_text);
      const ModelSpec spec = build_model(model_name_flag, a, theta, parse_params(params));
      RngStream rng(seed);
      if (!lines_path.empty()) {
        const auto* plcp = std::get_if<model::Plcp>(&spec);
        if (!plcp) throw std::invalid_argument("--lines is only available for plcp");
        const PlcpRealisation r = sim_plcp_with_lines(*plcp, w, rng);
        std::string lines = "angle,offset\n";
        for (const PlcpLine& l : r.lines) lines += format_number(l.angle) + "," + format_number(l.offset) + "\n";
        write_text(lines_path, lines);
        write_text(out_path, format_pattern_csv(r.pattern));
      } else {
        write_text(out_path, format_pattern_csv(simulate(spec, w, rng)));
      }
    } else if (*test) {
      const Window w = parse_window(window_text);
      const PointPattern pat = ingest_pattern_csv(pattern_path, w);
      dss.kind = parse_dss(dss_name);
      TestOptions opts;
      opts.replication = build_replication(rflags, pat);
      opts.n_replicates = n_rep;
      opts.alpha_level = alpha_level;
      opts.orientation = parse_orientation(orientation);
      opts.recentering = parse_recentering(recentering);
      opts.threads = resolve_threads(threads);
      const StatKind stat = stat_name.empty() ? default_stat(dss.kind) : parse_stat(stat_name);
      const TestResult r = run_isotropy_test(pat, {dss, stat}, opts, seed);
      write_text(out_path, test_result_json(r) + "\n");
    } else if (*rep) {
      const Window w = parse_window(window_text);
      const PointPattern pat = ingest_pattern_csv(pattern_path, w);
      const ReplicationConfig cfg = build_replication(rflags, pat);
      std::filesystem::create_directories(out_path);
      const bool trace = trace_flag;
      std::optional<SrTarget> target;
      if (const auto* sr = std::get_if<SrConfig>(&cfg)) target = sr_target(pat, *sr);
      parallel_for(static_cast<std::size_t>(n_rep), resolve_threads(threads), [&](std::size_t i) {
        RngStream rng = replicate_stream(seed, i);
        char name[32];
        std::snprintf(name, sizeof name, "%04zu", i);
        const std::string base = out_path + "/replicate_" + name;
        PointPattern r = pat;
        if (const auto* t = std::get_if<TilingConfig>(&cfg)) {
          std::vector<TileDraw> draws;
          r = tile_replicate(pat, *t, rng, &draws);
          if (trace) {
            std::string s = "target_x,target_y,source_x,source_y,theta\n";
            for (const TileDraw& d : draws)
              s += format_number(d.target.x) + "," + format_number(d.target.y) + "," + format_number(d.source.x) +
                   "," + format_number(d.source.y) + "," + format_number(d.theta) + "\n";
            write_text(base + "_draws.csv", s);
          }
        } else if (const auto* sr = std::get_if<SrConfig>(&cfg)) {
          SrTrace tr;
          r = sr_replicate(pat, *target, *sr, rng, trace ? &tr : nullptr);
          if (trace) write_sr_trace_csv(tr, base + "_trace.csv");
        } else {
          r = generate_replicate(pat, cfg, rng);
        }
        write_pattern_csv(r, base + ".csv");
      });
    } else if (*study) {
      StudyConfig cfg = preset_name.empty() ? StudyConfig{} : preset(preset_name);
      if (!config_path.empty()) cfg = study_config_from_json(read_text(config_path), cfg);
      if (config_path.empty() && preset_name.empty())
        throw std::invalid_argument("study needs --config or --preset");
      if (seed_given) cfg.master_seed = seed;
      if (threads > 0) cfg.threads = threads;
      if (n_patterns > 0) cfg.n_patterns = n_patterns;
      if (study_nrep > 0) cfg.n_replicates = study_nrep;
      if (study->count("--alpha-level")) cfg.alpha_level = alpha_level;
      if (study->count("--pvalue-orientation")) cfg.orientation = parse_orientation(orientation);
      if (study->count("--recentering")) cfg.recentering = parse_recentering(recentering);
      StudyRunOptions ro;
      ro.keep_details = !details_dir.empty();
      ro.progress = [](const std::string& m) { std::cerr << m << "\n"; };
      const StudyOutput res = run_study(cfg, ro);
      for (const auto& n : res.notices) std::cerr << "notice: " << n << "\n";
      if (!details_dir.empty()) write_details(res, details_dir);
      if (out_path.empty() || out_path == "-")
        std::cout << (format == "json" ? results_json(res.results) : results_csv(res.results));
      else
        emit_outputs(res.results, format, out_path);
    } else if (*summ) {
      std::vector<std::string> files;
      for (const auto& in : inputs) {
        if (std::filesystem::is_directory(in)) {
          std::vector<std::string> found;
          for (const auto& e : std::filesystem::directory_iterator(in))
            if (e.path().extension() == ".json") found.push_back(e.path().string());
          std::sort(found.begin(), found.end());
          files.insert(files.end(), found.begin(), found.end());
        } else {
          files.push_back(in);
        }
      }
      write_text(out_path, results_csv(summarize(files)));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
