#include "anisotest/study.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "anisotest/pattern_io.hpp"
#include "json.hpp"

namespace anisotest {

namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

bool same_side(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

std::string window_key(const Window& w) {
  return format_number(w.xmin()) + "," + format_number(w.xmax()) + "," + format_number(w.ymin()) + "," +
         format_number(w.ymax());
}

struct PatternGroup {
  std::string model;
  double a;
  Window window;
  ModelSpec truth;
  std::uint64_t seed_word;
};

struct ReplicationGroup {
  std::size_t pattern_group;
  std::string method;
  std::string label;
  int k = 0;  // tiling
  int sr_iterations = 0;
  int n_replicates = 0;
  std::uint64_t seed_word;
  std::vector<std::size_t> rows;  // indices into the scenario list
};

int tiles_to_k(int n_tiles) {
  const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_tiles))));
  if (k * k != n_tiles || k < 2)
    throw std::invalid_argument("n_tiles must be a perfect square >= 4, got " + std::to_string(n_tiles));
  return k;
}

std::vector<TestSpec> row_specs(const StudyConfig& cfg, const Window& w) {
  std::vector<TestSpec> specs;
  for (const std::string& d : cfg.dss_list) {
    DssChoice dss;
    dss.kind = parse_dss(d);
    dss.eps = cfg.eps;
    dss.zeta = cfg.zeta;
    dss.alpha1 = cfg.theta;
    dss.alpha2 = cfg.theta + std::numbers::pi / 2;
    dss.r_max = cfg.r_max > 0.0 ? cfg.r_max : w.min_side() / 4.0;
    dss.kappa = cfg.kappa;
    dss.bandwidth = cfg.bandwidth_deg * std::numbers::pi / 180.0;
    dss.p_max = cfg.p_max;
    if (cfg.stat_kinds.empty()) {
      specs.push_back({dss, default_stat(dss.kind)});
    } else {
      for (const std::string& s : cfg.stat_kinds) specs.push_back({dss, parse_stat(s)});
    }
  }
  return specs;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void finish(ScenarioResult& r, double alpha) {
  r.rejection_rate = r.n_patterns > 0 ? static_cast<double>(r.rejections) / r.n_patterns : 0.0;
  if (r.n_patterns > 0) r.mean_p /= r.n_patterns;
  if (r.key.a == 1.0) r.size_exceedance = std::max(0.0, r.rejection_rate - alpha);
}

}  // namespace

StudyConfig desk_preset() {
  StudyConfig c;
  c.models = {"lgcp"};
  c.a_levels = {1.0, 0.4};
  c.windows = {Window::centred_square(0.5)};
  c.n_patterns = 200;
  c.dss_list = {"gloc", "kcyl"};
  c.replications = {{"tiling", {9}, std::nullopt, 0}, {"mc-misspecified", {}, std::nullopt, 0}};
  c.n_replicates = 199;
  c.sr_replicates = 99;
  return c;
}

StudyConfig paper_preset() {
  StudyConfig c;
  c.replications = {{"tiling", {4, 9, 16, 25}, 0.5, 0},
                    {"tiling", {16, 25, 36, 64}, 1.0, 0},
                    {"sr", {}, std::nullopt, 0},
                    {"mc-oracle", {}, std::nullopt, 0},
                    {"mc-fitted", {}, std::nullopt, 0},
                    {"mc-misspecified", {}, std::nullopt, 0}};
  return c;
}

StudyConfig preset(const std::string& name) {
  if (name == "desk") return desk_preset();
  if (name == "paper") return paper_preset();
  throw std::invalid_argument("unknown preset '" + name + "' (expected desk or paper)");
}

void validate(const StudyConfig& cfg) {
  if (cfg.n_patterns < 1) throw std::invalid_argument("n_patterns must be >= 1");
  if (cfg.models.empty() || cfg.a_levels.empty() || cfg.windows.empty() || cfg.dss_list.empty() ||
      cfg.replications.empty())
    throw std::invalid_argument("models, a_levels, windows, dss_list and replications must be non-empty");
  for (double a : cfg.a_levels)
    if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("a_levels must lie in (0, 1]");
  for (const auto& m : cfg.models) study_model(m, 1.0, 0.0);
  for (const auto& d : cfg.dss_list) parse_dss(d);
  for (const auto& s : cfg.stat_kinds) parse_stat(s);
  if (cfg.n_replicates < 1 || cfg.sr_replicates < 1) throw std::invalid_argument("replicate counts must be >= 1");
  if (!(cfg.alpha_level > 0.0 && cfg.alpha_level < 1.0)) throw std::invalid_argument("alpha_level must lie in (0, 1)");
  if (cfg.kappa < 1) throw std::invalid_argument("kappa must be >= 1");
  for (const auto& r : cfg.replications) {
    static const std::set<std::string> methods{"tiling", "sr", "mc-oracle", "mc-fitted", "mc-misspecified"};
    if (!methods.count(r.method))
      throw std::invalid_argument("unknown replication method '" + r.method +
                                  "' (expected tiling, sr, mc-oracle, mc-fitted or mc-misspecified)");
    if (r.method == "tiling") {
      if (r.n_tiles.empty()) throw std::invalid_argument("tiling replication needs n_tiles");
      for (int t : r.n_tiles) tiles_to_k(t);
    }
  }
  for (const Window& w : cfg.windows)
    if (!w.is_square()) throw std::invalid_argument("study windows must be square");
}

StudyConfig study_config_from_json(const std::string& text, const StudyConfig& base) {
  const json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("study config must be a JSON object");
  StudyConfig c = base;
  if (j.contains("preset")) c = preset(j.at("preset").get<std::string>());
  for (const auto& [key, v] : j.items()) {
    if (key == "preset") continue;
    else if (key == "models") c.models = v.get<std::vector<std::string>>();
    else if (key == "a_levels") c.a_levels = v.get<std::vector<double>>();
    else if (key == "theta") c.theta = v.get<double>();
    else if (key == "windows") {
      c.windows.clear();
      for (const auto& w : v) {
        if (w.is_number()) c.windows.push_back(Window::centred_square(w.get<double>()));
        else {
          const auto e = w.get<std::vector<double>>();
          if (e.size() != 4) throw std::invalid_argument("window entries are a side length or [xmin,xmax,ymin,ymax]");
          c.windows.emplace_back(e[0], e[1], e[2], e[3]);
        }
      }
    } else if (key == "n_patterns") c.n_patterns = v.get<int>();
    else if (key == "dss_list") c.dss_list = v.get<std::vector<std::string>>();
    else if (key == "stat_kinds") c.stat_kinds = v.get<std::vector<std::string>>();
    else if (key == "replications") {
      c.replications.clear();
      for (const auto& r : v) {
        ReplicationVariant rv;
        rv.method = r.at("method").get<std::string>();
        if (r.contains("n_tiles")) rv.n_tiles = r.at("n_tiles").get<std::vector<int>>();
        if (r.contains("window_side")) rv.window_side = r.at("window_side").get<double>();
        if (r.contains("sr_iterations")) rv.sr_iterations = r.at("sr_iterations").get<int>();
        c.replications.push_back(rv);
      }
    } else if (key == "n_replicates") c.n_replicates = v.get<int>();
    else if (key == "sr_replicates") c.sr_replicates = v.get<int>();
    else if (key == "alpha_level") c.alpha_level = v.get<double>();
    else if (key == "master_seed") c.master_seed = v.get<std::uint64_t>();
    else if (key == "threads") c.threads = v.get<int>();
    else if (key == "eps") c.eps = v.get<double>();
    else if (key == "zeta") c.zeta = v.get<double>();
    else if (key == "kappa") c.kappa = v.get<int>();
    else if (key == "r_max") c.r_max = v.get<double>();
    else if (key == "bandwidth_deg") c.bandwidth_deg = v.get<double>();
    else if (key == "p_max") c.p_max = v.get<int>();
    else if (key == "pvalue_orientation") c.orientation = parse_orientation(v.get<std::string>());
    else if (key == "recentering") c.recentering = parse_recentering(v.get<std::string>());
    else if (key == "chain_iterations") c.chain_iterations = v.get<int>();
    else throw std::invalid_argument("unknown study config field '" + key + "'");
  }
  validate(c);
  return c;
}

StudyConfig study_config_from_json(const std::string& text) { return study_config_from_json(text, StudyConfig{}); }

ModelSpec null_model_for(const std::string& method, const ModelSpec& truth, const PointPattern& pat,
                         int chain_iterations, std::string* label) {
  const std::string name = model_name(truth);
  std::string lab = method;
  ModelSpec out;
  if (method == "mc-oracle") {
    out = with_anisotropy(truth, 1.0);
  } else if (method == "mc-fitted") {
    if (name == "lgcp") {
      out = fit_lgcp_mincontrast(pat).model;
    } else if (name == "plcp") {
      out = with_anisotropy(truth, 1.0);
      lab = "plcp-oracle-params";
    } else {
      throw std::invalid_argument("no correct-model fit available for " + name);
    }
  } else if (method == "mc-misspecified") {
    if (name == "lgcp" || name == "plcp") {
      out = fit_thomas_mincontrast(pat).model;
    } else if (name == "gibbs") {
      const StraussRangeEstimate rd = estimate_strauss_range(pat);
      out = rd.repelling ? fit_strauss_mpl(pat, rd.range).model : ModelSpec{model::Poisson{pat.intensity()}};
    } else {
      throw std::invalid_argument("no misspecified null model for " + name);
    }
  } else {
    throw std::invalid_argument("not a parametric method: " + method);
  }
  if (auto* g = std::get_if<model::GibbsLJ>(&out)) g->iterations = chain_iterations;
  if (auto* s = std::get_if<model::Strauss>(&out)) s->iterations = chain_iterations;
  if (label) *label = lab;
  return out;
}

StudyOutput run_study(const StudyConfig& cfg, const StudyRunOptions& opts) {
  validate(cfg);
  StudyOutput out;
  const int threads = resolve_threads(cfg.threads);

  std::vector<PatternGroup> groups;
  std::vector<ReplicationGroup> rgroups;
  std::vector<ScenarioKey> keys;
  std::set<std::string> skipped;
  for (const std::string& m : cfg.models)
    for (double a : cfg.a_levels)
      for (const Window& w : cfg.windows) {
        const std::size_t g = groups.size();
        const std::string gkey = m + "|" + format_number(a) + "|" + window_key(w);
        groups.push_back({m, a, w, study_model(m, a, cfg.theta), fnv1a(gkey)});
        if (auto* gb = std::get_if<model::GibbsLJ>(&groups.back().truth)) gb->iterations = cfg.chain_iterations;
        const std::vector<TestSpec> specs = row_specs(cfg, w);
        for (const ReplicationVariant& rv : cfg.replications) {
          std::vector<ReplicationGroup> expanded;
          if (rv.method == "tiling") {
            if (rv.window_side && !same_side(*rv.window_side, w.width())) continue;
            for (int t : rv.n_tiles) expanded.push_back({g, "tiling", "tiling", tiles_to_k(t), 0, cfg.n_replicates, 0, {}});
          } else if (rv.method == "sr") {
            const int iters = rv.sr_iterations > 0 ? rv.sr_iterations : (w.width() <= 0.5 + 1e-12 ? 5000 : 20000);
            expanded.push_back({g, "sr", "sr", 0, iters, cfg.sr_replicates, 0, {}});
          } else {
            if (rv.method == "mc-fitted" && m == "gibbs") {
              if (skipped.insert(m).second)
                out.notices.push_back("skipping gibbs x mc-fitted: no admissible fit for the Lennard-Jones model");
              continue;
            }
            const std::string label = rv.method == "mc-fitted" && m == "plcp" ? "plcp-oracle-params" : rv.method;
            expanded.push_back({g, rv.method, label, 0, 0, cfg.n_replicates, 0, {}});
          }
          for (ReplicationGroup& rg : expanded) {
            rg.seed_word = fnv1a(gkey + "|" + rg.label + "|" + std::to_string(rg.k) + "|" + std::to_string(rg.sr_iterations));
            for (const TestSpec& s : specs) {
              rg.rows.push_back(keys.size());
              keys.push_back({static_cast<int>(keys.size()) + 1, m, a, w.width(), to_string(s.dss.kind),
                              to_string(s.stat), rg.label, rg.k * rg.k});
            }
            rgroups.push_back(std::move(rg));
          }
        }
      }

  const std::size_t np = static_cast<std::size_t>(cfg.n_patterns);
  std::vector<std::vector<std::optional<PointPattern>>> patterns(groups.size(),
                                                                 std::vector<std::optional<PointPattern>>(np));
  std::vector<std::vector<std::string>> pattern_errors(groups.size(), std::vector<std::string>(np));
  parallel_for(groups.size() * np, threads, [&](std::size_t u) {
    const std::size_t g = u / np, p = u % np;
    try {
      RngStream rng(derive_seed(cfg.master_seed, groups[g].seed_word, p, 0));
      patterns[g][p] = simulate(groups[g].truth, groups[g].window, rng);
    } catch (const std::exception& e) {
      pattern_errors[g][p] = std::string("pattern simulation failed: ") + e.what();
    }
  });
  if (opts.progress) opts.progress("simulated " + std::to_string(groups.size() * np) + " patterns");

  // Per (replication group, pattern): one result or an error shared by the group's rows.
  struct Unit {
    std::vector<TestResult> results;
    std::string error;
  };
  std::vector<std::vector<Unit>> units(rgroups.size(), std::vector<Unit>(np));
  std::atomic<std::size_t> done{0};
  const std::size_t total = rgroups.size() * np;
  parallel_for(total, threads, [&](std::size_t u) {
    const std::size_t r = u / np, p = u % np;
    const ReplicationGroup& rg = rgroups[r];
    const PatternGroup& pg = groups[rg.pattern_group];
    Unit& unit = units[r][p];
    try {
      if (!patterns[rg.pattern_group][p]) throw std::runtime_error(pattern_errors[rg.pattern_group][p]);
      const PointPattern& pat = *patterns[rg.pattern_group][p];
      TestOptions to;
      to.n_replicates = rg.n_replicates;
      to.alpha_level = cfg.alpha_level;
      to.orientation = cfg.orientation;
      to.recentering = cfg.recentering;
      to.threads = 1;
      to.replication_label = rg.label;
      if (rg.method == "tiling") {
        to.replication = TilingConfig{rg.k, false};
      } else if (rg.method == "sr") {
        SrConfig sr;
        sr.iterations = rg.sr_iterations;
        to.replication = sr;
      } else {
        to.replication = ParametricConfig{null_model_for(rg.method, pg.truth, pat, cfg.chain_iterations)};
      }
      const std::uint64_t seed = derive_seed(cfg.master_seed, rg.seed_word, p, 0);
      unit.results = run_isotropy_tests(pat, row_specs(cfg, pg.window), to, seed);
    } catch (const std::exception& e) {
      unit.error = e.what();
    }
    const std::size_t d = ++done;
    if (opts.progress && (d % std::max<std::size_t>(1, total / 20) == 0 || d == total))
      opts.progress("tests " + std::to_string(d) + "/" + std::to_string(total));
  });

  out.results.resize(keys.size());
  for (const ReplicationGroup& rg : rgroups) {
    for (std::size_t s = 0; s < rg.rows.size(); ++s) {
      ScenarioResult& res = out.results[rg.rows[s]];
      res.key = keys[rg.rows[s]];
      const std::size_t r = &rg - rgroups.data();
      for (std::size_t p = 0; p < np; ++p) {
        const Unit& unit = units[r][p];
        if (!unit.error.empty()) {
          ++res.n_failures;
          if (opts.keep_details) out.details.push_back({res.key.scenario_id, static_cast<int>(p), std::nullopt, unit.error});
          continue;
        }
        const TestResult& t = unit.results[s];
        ++res.n_patterns;
        res.rejections += t.reject;
        res.mean_p += t.p_value;
        if (opts.keep_details) out.details.push_back({res.key.scenario_id, static_cast<int>(p), t, ""});
      }
      finish(res, cfg.alpha_level);
    }
  }
  for (const ScenarioResult& r : out.results)
    if (r.n_failures > 0)
      out.notices.push_back("scenario " + std::to_string(r.key.scenario_id) + ": " + std::to_string(r.n_failures) +
                            " failed test(s) excluded");
  return out;
}

std::string results_csv(const std::vector<ScenarioResult>& results) {
  std::string s =
      "scenario_id,model,a,window_side,dss,statistic,replication,n_tiles,n_patterns,n_failures,rejection_rate,"
      "size_exceedance\n";
  for (const ScenarioResult& r : results) {
    s += std::to_string(r.key.scenario_id) + "," + r.key.model + "," + format_number(r.key.a) + "," +
         format_number(r.key.window_side) + "," + r.key.dss + "," + r.key.statistic + "," + r.key.replication + "," +
         (r.key.n_tiles > 0 ? std::to_string(r.key.n_tiles) : "") + "," + std::to_string(r.n_patterns) + "," +
         std::to_string(r.n_failures) + "," + format_number(r.rejection_rate) + "," +
         (r.size_exceedance ? format_number(*r.size_exceedance) : "") + "\n";
  }
  return s;
}

std::string results_json(const std::vector<ScenarioResult>& results) {
  ojson arr = ojson::array();
  for (const ScenarioResult& r : results) {
    ojson j;
    j["scenario_id"] = r.key.scenario_id;
    j["model"] = r.key.model;
    j["a"] = r.key.a;
    j["window_side"] = r.key.window_side;
    j["dss"] = r.key.dss;
    j["statistic"] = r.key.statistic;
    j["replication"] = r.key.replication;
    j["n_tiles"] = r.key.n_tiles > 0 ? ojson(r.key.n_tiles) : ojson(nullptr);
    j["n_patterns"] = r.n_patterns;
    j["n_failures"] = r.n_failures;
    j["rejections"] = r.rejections;
    j["rejection_rate"] = r.rejection_rate;
    j["mean_p"] = r.mean_p;
    j["size_exceedance"] = r.size_exceedance ? ojson(*r.size_exceedance) : ojson(nullptr);
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

std::vector<ScenarioResult> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("scenario_id,", 0) != 0)
    throw std::runtime_error("results CSV: missing header");
  std::vector<ScenarioResult> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> c;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) c.push_back(cell);
    if (!line.empty() && line.back() == ',') c.emplace_back();
    if (c.size() != 12) throw std::runtime_error("results CSV line " + std::to_string(lineno) + ": expected 12 fields");
    ScenarioResult r;
    r.key.scenario_id = std::stoi(c[0]);
    r.key.model = c[1];
    r.key.a = parse_number(c[2]);
    r.key.window_side = parse_number(c[3]);
    r.key.dss = c[4];
    r.key.statistic = c[5];
    r.key.replication = c[6];
    r.key.n_tiles = c[7].empty() ? 0 : std::stoi(c[7]);
    r.n_patterns = std::stoi(c[8]);
    r.n_failures = std::stoi(c[9]);
    r.rejection_rate = parse_number(c[10]);
    r.rejections = static_cast<int>(std::lround(r.rejection_rate * r.n_patterns));
    if (!c[11].empty()) r.size_exceedance = parse_number(c[11]);
    out.push_back(r);
  }
  return out;
}

void emit_outputs(const std::vector<ScenarioResult>& results, const std::string& format, const std::string& path) {
  if (results.empty()) throw std::invalid_argument("no results to write");
  if (format == "csv") write_file(path, results_csv(results));
  else if (format == "json") write_file(path, results_json(results));
  else throw std::invalid_argument("unknown output format '" + format + "' (expected csv or json)");
}

std::string scenario_json(const ScenarioKey& key, int pattern) {
  ojson j;
  j["scenario_id"] = key.scenario_id;
  j["model"] = key.model;
  j["a"] = key.a;
  j["window_side"] = key.window_side;
  j["dss"] = key.dss;
  j["statistic"] = key.statistic;
  j["replication"] = key.replication;
  j["n_tiles"] = key.n_tiles;
  j["pattern"] = pattern;
  return j.dump();
}

void write_details(const StudyOutput& out, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::map<int, const ScenarioKey*> keys;
  for (const ScenarioResult& r : out.results) keys[r.key.scenario_id] = &r.key;
  for (const StudyDetail& d : out.details) {
    const std::string name = dir + "/s" + std::to_string(d.scenario_id) + "_p" + std::to_string(d.pattern) + ".json";
    const std::string scen = scenario_json(*keys.at(d.scenario_id), d.pattern);
    if (d.result) {
      write_file(name, test_result_json(*d.result, scen) + "\n");
    } else {
      ojson j;
      j["scenario"] = ojson::parse(scen);
      j["error"] = d.error;
      write_file(name, j.dump(2) + "\n");
    }
  }
}

std::vector<ScenarioResult> summarize(const std::vector<std::string>& detail_paths, double alpha_level_default) {
  std::map<int, ScenarioResult> rows;
  std::map<int, double> alpha;
  for (const std::string& path : detail_paths) {
    const json j = json::parse(read_file(path));
    if (!j.contains("scenario")) throw std::runtime_error(path + ": detail file has no scenario block");
    const json& s = j.at("scenario");
    ScenarioKey key;
    key.scenario_id = s.at("scenario_id").get<int>();
    key.model = s.at("model").get<std::string>();
    key.a = s.at("a").get<double>();
    key.window_side = s.at("window_side").get<double>();
    key.dss = s.at("dss").get<std::string>();
    key.statistic = s.at("statistic").get<std::string>();
    key.replication = s.at("replication").get<std::string>();
    key.n_tiles = s.at("n_tiles").get<int>();
    ScenarioResult& r = rows[key.scenario_id];
    r.key = key;
    if (j.contains("error")) {
      ++r.n_failures;
      continue;
    }
    const TestResult t = test_result_from_json(j.dump());
    ++r.n_patterns;
    r.rejections += t.reject;
    r.mean_p += t.p_value;
    alpha[key.scenario_id] = t.alpha_level;
  }
  std::vector<ScenarioResult> out;
  for (auto& [id, r] : rows) {
    finish(r, alpha.count(id) ? alpha[id] : alpha_level_default);
    out.push_back(r);
  }
  return out;
}

std::vector<TestResult> ambrosia_tiling_tests(const PointPattern& pat, int n_replicates, std::uint64_t seed,
                                              int threads) {
  DssChoice dss;
  dss.kind = DssKind::kcyl;
  dss.zeta = 0.15;
  dss.alpha1 = std::numbers::pi / 2;
  dss.alpha2 = 0.0;
  dss.r_max = pat.window().min_side() / 4.0;
  dss.kappa = 100;
  std::vector<TestResult> out;
  for (int k = 4; k <= 8; ++k) {
    TestOptions to;
    to.replication = TilingConfig{k, false};
    to.n_replicates = n_replicates;
    to.threads = threads;
    out.push_back(run_isotropy_test(pat, {dss, StatKind::ms_range_std}, to, derive_seed(seed, 0, k, 0)));
  }
  return out;
}

}  // namespace anisotest
