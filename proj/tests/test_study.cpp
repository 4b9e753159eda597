#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "anisotest/pattern_io.hpp"
#include "anisotest/study.hpp"

using namespace anisotest;
namespace fs = std::filesystem;

namespace {

StudyConfig tiny() {
  StudyConfig c;
  c.models = {"lgcp"};
  c.a_levels = {1.0};
  c.windows = {Window::centred_square(0.5)};
  c.dss_list = {"gloc"};
  c.replications = {{"tiling", {9}, std::nullopt, 0}};
  c.n_patterns = 1;
  c.n_replicates = 19;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("anisotest_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("derive_seed") {
  CHECK(derive_seed(5, 1, 2, 3) == derive_seed(5, 1, 2, 3));
  CHECK(derive_seed(5, 1, 2, 3) != derive_seed(5, 1, 3, 2));
  RngStream rng(123);
  int clashes = 0, echoes = 0;
  for (int i = 0; i < 1000000; ++i) {
    const std::uint64_t s = rng.engine()();
    const std::uint64_t a = derive_seed(s, 0, 0, 0);
    clashes += a == derive_seed(s, 0, 0, 1);
    echoes += a == s;
  }
  CHECK(clashes == 0);
  CHECK(echoes == 0);
  std::unordered_set<std::uint64_t> seen;
  for (std::uint64_t p = 0; p < 1000; ++p)
    for (std::uint64_t r = 0; r < 100; ++r) seen.insert(derive_seed(1, 7, p, r));
  CHECK(seen.size() == 100000);
}

TEST_CASE("pattern csv") {
  const Window w(0, 100, 0, 100);
  std::istringstream ok("x,y\n1.0,2.0\n3.5,4.1");
  const auto p = parse_pattern_csv(ok, w);
  REQUIRE(p.size() == 2);
  CHECK(p[1] == Point{3.5, 4.1});

  std::istringstream bad("x,y\n1.0,2.0\n1.0,abc\n");
  CHECK_THROWS_WITH(parse_pattern_csv(bad, w, "f.csv"), doctest::Contains("f.csv:3"));
  std::istringstream dup("x,y\n1.0,2.0\n1.0,2.0\n");
  CHECK_THROWS_WITH(parse_pattern_csv(dup, w), doctest::Contains("duplicate"));
  std::istringstream out("x,y\n1.0,2.0\n101,5\n-1,5\n");
  try {
    parse_pattern_csv(out, w);
    FAIL("expected an error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  std::istringstream headless("0.5,0.5\n1,1\n");
  CHECK(parse_pattern_csv(headless, w).size() == 2);

  RngStream rng(4);
  std::vector<Point> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({rng.uniform(0, 100), rng.uniform(0, 100)});
  const PointPattern orig(pts, w);
  std::istringstream back(format_pattern_csv(orig));
  CHECK(parse_pattern_csv(back, w).points() == orig.points());

  CHECK(parse_window("-0.5,0.5,-0.25,0.25") == Window(-0.5, 0.5, -0.25, 0.25));
  CHECK_THROWS(parse_window("0,1,0"));
  CHECK_THROWS(parse_number("1.5x"));
  CHECK(format_number(0.1) == "0.1");
  CHECK_THROWS(ingest_pattern_csv("/nonexistent/file.csv", w));
}

TEST_CASE("study config") {
  CHECK(preset("desk").n_patterns == 200);
  CHECK(preset("desk").n_replicates == 199);
  CHECK(preset("paper").n_patterns == 1000);
  CHECK(preset("paper").n_replicates == 1000);
  CHECK(preset("paper").sr_replicates == 99);
  CHECK_THROWS(preset("huge"));

  const auto c = study_config_from_json(R"({"preset": "desk", "n_patterns": 7, "a_levels": [1, 0.5]})");
  CHECK(c.n_patterns == 7);
  CHECK(c.a_levels.size() == 2);
  CHECK(c.n_replicates == 199);
  CHECK_THROWS(study_config_from_json(R"({"n_patterns": 7, "typo": 1})"));

  StudyConfig bad = tiny();
  bad.n_patterns = 0;
  CHECK_THROWS(validate(bad));
  bad = tiny();
  bad.a_levels = {1.2};
  CHECK_THROWS(validate(bad));
}

TEST_CASE("gibbs with a fitted correct model is dropped from the grid") {
  StudyConfig c = tiny();
  c.models = {"gibbs", "lgcp"};
  c.replications = {{"mc-fitted", {}, std::nullopt, 0}};
  c.chain_iterations = 2000;
  const auto out = run_study(c);
  REQUIRE(out.results.size() == 1);
  CHECK(out.results[0].key.model == "lgcp");
  REQUIRE(out.notices.size() == 1);
  CHECK(out.notices[0].find("gibbs") != std::string::npos);
}

TEST_CASE("degenerate study emits one row") {
  const auto out = run_study(tiny());
  REQUIRE(out.results.size() == 1);
  const std::string csv = results_csv(out.results);
  CHECK(csv.rfind("scenario_id,model,a,window_side,dss,statistic,replication,n_tiles,n_patterns,n_failures,rejection_rate,size_exceedance\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("study grid, counting identity, round trip") {
  StudyConfig c;
  c.models = {"lgcp", "plcp", "gibbs"};
  c.a_levels = {1.0, 0.4};
  c.windows = {Window::centred_square(0.5)};
  c.dss_list = {"gloc", "kcyl", "theta"};
  c.replications = {{"tiling", {4, 9}, std::nullopt, 0}, {"mc-oracle", {}, std::nullopt, 0}, {"mc-misspecified", {}, std::nullopt, 0}};
  c.n_patterns = 3;
  c.n_replicates = 19;
  c.chain_iterations = 2000;
  const auto out = run_study(c);
  CHECK(out.results.size() == 3 * 2 * 3 * 4);
  std::set<std::tuple<std::string, double, std::string, std::string, int>> keys;
  for (const auto& r : out.results) {
    keys.insert({r.key.model, r.key.a, r.key.dss, r.key.replication, r.key.n_tiles});
    CHECK(r.rejection_rate >= 0.0);
    CHECK(r.rejection_rate <= 1.0);
    CHECK(r.n_patterns + r.n_failures == 3);
    const double count = r.rejection_rate * r.n_patterns;
    CHECK(std::fabs(count - std::round(count)) < 1e-9);
    CHECK(r.size_exceedance.has_value() == (r.key.a == 1.0));
    if (r.size_exceedance) CHECK(*r.size_exceedance == doctest::Approx(std::max(0.0, r.rejection_rate - 0.05)));
  }
  CHECK(keys.size() == out.results.size());

  const auto back = parse_results_csv(results_csv(out.results));
  REQUIRE(back.size() == out.results.size());
  CHECK(results_csv(back) == results_csv(out.results));
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].key.scenario_id == out.results[i].key.scenario_id);
    CHECK(back[i].rejection_rate == out.results[i].rejection_rate);
  }
}

TEST_CASE("study is independent of thread count") {
  StudyConfig c = tiny();
  c.a_levels = {1.0, 0.6};
  c.dss_list = {"gloc", "kcyl"};
  c.replications = {{"tiling", {4}, std::nullopt, 0}, {"mc-misspecified", {}, std::nullopt, 0}};
  c.n_patterns = 6;
  c.threads = 1;
  const std::string one = results_csv(run_study(c).results);
  c.threads = 4;
  CHECK(results_csv(run_study(c).results) == one);
}

TEST_CASE("details and summarize") {
  StudyConfig c = tiny();
  c.n_patterns = 4;
  StudyRunOptions o;
  o.keep_details = true;
  const auto out = run_study(c, o);
  const fs::path dir = scratch("details");
  write_details(out, dir.string());
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path().string());
  CHECK(files.size() == 4);
  const auto s = summarize(files);
  REQUIRE(s.size() == 1);
  CHECK(s[0].rejection_rate == out.results[0].rejection_rate);
  CHECK(s[0].n_patterns == 4);

  const fs::path csv = dir / "r.csv";
  emit_outputs(out.results, "csv", csv.string());
  std::ifstream in(csv);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == results_csv(out.results));
  CHECK_THROWS(emit_outputs(out.results, "csv", "/nonexistent/dir/r.csv"));
  CHECK_THROWS(emit_outputs(out.results, "xml", csv.string()));
  fs::remove_all(dir);
}

TEST_CASE("null models") {
  RngStream rng(3);
  const Window w = Window::centred_square(0.5);
  const ModelSpec truth = study_model("lgcp", 0.4, 0.5);
  const PointPattern p = simulate(truth, w, rng);
  std::string label;
  CHECK(model_anisotropy(null_model_for("mc-oracle", truth, p, 2000, &label)) == 1.0);
  CHECK(label == "mc-oracle");
  const ModelSpec mis = null_model_for("mc-misspecified", truth, p, 2000, &label);
  CHECK((model_name(mis) == "thomas" || model_name(mis) == "poisson"));
  null_model_for("mc-fitted", study_model("plcp", 0.6, 0.5), p, 2000, &label);
  CHECK(label == "plcp-oracle-params");
  CHECK_THROWS(null_model_for("mc-fitted", study_model("gibbs", 1.0, 0.5), p, 2000, &label));
}
