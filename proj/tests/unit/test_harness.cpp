#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "geodecomp/harness_config.hpp"
#include "geodecomp/harness_emit.hpp"
#include "geodecomp/harness_run.hpp"

using namespace geodecomp;
using namespace geodecomp::harness;
using nlohmann::json;

namespace {

const std::string kScenarioDir = GEODECOMP_SCENARIO_DIR;

json load(const std::string& name) {
  std::ifstream in(kScenarioDir + "/" + name + ".json");
  return json::parse(in);
}

// Reduced translation scenario for fast runs.
json small_translation() {
  json j = load("translation");
  j["grids"]["geodesics_per_axis"] = 4;
  j["grids"]["strip_budget"] = 20000;
  j["grids"]["strip_eps"] = 2e-2;
  j["tolerances"]["strip"] = 0.5;
  return j;
}

std::string field_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("shipped scenarios parse and echo") {
  for (const auto& entry : std::filesystem::directory_iterator(kScenarioDir)) {
    if (entry.path().extension() != ".json") {
      continue;
    }
    CAPTURE(entry.path().string());
    const auto c = load_config(entry.path().string());
    CHECK(c.name == entry.path().stem().string());
    const auto echo = to_json(c);
    CHECK(to_json(parse_config(echo)) == echo);
    CHECK(build_model(c) != nullptr);
  }
}

TEST_CASE("check names are unique and ordered") {
  const auto& names = check_names();
  CHECK(names.front() == "kantorovich_duality");
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());
}

TEST_CASE("config validation reports field paths") {
  const json base = small_translation();
  {
    json j = base;
    j["bogus"] = 1;
    CHECK(field_of(j) == "bogus");
  }
  {
    json j = base;
    j["grids"]["t_grid"] = {0.0, 0.5, 0.4, 1.0};
    CHECK(field_of(j) == "grids.t_grid");
  }
  {
    json j = base;
    j["tolerances"]["identity"] = -1;
    CHECK(field_of(j) == "tolerances.identity");
  }
  {
    json j = base;
    j["checks"].push_back("no_such_check");
    CHECK(field_of(j).rfind("checks[", 0) == 0);
  }
  {
    json j = load("dilation");
    j["transport"]["alpha"] = 1.5;
    CHECK(field_of(j).rfind("transport", 0) == 0);
  }
  {
    json j = base;
    j["N"] = 1.0;
    CHECK_FALSE(field_of(j).empty());
  }
  {
    json j = base;
    j["schema_version"] = 99;
    CHECK(field_of(j) == "schema_version");
  }
  CHECK(field_of(base).empty());
  CHECK_THROWS_AS(load_config("/nonexistent/scenario.json"), ConfigError);
}

TEST_CASE("empty check list gives a header-only csv") {
  json j = small_translation();
  j["checks"] = json::array();
  j["expect_equality"] = json::array();
  const auto report = run(parse_config(j));
  CHECK(report.checks.empty());
  CHECK(to_csv(report) == "check,quantity,geodesic,t0,t1,value\n");
  CHECK(report.exit_code() == 0);
}

TEST_CASE("csv has one row per residual") {
  RunReport r;
  CheckResult c;
  c.name = "example";
  for (int g = 0; g < 3; ++g) {
    for (int k = 0; k < 5; ++k) {
      c.residuals.push_back({"value", g, k / 4.0, k / 4.0, 0.1 * g + k});
    }
  }
  r.checks.push_back(c);
  const auto csv = to_csv(r);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 16);
}

TEST_CASE("json round trip is bit exact") {
  auto report = run(parse_config(small_translation()));
  REQUIRE_FALSE(report.checks.empty());
  // Non-finite values and values without a short decimal form.
  report.checks[0].residuals.push_back({"special", 1, 0.1, 0.7, std::numeric_limits<double>::quiet_NaN()});
  report.checks[0].residuals.push_back({"special", 2, 1.0 / 3.0, 0.0, std::numeric_limits<double>::infinity()});
  report.checks[0].residuals.push_back({"special", -1, 0.0, 0.0, -std::numeric_limits<double>::infinity()});
  report.checks[0].residuals.push_back({"special", -1, 0.0, 0.0, std::nextafter(1.0, 2.0)});
  const auto text = render(report, Format::Json);
  const auto back = report_from_json(json::parse(text));
  REQUIRE(back.checks.size() == report.checks.size());
  for (std::size_t i = 0; i < report.checks.size(); ++i) {
    const auto& a = report.checks[i];
    const auto& b = back.checks[i];
    CHECK(a.name == b.name);
    CHECK(a.status == b.status);
    REQUIRE(a.residuals.size() == b.residuals.size());
    for (std::size_t k = 0; k < a.residuals.size(); ++k) {
      CHECK(a.residuals[k].quantity == b.residuals[k].quantity);
      CHECK(a.residuals[k].geodesic == b.residuals[k].geodesic);
      CHECK(same_bits(a.residuals[k].t0, b.residuals[k].t0));
      CHECK(same_bits(a.residuals[k].t1, b.residuals[k].t1));
      CHECK((same_bits(a.residuals[k].value, b.residuals[k].value) ||
             (std::isnan(a.residuals[k].value) && std::isnan(b.residuals[k].value))));
    }
  }
  CHECK(render(back, Format::Json) == text);
}

TEST_CASE("reports are identical across runs and worker counts") {
  const auto cfg = parse_config(small_translation());
  RunOptions one;
  one.jobs = 1;
  RunOptions four;
  four.jobs = 4;
  const auto a = render(run(cfg, one), Format::Json);
  const auto b = render(run(cfg, one), Format::Json);
  const auto c = render(run(cfg, four), Format::Json);
  CHECK(a == b);
  CHECK(a == c);
  CHECK(a.find("\"seconds\"") == std::string::npos);
}

TEST_CASE("disabling a check leaves the others unchanged") {
  json all = small_translation();
  json some = all;
  some["checks"] = {"lambda_cross", "decomposition"};
  some["expect_equality"] = json::array();
  const auto full = run(parse_config(all));
  const auto part = run(parse_config(some));
  for (const auto& name : {"lambda_cross", "decomposition"}) {
    const auto* a = full.find(name);
    const auto* b = part.find(name);
    REQUIRE(a != nullptr);
    REQUIRE(b != nullptr);
    CHECK(to_json(RunReport{.checks = {*a}}) == to_json(RunReport{.checks = {*b}}));
  }
}

TEST_CASE("seed override changes only randomized checks") {
  const auto cfg = parse_config(small_translation());
  RunOptions other;
  other.seed = 12345;
  const auto a = run(cfg);
  const auto b = run(cfg, other);
  CHECK(b.seed == 12345);
  CHECK(to_json(RunReport{.checks = {*a.find("hopf_lax")}}) == to_json(RunReport{.checks = {*b.find("hopf_lax")}}));
  CHECK(to_json(RunReport{.checks = {*a.find("strip_ratio")}}) !=
        to_json(RunReport{.checks = {*b.find("strip_ratio")}}));
}

TEST_CASE("translation scenario passes with equality residuals") {
  const auto report = run(parse_config(small_translation()));
  for (const auto& c : report.checks) {
    CAPTURE(c.name);
    CAPTURE(c.message);
    CHECK(c.status == Status::Pass);
  }
  for (const auto& name : {"cd_star_reduced", "cd_pointwise"}) {
    for (const auto& r : report.find(name)->residuals) {
      CHECK(std::abs(r.value) <= 1e-10);
    }
  }
  CHECK(report.exit_code() == 0);
}

TEST_CASE("crossed levels are rejected by the linearity precondition") {
  const auto report = run(load_config(kScenarioDir + "/crossed_levels.json"));
  const auto* lin = report.find("lambda_linear");
  REQUIRE(lin != nullptr);
  CHECK(lin->status == Status::Pass);
  CHECK(lin->message.find("rejected") != std::string::npos);
  // Without the expectation the same rejection is a failure.
  json j = load("crossed_levels");
  j["expect_rejection"] = json::array();
  const auto strict = run(parse_config(j));
  CHECK(strict.find("lambda_linear")->status == Status::Fail);
  CHECK(strict.exit_code() == 1);
}

TEST_CASE("a failing tolerance is recorded and the run continues") {
  json j = small_translation();
  j["tolerances"]["strip"] = 1e-9;
  const auto report = run(parse_config(j));
  CHECK(report.find("strip_ratio")->status == Status::Fail);
  CHECK(report.find("decomposition") != nullptr);
  CHECK(report.exit_code() == 1);
}

TEST_CASE("emit surfaces I/O errors") {
  RunReport r;
  try {
    emit(r, Format::Csv, "/nonexistent-dir/report.csv");
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("No such file or directory") != std::string::npos);
  }
  const auto path = std::filesystem::temp_directory_path() / "geodecomp_emit_test.csv";
  emit(r, Format::Csv, path.string());
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "check,quantity,geodesic,t0,t1,value");
  std::filesystem::remove(path);
}

TEST_CASE("status strings") {
  for (auto s : {Status::Pass, Status::Fail, Status::Warn}) {
    CHECK(status_from_string(to_string(s)) == s);
  }
  CHECK(format_from_string("csv") == Format::Csv);
  CHECK_THROWS(format_from_string("xml"));
}
