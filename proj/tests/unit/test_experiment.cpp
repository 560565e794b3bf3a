#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "redshard/errors.hpp"
#include "redshard/experiment.hpp"

using namespace redshard;
using nlohmann::json;

namespace {

json smoke_doc() {
  return json::parse(R"({
    "workload": {"mode": "stochastic", "N": 10,
                 "arrival_mixture": [[0.99, 0.5], [0.01, 50.5]],
                 "code_mix": [[0.9, [3, 1]], [0.1, [14, 10]]]},
    "sim": {"L": 3, "dist": {"kind": "exponential", "mu": 50.0}},
    "sweep": {"rho_grid": [0.3, 0.6], "policies": ["SERPT_R", "SEDPT_R", "FCFS_R"]},
    "bounds": ["exp_nonpreemptive_dmin_ge_L"],
    "reps": 2, "seed": 7})");
}

std::string config_error(const json& doc) {
  try {
    parse_experiment(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("parses a valid config") {
  auto cfg = parse_experiment(smoke_doc());
  CHECK(cfg.threads == 3);
  CHECK(cfg.reps == 2);
  CHECK(cfg.seed == 7);
  CHECK(cfg.rho_grid == std::vector<double>{0.3, 0.6});
  REQUIRE(cfg.policies.size() == 3);
  CHECK(cfg.policies[0].spec.id == PolicyId::kSerptRPreemptive);
  CHECK(cfg.policies[0].label == "SERPT_R_preemptive");
  CHECK(cfg.workload.code_mix.size() == 2);
  CHECK(cfg.bounds == std::vector<GapSetting>{GapSetting::kExpNonpreemptiveDminGeL});
}

TEST_CASE("config errors name the offending field") {
  auto doc = smoke_doc();
  doc["sweep"]["rho_grid"] = json::array();
  CHECK(config_error(doc).find("sweep.rho_grid") != std::string::npos);

  doc = smoke_doc();
  doc["sweep"]["rho_grid"] = {0.6, 0.3};
  CHECK(config_error(doc).find("sweep.rho_grid") != std::string::npos);

  doc = smoke_doc();
  doc["sweep"]["rho_grid"] = {0.3, 1.2};
  CHECK(config_error(doc).find("sweep.rho_grid") != std::string::npos);

  doc = smoke_doc();
  doc.erase("workload");
  CHECK(config_error(doc).find("workload") != std::string::npos);

  doc = smoke_doc();
  doc["sim"]["dist"]["kind"] = "weibull";
  CHECK(config_error(doc).find("sim.dist") != std::string::npos);

  doc = smoke_doc();
  doc["reps"] = 1;
  CHECK(config_error(doc).find("reps") != std::string::npos);

  doc = smoke_doc();
  doc["sweep"]["policies"] = {"SJF"};
  CHECK(config_error(doc).find("sweep.policies[0]") != std::string::npos);

  doc = smoke_doc();
  doc["workload"]["code_mix"] = json::parse("[[0.5, [3, 1]]]");
  CHECK_FALSE(config_error(doc).empty());

  doc = smoke_doc();
  doc["sweep"].erase("rho_grid");
  CHECK(config_error(doc).find("workload.lambda") != std::string::npos);
  doc["workload"]["lambda"] = 20.0;
  CHECK(config_error(doc).empty());

  doc = smoke_doc();
  doc["workload"] = json::parse(R"({"mode": "explicit", "requests": [{"arrival": 0, "k": 1, "n": 2}]})");
  CHECK(config_error(doc).find("sweep.rho_grid") != std::string::npos);
  doc["sweep"].erase("rho_grid");
  CHECK(config_error(doc).empty());

  doc = smoke_doc();
  doc["bounds"] = {"tight"};
  CHECK(config_error(doc).find("bounds[0]") != std::string::npos);
}

TEST_CASE("distribution parsing") {
  auto d = parse_dist(json::parse(R"({"kind":"shifted_exp","mu":50.0,"shift_frac":0.4})"));
  auto* s = std::get_if<ShiftedExponential>(&d);
  REQUIRE(s != nullptr);
  CHECK(s->shift == doctest::Approx(0.008));
  CHECK(s->rate == doctest::Approx(50.0 / 0.6));
  CHECK(mean(d) == doctest::Approx(0.02));

  auto m = parse_dist(json::parse(R"({"kind":"exp_mixture","mu":50.0,"components":[[0.5,0.4],[0.5,1.6]]})"));
  auto* mix = std::get_if<ExponentialMixture>(&m);
  REQUIRE(mix != nullptr);
  CHECK(mix->components[0].rate == doctest::Approx(20.0));
  CHECK(mix->components[1].rate == doctest::Approx(80.0));

  CHECK(std::holds_alternative<Exponential>(parse_dist(json::parse(R"({"kind":"exponential","mu":2})"))));
  CHECK_THROWS_AS(parse_dist(json::parse(R"({"kind":"exponential","mu":-2})")), ConfigError);
  CHECK_THROWS_AS(parse_dist(json::parse(R"({"kind":"shifted_exp","mu":1,"shift_frac":1.0})")),
                  ConfigError);
}

TEST_CASE("policy objects: padding, labels, script parameters") {
  auto doc = smoke_doc();
  doc["sweep"]["policies"] = json::parse(
      R"(["SERPT_R", {"id": "SERPT_R", "pad_codes": true}, {"id": "SERPT_R", "pad_codes": 5, "label": "p5"}])");
  auto cfg = parse_experiment(doc);
  CHECK_FALSE(cfg.policies[0].pad_distance.has_value());
  CHECK(cfg.policies[1].pad_distance == 3);
  CHECK(cfg.policies[1].label == "SERPT_R_preemptive+padded");
  CHECK(cfg.policies[2].pad_distance == 5);
  CHECK(cfg.policies[2].label == "p5");

  doc = smoke_doc();
  doc["sweep"]["policies"] = {"SCRIPT_Q1"};
  CHECK_FALSE(config_error(doc).empty());
}

TEST_CASE("smoke sweep yields 2 x |grid| x |policies| rows") {
  auto cfg = parse_experiment(smoke_doc());
  auto result = run_sweep(cfg);
  CHECK(result.cells.size() == 2 * 3);
  CHECK(result.bounds.size() == 1);
  CHECK(result.d_min == 3);
  for (const auto& c : result.cells) {
    CHECK(c.summary.reps == 2);
    CHECK(c.samples.size() == 2);
    CHECK(c.summary.ci_low <= c.summary.mean);
  }
  std::ostringstream csv;
  write_csv(result, cfg, csv);
  std::string text = csv.str();
  CHECK(text.rfind("rho,policy,mean_flow_time,ci_low,ci_high,reps,seed\n", 0) == 0);
  CHECK(count_lines(text) == 1 + 6 + 1);
  CHECK(text.find("*,bound:exp_nonpreemptive_dmin_ge_L,0.02") != std::string::npos);
}

TEST_CASE("fixed seed gives byte-identical CSV") {
  auto cfg = parse_experiment(smoke_doc());
  std::ostringstream a, b;
  write_csv(run_sweep(cfg), cfg, a);
  write_csv(run_sweep(cfg), cfg, b);
  CHECK(a.str() == b.str());
  cfg.seed = 8;
  std::ostringstream c;
  write_csv(run_sweep(cfg), cfg, c);
  CHECK(a.str() != c.str());
}

TEST_CASE("run_experiment writes atomically and cleans up on failure") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "redshard_experiment_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto cfg = parse_experiment(smoke_doc());
  cfg.output = (dir / "out.csv").string();
  run_experiment(cfg);
  CHECK(fs::exists(dir / "out.csv"));
  CHECK_FALSE(fs::exists(dir / "out.csv.partial"));

  cfg.output = (dir / "missing" / "out.csv").string();
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
  CHECK_FALSE(fs::exists(dir / "missing" / "out.csv.partial"));

  cfg.output = (dir / "aborted.csv").string();
  cfg.policies[0].spec.id = PolicyId::kScriptQ1;  // fails inside the sweep
  CHECK_THROWS(run_experiment(cfg));
  CHECK_FALSE(fs::exists(dir / "aborted.csv"));
  CHECK_FALSE(fs::exists(dir / "aborted.csv.partial"));
  fs::remove_all(dir);
}

TEST_CASE("figure configs") {
  for (const auto& f : figure_names()) {
    auto cfg = figure_config(f, {});
    CHECK(cfg.workload.count == 600);
    CHECK(cfg.reps == 50);
    CHECK(cfg.rho_grid == std::vector<double>{0.3, 0.5, 0.7, 0.9});
    ReproduceOptions full;
    full.full_scale = true;
    auto big = figure_config(f, full);
    CHECK(big.workload.count == 3000);
    CHECK(big.reps == 100);
    CHECK(big.rho_grid.size() == 9);
  }
  CHECK_THROWS_AS(figure_config("fig3", {}), ConfigError);
  CHECK(figure_config("fig2c", {}).threads == 5);
  CHECK(classify(figure_config("fig5", {}).dist) == AgingClass::kNlu);
  CHECK(classify(figure_config("fig6", {}).dist) == AgingClass::kNsu);
}

TEST_CASE("Fig. 2(a): SERPT_R below FCFS_R at every rho, separated from 0.5") {
  ReproduceOptions opts;
  opts.rho_grid = std::vector<double>{0.3, 0.5, 0.7, 0.9};
  auto rep = reproduce("fig2a", opts);
  REQUIRE(rep.orderings.size() == 1);
  CHECK(rep.orderings[0].pass);
  for (double rho : {0.5, 0.7, 0.9}) {
    const auto& serpt = find_cell(rep.result, rho, "SERPT_R_preemptive").summary;
    const auto& fcfs = find_cell(rep.result, rho, "FCFS_R").summary;
    CHECK(serpt.ci_high < fcfs.ci_low);
  }
  CHECK(rep.ok());
  std::ostringstream out;
  print_report(rep, out);
  CHECK(out.str().find("fig2a") != std::string::npos);
}

TEST_CASE("gap helpers") {
  SweepResult r;
  r.cells.push_back({0.5, 1.0, "a", summarize(std::vector<double>{1.0, 2.0, 3.0}), {1.0, 2.0, 3.0}});
  r.cells.push_back({0.5, 1.0, "b", summarize(std::vector<double>{1.5, 2.5, 3.5}), {1.5, 2.5, 3.5}});
  auto d = paired_difference(r, 0.5, "b", "a");
  CHECK(d.mean == doctest::Approx(0.5));
  CHECK(d.std_err == 0.0);
  CHECK_THROWS_AS(find_cell(r, 0.7, "a"), InvalidSpec);

  ExperimentConfig cfg;
  cfg.threads = 3;
  cfg.dist = make_exponential(50.0);
  r.d_min = 3;
  auto g = max_gap(r, cfg, "b", "a", GapSetting::kExpNonpreemptiveDminGeL);
  CHECK(g.gap == doctest::Approx(0.5));
  CHECK(g.bound == doctest::Approx(0.02));
  CHECK(g.std_err == doctest::Approx(std::hypot(1.0, 1.0) / std::sqrt(3.0)));
  CHECK(g.verdict == Verdict::kInconclusive);
}

}
