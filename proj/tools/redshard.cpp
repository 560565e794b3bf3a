// redshard: experiment runner for redundant parallel chunk retrieval.
//
// Exit codes: 0 ok, 1 config error, 2 verdict violated, 3 internal error.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "redshard/analysis.hpp"
#include "redshard/engine.hpp"
#include "redshard/errors.hpp"
#include "redshard/experiment.hpp"
#include "redshard/verify.hpp"

namespace {

using namespace redshard;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kViolated = 2;
constexpr int kInternal = 3;

struct RunArgs {
  std::string config;
  std::string policy;
  std::optional<double> rho;
  std::size_t rep = 0;
  std::optional<std::uint64_t> seed;
  std::string trace;
};

int cmd_run(const RunArgs& a) {
  ExperimentConfig cfg = load_experiment(a.config);
  if (a.seed) cfg.seed = *a.seed;

  PolicyEntry entry = cfg.policies.front();
  if (!a.policy.empty()) {
    bool found = false;
    for (const auto& p : cfg.policies)
      if (p.label == a.policy) entry = p, found = true;
    if (!found) entry = PolicyEntry{PolicySpec{parse_policy_id(a.policy)}, {}, a.policy};
  }

  ReplicationPlan plan;
  plan.workload = cfg.workload;
  plan.sim.threads = cfg.threads;
  plan.sim.dist = cfg.dist;
  plan.sim.policy = entry.spec;
  plan.sim.record_snapshots = !a.trace.empty();
  plan.reps = a.rep + 1;
  plan.resample_arrivals = cfg.resample_arrivals;
  plan.pad_distance = entry.pad_distance;
  plan.base_seed = derive_seed(cfg.seed, 0);
  double rho = 0.0;
  if (cfg.workload.mode == WorkloadSpec::Mode::kStochastic) {
    rho = a.rho ? *a.rho
                : (cfg.rho_grid.empty() ? traffic_intensity(cfg.workload, cfg.threads, cfg.dist,
                                                            cfg.intensity)
                                        : cfg.rho_grid.front());
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("--rho: must lie in (0, 1)");
    plan.workload.lambda =
        solve_lambda_for_rho(cfg.workload, cfg.threads, cfg.dist, cfg.intensity, rho);
    for (std::size_t i = 0; i < cfg.rho_grid.size(); ++i)
      if (cfg.rho_grid[i] == rho) plan.base_seed = derive_seed(cfg.seed, i);
  }

  auto requests = replication_workload(plan, a.rep);
  SimConfig sim = plan.sim;
  sim.seed = replication_sim_seed(plan, a.rep);
  Trace trace = simulate(requests, sim);

  std::cout << std::setprecision(10) << "policy=" << entry.label << " rho=" << rho
            << " lambda=" << plan.workload.lambda << " requests=" << requests.size()
            << " L=" << cfg.threads << " rep=" << a.rep << '\n'
            << "mean_flow_time=" << average_flow_time(trace)
            << " departures=" << trace.chunk_departures.size() << " events=" << trace.events
            << " preempted=" << trace.totals.preempted << " terminated=" << trace.totals.terminated
            << '\n';
  if (!a.trace.empty()) {
    std::ofstream out(a.trace);
    if (!out) throw ConfigError("--trace: cannot write '" + a.trace + "'");
    write_trace_jsonl(trace, out);
  }
  return kOk;
}

struct SweepArgs {
  std::string config;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
};

int cmd_sweep(const SweepArgs& a) {
  ExperimentConfig cfg = load_experiment(a.config);
  if (a.reps) cfg.reps = *a.reps;
  if (a.seed) cfg.seed = *a.seed;
  if (a.output) cfg.output = *a.output;
  validate(cfg);
  SweepResult result = run_experiment(cfg);
  if (cfg.output.empty()) {
    write_csv(result, cfg, std::cout);
  } else {
    std::cout << "wrote " << result.cells.size() + result.bounds.size() << " rows to "
              << cfg.output << '\n';
  }
  return kOk;
}

struct ReproduceArgs {
  std::string figure;
  bool full_scale = false;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> requests;
  std::uint64_t seed = 1;
  std::string output;
};

int cmd_reproduce(const ReproduceArgs& a) {
  ReproduceOptions opts;
  opts.full_scale = a.full_scale;
  opts.reps = a.reps;
  opts.requests = a.requests;
  opts.seed = a.seed;
  FigureReport report = reproduce(a.figure, opts);
  print_report(report, std::cout);
  if (!a.output.empty()) {
    ExperimentConfig cfg = report.config;
    std::ofstream out(a.output);
    if (!out) throw ConfigError("--output: cannot write '" + a.output + "'");
    write_csv(report.result, cfg, out);
  }
  return report.ok() ? kOk : kViolated;
}

struct BoundsArgs {
  int threads = 3;
  int d_min = 3;
  std::string dist = R"({"kind":"exponential","mu":50})";
};

int cmd_bounds(const BoundsArgs& a) {
  if (a.threads < 1) throw ConfigError("--L: must be >= 1");
  if (a.d_min < 1) throw ConfigError("--dmin: must be >= 1");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(a.dist);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("--dist: ") + e.what());
  }
  DownloadDist dist = parse_dist(doc, "--dist");
  std::cout << "L=" << a.threads << " d_min=" << a.d_min << " dist=" << describe(dist) << '\n';
  for (const auto& row : bound_table(a.threads, a.d_min, dist)) {
    std::cout << "  " << std::left << std::setw(30) << to_string(row.setting);
    if (row.value)
      std::cout << std::setprecision(6) << *row.value;
    else
      std::cout << "n/a (" << row.note << ")";
    std::cout << '\n';
  }
  if (is_exponential(dist)) {
    double mu = 1.0 / mean(dist);
    auto est = harmonic_log_estimate(a.threads, a.d_min, mu);
    std::cout << "  harmonic-log estimate (display only): "
              << (est ? std::to_string(*est) : std::string("none, d_min >= L")) << '\n';
  }
  return kOk;
}

struct VerifyArgs {
  std::vector<std::string> lemmas;
  std::size_t runs = 1000;
  std::size_t reps = 10000;
  std::uint64_t seed = 1;
};

int cmd_verify(const VerifyArgs& a) {
  std::vector<Lemma> lemmas;
  for (const auto& name : a.lemmas) {
    try {
      lemmas.push_back(parse_lemma(name));
    } catch (const InvalidSpec& e) {
      throw ConfigError(std::string("--lemma: ") + e.what());
    }
  }
  if (lemmas.empty()) lemmas = all_lemmas();

  bool all_pass = true;
  for (Lemma lemma : lemmas) {
    bool pass = true;
    std::cout << to_string(lemma) << ":\n";
    switch (lemma) {
      case Lemma::kInvariance: {
        auto policies = invariance_policies();
        auto r = check_departure_invariance(policies, invariance_plan(a.reps, a.seed));
        pass = r.pass;
        std::cout << "  reps=" << r.reps << " j<=" << r.max_j << " max |z|=" << r.max_z << '\n';
        break;
      }
      case Lemma::kDominanceNp:
      case Lemma::kDominanceRedundancy:
      case Lemma::kDominanceNlu:
        for (const auto& r : run_dominance_suite(lemma, a.runs, a.seed)) {
          pass = pass && r.pass();
          std::cout << "  " << r.mode << ": runs=" << r.runs << " violations=" << r.failures
                    << " negative-control=" << (r.fixture_rejected ? "rejected" : "ACCEPTED");
          if (r.experimental_runs > 0) std::cout << " (experimental coupling)";
          std::cout << '\n';
          if (r.first_violation)
            std::cout << "    first violation: seed=" << *r.first_failing_seed
                      << " t=" << r.first_violation->time << " j=" << r.first_violation->j
                      << " lhs=" << r.first_violation->lhs << " rhs=" << r.first_violation->rhs
                      << '\n';
        }
        break;
      case Lemma::kOrderNlu:
      case Lemma::kOrderNsu: {
        auto q = lemma == Lemma::kOrderNlu ? order_nlu_query(a.reps, a.seed)
                                           : order_nsu_query(a.reps, a.seed);
        auto r = empirical_stochastic_order(q);
        pass = r.pass;
        std::cout << "  " << to_string(q.policy_a.id) << " vs " << to_string(q.policy_b.id)
                  << " reps=" << r.reps << '\n';
        for (const auto& c : r.checks)
          std::cout << "    j=" << c.j << " mean " << c.mean_a << " vs " << c.mean_b
                    << " max excess=" << c.max_excess << (c.pass ? "" : "  FAIL") << '\n';
        break;
      }
    }
    std::cout << "  -> " << (pass ? "pass" : "FAIL") << '\n';
    all_pass = all_pass && pass;
  }
  return all_pass ? kOk : kViolated;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"redshard: scheduling simulator for redundant chunk retrieval"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "simulate one sample path");
  run_cmd->add_option("config", run.config, "experiment JSON")->required();
  run_cmd->add_option("--policy", run.policy, "policy id or label (default: first in config)");
  run_cmd->add_option("--rho", run.rho, "traffic intensity (default: first grid point)");
  run_cmd->add_option("--rep", run.rep, "replication index");
  run_cmd->add_option("--seed", run.seed, "override config seed");
  run_cmd->add_option("--trace", run.trace, "write JSON-lines trace here");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a config over its rho grid, write CSV");
  sweep_cmd->add_option("config", sweep.config, "experiment JSON")->required();
  sweep_cmd->add_option("--reps", sweep.reps, "override reps");
  sweep_cmd->add_option("--seed", sweep.seed, "override seed");
  sweep_cmd->add_option("--output", sweep.output, "override output path (empty: stdout)");

  ReproduceArgs repro;
  auto* repro_cmd = app.add_subcommand("reproduce", "run a built-in figure setup");
  repro_cmd->add_option("figure", repro.figure, "fig2a, fig2b, fig2c, fig2d, fig5 or fig6")
      ->required()
      ->check(CLI::IsMember(figure_names()));
  repro_cmd->add_flag("--paper-scale", repro.full_scale, "N=3000, reps=100, rho 0.1..0.9");
  repro_cmd->add_option("--reps", repro.reps, "override replications");
  repro_cmd->add_option("--requests", repro.requests, "override N");
  repro_cmd->add_option("--seed", repro.seed, "base seed");
  repro_cmd->add_option("--output", repro.output, "also write CSV here");

  BoundsArgs bounds;
  auto* bounds_cmd = app.add_subcommand("bounds", "print gap bounds for every setting");
  bounds_cmd->add_option("--L", bounds.threads, "threads");
  bounds_cmd->add_option("--dmin", bounds.d_min, "minimum code distance");
  bounds_cmd->add_option("--dist", bounds.dist, "distribution JSON");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "run lemma checks");
  verify_cmd->add_option("--lemma", verify.lemmas,
                         "invariance, dominance-np, dominance-redundancy, dominance-nlu, "
                         "order-nlu, order-nsu (repeatable; default all)");
  verify_cmd->add_option("--runs", verify.runs, "coupled runs per dominance suite");
  verify_cmd->add_option("--reps", verify.reps, "replications for invariance and order checks");
  verify_cmd->add_option("--seed", verify.seed, "base seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*sweep_cmd) return cmd_sweep(sweep);
    if (*repro_cmd) return cmd_reproduce(repro);
    if (*bounds_cmd) return cmd_bounds(bounds);
    if (*verify_cmd) return cmd_verify(verify);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidSpec& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidDistribution& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const WrongWorkload& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}
