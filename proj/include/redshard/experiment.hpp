#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "redshard/analysis.hpp"
#include "redshard/engine.hpp"
#include "redshard/policies.hpp"
#include "redshard/workload.hpp"

namespace redshard {

struct PolicyEntry {
  PolicySpec spec;
  std::optional<int> pad_distance;  // run on codes padded to this distance
  std::string label;                // CSV policy column
};

struct ExperimentConfig {
  WorkloadSpec workload;
  bool resample_arrivals = true;
  int threads = 1;
  DownloadDist dist = Exponential{1.0};
  std::vector<double> rho_grid;
  std::vector<PolicyEntry> policies;
  IntensityVariant intensity = IntensityVariant::kChunkRate;
  std::vector<GapSetting> bounds;  // bound rows to emit
  std::size_t reps = 2;
  std::uint64_t seed = 1;
  std::string output;
};

/// Parses and validates; throws ConfigError naming the offending field.
ExperimentConfig parse_experiment(const nlohmann::json& doc);
ExperimentConfig load_experiment(const std::string& path);
void validate(const ExperimentConfig& cfg);

DownloadDist parse_dist(const nlohmann::json& doc, const std::string& where = "sim.dist");

struct SweepCell {
  double rho = 0.0;
  double lambda = 0.0;
  std::string label;
  Summary summary;
  std::vector<double> samples;  // per-replication average flow times
};

struct SweepResult {
  std::vector<SweepCell> cells;  // (rho, policy) order
  std::vector<BoundRow> bounds;
  int d_min = 0;
};

/// Policies at one rho share a base seed, so they see common random numbers.
SweepResult run_sweep(const ExperimentConfig& cfg);

/// Header `rho,policy,mean_flow_time,ci_low,ci_high,reps,seed`; bound rows
/// use rho "*" and policy "bound:<setting>".
void write_csv(const SweepResult& result, const ExperimentConfig& cfg, std::ostream& out);

/// Runs the sweep and writes cfg.output through a temporary file; nothing
/// is left behind if the run aborts.
SweepResult run_experiment(const ExperimentConfig& cfg);

const SweepCell& find_cell(const SweepResult& r, double rho, const std::string& label);

/// Mean and standard error of per-replication differences upper - lower at
/// one rho (both cells share common random numbers).
Summary paired_difference(const SweepResult& r, double rho, const std::string& upper,
                          const std::string& lower);

struct GapCheck {
  std::string upper;
  std::string lower;
  GapSetting setting;
  double bound = 0.0;
  double gap = 0.0;     // max over rho of mean(upper) - mean(lower)
  double std_err = 0.0; // pooled, at the maximising rho
  double rho = 0.0;
  Verdict verdict = Verdict::kWithin;
};

GapCheck max_gap(const SweepResult& r, const ExperimentConfig& cfg, const std::string& upper,
                 const std::string& lower, GapSetting setting);

struct OrderingCheck {
  std::string description;
  bool pass = true;
};

struct FigureReport {
  std::string figure;
  ExperimentConfig config;
  SweepResult result;
  std::vector<GapCheck> gaps;
  std::vector<OrderingCheck> orderings;
  bool ok() const;
};

struct ReproduceOptions {
  bool full_scale = false;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> requests;
  std::optional<std::vector<double>> rho_grid;
  std::uint64_t seed = 1;
};

std::vector<std::string> figure_names();
/// Built-in setup for one of fig2a, fig2b, fig2c, fig2d, fig5, fig6.
ExperimentConfig figure_config(const std::string& figure, const ReproduceOptions& opts);
FigureReport reproduce(const std::string& figure, const ReproduceOptions& opts);
void print_report(const FigureReport& report, std::ostream& out);

}  // namespace redshard
