#include "redshard/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "redshard/errors.hpp"
#include "redshard/rng.hpp"

namespace redshard {

using nlohmann::json;

namespace {

const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(where + "." + key + ": missing");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + ": expected a number");
  return v.get<double>();
}

long long integer(const json& v, const std::string& where) {
  if (!v.is_number_integer() && !v.is_number_unsigned())
    throw ConfigError(where + ": expected an integer");
  return v.get<long long>();
}

bool boolean(const json& v, const std::string& where) {
  if (!v.is_boolean()) throw ConfigError(where + ": expected true or false");
  return v.get<bool>();
}

const json& array(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array");
  return v;
}

std::string idx(const std::string& where, std::size_t i) {
  return where + "[" + std::to_string(i) + "]";
}

// [[p, x], ...] pairs.
std::vector<std::pair<double, double>> number_pairs(const json& v, const std::string& where) {
  std::vector<std::pair<double, double>> out;
  const auto& arr = array(v, where);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& e = array(arr[i], idx(where, i));
    if (e.size() != 2) throw ConfigError(idx(where, i) + ": expected [probability, value]");
    out.emplace_back(number(e[0], idx(where, i) + "[0]"), number(e[1], idx(where, i) + "[1]"));
  }
  return out;
}

WorkloadSpec parse_workload(const json& w, bool& resample) {
  const std::string where = "workload";
  WorkloadSpec spec;
  std::string mode = "stochastic";
  if (w.contains("mode")) {
    if (!w["mode"].is_string()) throw ConfigError("workload.mode: expected a string");
    mode = w["mode"].get<std::string>();
  }
  if (w.contains("resample_arrivals"))
    resample = boolean(w["resample_arrivals"], "workload.resample_arrivals");
  if (mode == "explicit") {
    spec.mode = WorkloadSpec::Mode::kExplicit;
    const auto& reqs = array(require(w, "requests", where), "workload.requests");
    for (std::size_t i = 0; i < reqs.size(); ++i) {
      std::string at = idx("workload.requests", i);
      Request r;
      r.id = i;
      r.arrival = number(require(reqs[i], "arrival", at), at + ".arrival");
      r.k = static_cast<int>(integer(require(reqs[i], "k", at), at + ".k"));
      r.n = static_cast<int>(integer(require(reqs[i], "n", at), at + ".n"));
      spec.requests.push_back(r);
    }
    spec.count = spec.requests.size();
  } else if (mode == "stochastic") {
    spec.mode = WorkloadSpec::Mode::kStochastic;
    long long n = integer(require(w, "N", where), "workload.N");
    if (n < 1) throw ConfigError("workload.N: must be >= 1");
    spec.count = static_cast<std::size_t>(n);
    if (w.contains("lambda")) spec.lambda = number(w["lambda"], "workload.lambda");
    if (w.contains("arrival_mixture")) {
      spec.arrival_mixture.clear();
      for (auto [p, m] : number_pairs(w["arrival_mixture"], "workload.arrival_mixture"))
        spec.arrival_mixture.push_back({p, m});
    }
    const auto& mix = array(require(w, "code_mix", where), "workload.code_mix");
    for (std::size_t i = 0; i < mix.size(); ++i) {
      std::string at = idx("workload.code_mix", i);
      const auto& e = array(mix[i], at);
      if (e.size() != 2) throw ConfigError(at + ": expected [probability, [n, k]]");
      const auto& nk = array(e[1], at + "[1]");
      if (nk.size() != 2) throw ConfigError(at + "[1]: expected [n, k]");
      spec.code_mix.push_back({number(e[0], at + "[0]"),
                               static_cast<int>(integer(nk[0], at + "[1][0]")),
                               static_cast<int>(integer(nk[1], at + "[1][1]"))});
    }
  } else {
    throw ConfigError("workload.mode: expected 'stochastic' or 'explicit', got '" + mode + "'");
  }
  return spec;
}

PolicyEntry parse_policy(const json& v, const std::string& where, int threads) {
  PolicyEntry e;
  try {
    if (v.is_string()) {
      e.spec.id = parse_policy_id(v.get<std::string>());
    } else if (v.is_object()) {
      const auto& id = require(v, "id", where);
      if (!id.is_string()) throw ConfigError(where + ".id: expected a string");
      e.spec.id = parse_policy_id(id.get<std::string>());
      if (v.contains("epsilon")) e.spec.epsilon = number(v["epsilon"], where + ".epsilon");
      if (v.contains("seed"))
        e.spec.seed = static_cast<std::uint64_t>(integer(v["seed"], where + ".seed"));
      if (v.contains("pad_codes")) {
        const auto& pad = v["pad_codes"];
        if (pad.is_boolean()) {
          if (pad.get<bool>()) e.pad_distance = threads;
        } else {
          e.pad_distance = static_cast<int>(integer(pad, where + ".pad_codes"));
        }
      }
      if (v.contains("label")) {
        if (!v["label"].is_string()) throw ConfigError(where + ".label: expected a string");
        e.label = v["label"].get<std::string>();
      }
    } else {
      throw ConfigError(where + ": expected a policy id or object");
    }
  } catch (const InvalidSpec& ex) {
    throw ConfigError(where + ": " + ex.what());
  }
  if (e.label.empty()) e.label = to_string(e.spec.id) + (e.pad_distance ? "+padded" : "");
  return e;
}

std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

}  // namespace

DownloadDist parse_dist(const json& d, const std::string& where) {
  const auto& kind_v = require(d, "kind", where);
  if (!kind_v.is_string()) throw ConfigError(where + ".kind: expected a string");
  std::string kind = kind_v.get<std::string>();
  double mu = number(require(d, "mu", where), where + ".mu");
  try {
    if (kind == "exponential") return make_exponential(mu);
    if (kind == "shifted_exp") {
      double frac = number(require(d, "shift_frac", where), where + ".shift_frac");
      if (!(frac >= 0.0 && frac < 1.0)) throw ConfigError(where + ".shift_frac: must be in [0, 1)");
      return make_shifted_exponential(frac / mu, mu / (1.0 - frac));
    }
    if (kind == "exp_mixture") {
      std::vector<MixtureComponent> comps;
      for (auto [w, m] : number_pairs(require(d, "components", where), where + ".components"))
        comps.push_back({w, m * mu});
      return make_exponential_mixture(std::move(comps));
    }
  } catch (const InvalidDistribution& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ".kind: unknown distribution '" + kind + "'");
}

ExperimentConfig parse_experiment(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig cfg;
  cfg.workload = parse_workload(require(doc, "workload", "config"), cfg.resample_arrivals);
  const auto& sim = require(doc, "sim", "config");
  cfg.threads = static_cast<int>(integer(require(sim, "L", "sim"), "sim.L"));
  if (cfg.threads < 1) throw ConfigError("sim.L: must be >= 1");
  cfg.dist = parse_dist(require(sim, "dist", "sim"));

  const auto& sweep = require(doc, "sweep", "config");
  if (sweep.contains("rho_grid")) {
    for (std::size_t i = 0; const auto& v : array(sweep["rho_grid"], "sweep.rho_grid"))
      cfg.rho_grid.push_back(number(v, idx("sweep.rho_grid", i++)));
    if (cfg.rho_grid.empty()) throw ConfigError("sweep.rho_grid: must not be empty");
  }
  const auto& pols = array(require(sweep, "policies", "sweep"), "sweep.policies");
  for (std::size_t i = 0; i < pols.size(); ++i)
    cfg.policies.push_back(parse_policy(pols[i], idx("sweep.policies", i), cfg.threads));
  if (sweep.contains("intensity")) {
    const auto& v = sweep["intensity"];
    std::string s = v.is_string() ? v.get<std::string>() : "";
    if (s == "chunk_rate")
      cfg.intensity = IntensityVariant::kChunkRate;
    else if (s == "min_based")
      cfg.intensity = IntensityVariant::kMinBased;
    else
      throw ConfigError("sweep.intensity: expected 'chunk_rate' or 'min_based'");
  }
  if (doc.contains("bounds")) {
    for (std::size_t i = 0; const auto& v : array(doc["bounds"], "bounds")) {
      if (!v.is_string()) throw ConfigError(idx("bounds", i) + ": expected a string");
      try {
        cfg.bounds.push_back(parse_gap_setting(v.get<std::string>()));
      } catch (const UnsupportedSetting& e) {
        throw ConfigError(idx("bounds", i) + ": " + e.what());
      }
      ++i;
    }
  }
  long long reps = integer(require(doc, "reps", "config"), "reps");
  if (reps < 2) throw ConfigError("reps: must be >= 2");
  cfg.reps = static_cast<std::size_t>(reps);
  if (doc.contains("seed")) cfg.seed = static_cast<std::uint64_t>(integer(doc["seed"], "seed"));
  if (doc.contains("output")) {
    if (!doc["output"].is_string()) throw ConfigError("output: expected a path string");
    cfg.output = doc["output"].get<std::string>();
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_experiment(doc);
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.threads < 1) throw ConfigError("sim.L: must be >= 1");
  if (cfg.reps < 2) throw ConfigError("reps: must be >= 2");
  if (cfg.policies.empty()) throw ConfigError("sweep.policies: must not be empty");
  for (std::size_t i = 0; i < cfg.rho_grid.size(); ++i) {
    double r = cfg.rho_grid[i];
    if (!(r > 0.0 && r < 1.0)) throw ConfigError(idx("sweep.rho_grid", i) + ": must lie in (0, 1)");
    if (i > 0 && !(r > cfg.rho_grid[i - 1]))
      throw ConfigError("sweep.rho_grid: must be strictly increasing");
  }
  bool stochastic = cfg.workload.mode == WorkloadSpec::Mode::kStochastic;
  if (stochastic && cfg.rho_grid.empty() && !(cfg.workload.lambda > 0.0))
    throw ConfigError("workload.lambda: required (> 0) when sweep.rho_grid is absent");
  if (!stochastic && !cfg.rho_grid.empty())
    throw ConfigError("sweep.rho_grid: not allowed with an explicit workload");
  WorkloadSpec probe = cfg.workload;
  if (stochastic && !(probe.lambda > 0.0)) probe.lambda = 1.0;
  try {
    validate(probe);
  } catch (const Error& e) {
    throw ConfigError(std::string("workload: ") + e.what());
  }
  for (std::size_t i = 0; i < cfg.policies.size(); ++i) {
    const auto& p = cfg.policies[i];
    if (p.pad_distance && *p.pad_distance < 1)
      throw ConfigError(idx("sweep.policies", i) + ".pad_codes: distance must be >= 1");
    if (p.spec.id == PolicyId::kScriptQ1 || p.spec.id == PolicyId::kScriptQ2) {
      try {
        if (!stochastic) make_policy(p.spec)->check_workload(cfg.workload.requests, cfg.threads);
        else throw WrongWorkload(to_string(p.spec.id) + " needs its explicit workload");
      } catch (const WrongWorkload& e) {
        throw ConfigError(idx("sweep.policies", i) + ": " + e.what());
      }
    }
  }
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  validate(cfg);
  SweepResult result;
  std::vector<std::pair<double, double>> points;  // (rho, lambda)
  bool stochastic = cfg.workload.mode == WorkloadSpec::Mode::kStochastic;
  if (!stochastic) {
    points.emplace_back(0.0, 0.0);
  } else if (cfg.rho_grid.empty()) {
    points.emplace_back(traffic_intensity(cfg.workload, cfg.threads, cfg.dist, cfg.intensity),
                        cfg.workload.lambda);
  } else {
    for (double rho : cfg.rho_grid)
      points.emplace_back(
          rho, solve_lambda_for_rho(cfg.workload, cfg.threads, cfg.dist, cfg.intensity, rho));
  }

  for (std::size_t p = 0; p < points.size(); ++p) {
    for (const auto& entry : cfg.policies) {
      ReplicationPlan plan;
      plan.workload = cfg.workload;
      if (stochastic) plan.workload.lambda = points[p].second;
      plan.sim.threads = cfg.threads;
      plan.sim.dist = cfg.dist;
      plan.sim.policy = entry.spec;
      plan.reps = cfg.reps;
      plan.resample_arrivals = cfg.resample_arrivals;
      plan.base_seed = derive_seed(cfg.seed, p);
      plan.pad_distance = entry.pad_distance;
      auto samples = replicate_flow_times(plan);
      result.cells.push_back(
          {points[p].first, points[p].second, entry.label, summarize(samples), samples});
    }
  }

  if (stochastic) {
    int d = std::numeric_limits<int>::max();
    for (const auto& c : cfg.workload.code_mix)
      if (c.probability > 0) d = std::min(d, c.n - c.k + 1);
    result.d_min = d;
  } else {
    result.d_min = min_code_distance(cfg.workload.requests);
  }
  for (GapSetting s : cfg.bounds) {
    try {
      result.bounds.push_back({s, gap_bound({s, cfg.threads, result.d_min, cfg.dist}), ""});
    } catch (const Error& e) {
      result.bounds.push_back({s, std::nullopt, e.what()});
    }
  }
  return result;
}

void write_csv(const SweepResult& result, const ExperimentConfig& cfg, std::ostream& out) {
  out << "rho,policy,mean_flow_time,ci_low,ci_high,reps,seed\n";
  for (const auto& c : result.cells) {
    out << format_double(c.rho) << ',' << c.label << ',' << format_double(c.summary.mean) << ','
        << format_double(c.summary.ci_low) << ',' << format_double(c.summary.ci_high) << ','
        << c.summary.reps << ',' << cfg.seed << '\n';
  }
  for (const auto& b : result.bounds) {
    if (!b.value) continue;
    std::string v = format_double(*b.value);
    out << "*,bound:" << to_string(b.setting) << ',' << v << ',' << v << ',' << v << ",0,"
        << cfg.seed << '\n';
  }
}

SweepResult run_experiment(const ExperimentConfig& cfg) {
  SweepResult result = run_sweep(cfg);
  if (cfg.output.empty()) return result;
  namespace fs = std::filesystem;
  fs::path target(cfg.output);
  fs::path tmp = target;
  tmp += ".partial";
  try {
    {
      std::ofstream out(tmp);
      if (!out) throw ConfigError("output: cannot write '" + tmp.string() + "'");
      write_csv(result, cfg, out);
      out.flush();
      if (!out) throw ConfigError("output: write to '" + tmp.string() + "' failed");
    }
    fs::rename(tmp, target);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
  return result;
}

const SweepCell& find_cell(const SweepResult& r, double rho, const std::string& label) {
  for (const auto& c : r.cells)
    if (c.rho == rho && c.label == label) return c;
  throw InvalidSpec("no sweep cell for policy '" + label + "' at rho " + format_double(rho));
}

Summary paired_difference(const SweepResult& r, double rho, const std::string& upper,
                          const std::string& lower) {
  const auto& a = find_cell(r, rho, upper).samples;
  const auto& b = find_cell(r, rho, lower).samples;
  if (a.size() != b.size()) throw InvalidSpec("paired_difference: replication counts differ");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return summarize(d);
}

GapCheck max_gap(const SweepResult& r, const ExperimentConfig& cfg, const std::string& upper,
                 const std::string& lower, GapSetting setting) {
  GapCheck g;
  g.upper = upper;
  g.lower = lower;
  g.setting = setting;
  g.bound = gap_bound({setting, cfg.threads, r.d_min, cfg.dist});
  bool first = true;
  for (const auto& c : r.cells) {
    if (c.label != upper) continue;
    const auto& lo = find_cell(r, c.rho, lower);
    double gap = c.summary.mean - lo.summary.mean;
    if (first || gap > g.gap) {
      g.gap = gap;
      g.std_err = std::hypot(c.summary.std_err, lo.summary.std_err);
      g.rho = c.rho;
      first = false;
    }
  }
  if (first) throw InvalidSpec("no sweep cells for policy '" + upper + "'");
  g.verdict = verdict(g.gap, g.std_err, g.bound);
  return g;
}

bool FigureReport::ok() const {
  for (const auto& g : gaps)
    if (g.verdict == Verdict::kViolated) return false;
  for (const auto& o : orderings)
    if (!o.pass) return false;
  return true;
}

std::vector<std::string> figure_names() {
  return {"fig2a", "fig2b", "fig2c", "fig2d", "fig5", "fig6"};
}

ExperimentConfig figure_config(const std::string& figure, const ReproduceOptions& opts) {
  ExperimentConfig cfg;
  cfg.workload.mode = WorkloadSpec::Mode::kStochastic;
  cfg.workload.count = opts.requests.value_or(opts.full_scale ? 3000 : 600);
  cfg.workload.arrival_mixture = {{0.99, 0.5}, {0.01, 50.5}};
  cfg.workload.code_mix = {{0.9, 3, 1}, {0.1, 14, 10}};
  cfg.reps = opts.reps.value_or(opts.full_scale ? 100 : 50);
  cfg.seed = opts.seed;
  if (opts.rho_grid) {
    cfg.rho_grid = *opts.rho_grid;
  } else if (opts.full_scale) {
    cfg.rho_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  } else {
    cfg.rho_grid = {0.3, 0.5, 0.7, 0.9};
  }
  const double mu = 50.0;
  cfg.dist = make_exponential(mu);
  auto entry = [](PolicyId id, std::optional<int> pad = std::nullopt) {
    PolicyEntry e;
    e.spec.id = id;
    e.pad_distance = pad;
    e.label = to_string(id) + (pad ? "+padded" : "");
    return e;
  };
  if (figure == "fig2a") {
    cfg.threads = 3;
    cfg.policies = {entry(PolicyId::kSerptRPreemptive), entry(PolicyId::kFcfsR)};
    cfg.bounds = {GapSetting::kExpPreemptiveDminGeL};
  } else if (figure == "fig2b") {
    cfg.threads = 3;
    cfg.policies = {entry(PolicyId::kSedptRNonpreemptive), entry(PolicyId::kSerptRPreemptive),
                    entry(PolicyId::kFcfsR)};
    cfg.bounds = {GapSetting::kExpNonpreemptiveDminGeL};
  } else if (figure == "fig2c") {
    cfg.threads = 5;
    cfg.policies = {entry(PolicyId::kSerptRPreemptive), entry(PolicyId::kSerptRPreemptive, 5),
                    entry(PolicyId::kFcfsR)};
    cfg.bounds = {GapSetting::kExpPreemptiveGeneral};
  } else if (figure == "fig2d") {
    cfg.threads = 5;
    cfg.policies = {entry(PolicyId::kSedptRNonpreemptive), entry(PolicyId::kSerptRPreemptive, 5),
                    entry(PolicyId::kFcfsR)};
    cfg.bounds = {GapSetting::kExpNonpreemptiveGeneral};
  } else if (figure == "fig5") {
    cfg.threads = 3;
    cfg.dist = make_shifted_exponential(0.4 / mu, mu / 0.6);
    cfg.policies = {entry(PolicyId::kSedptWcrPreemptive), entry(PolicyId::kSedptNrNonpreemptive),
                    entry(PolicyId::kSedptRNonpreemptive), entry(PolicyId::kFcfsWcr),
                    entry(PolicyId::kLowerBoundVirtual)};
    cfg.bounds = {GapSetting::kNluNonpreemptive, GapSetting::kNluPreemptive};
  } else if (figure == "fig6") {
    cfg.threads = 3;
    cfg.dist = make_exponential_mixture({{0.5, 0.4 * mu}, {0.5, 1.6 * mu}});
    cfg.workload.code_mix = {{1.0, 3, 1}};
    cfg.intensity = IntensityVariant::kMinBased;
    cfg.policies = {entry(PolicyId::kSedptRNonpreemptive),
                    entry(PolicyId::kSedptWcrNonpreemptive)};
    cfg.bounds = {GapSetting::kNsuRepetitionNonpreemptive};
  } else {
    throw ConfigError("figure: unknown '" + figure + "' (expected fig2a..fig2d, fig5, fig6)");
  }
  validate(cfg);
  return cfg;
}

namespace {

OrderingCheck never_worse(const SweepResult& r, const std::vector<double>& grid,
                          const std::string& better, const std::string& worse) {
  OrderingCheck o{better + " <= " + worse + " at every rho", true};
  for (double rho : grid)
    if (find_cell(r, rho, better).summary.mean > find_cell(r, rho, worse).summary.mean)
      o.pass = false;
  return o;
}

OrderingCheck gap_increasing(const SweepResult& r, const std::vector<double>& grid,
                             const std::string& better, const std::string& worse, double from) {
  OrderingCheck o{worse + " - " + better + " increasing for rho >= " + format_double(from) +
                      " (paired 95% intervals disjoint)",
                  true};
  std::optional<Summary> prev;
  for (double rho : grid) {
    if (rho < from) continue;
    Summary gap = paired_difference(r, rho, worse, better);
    if (prev && !(gap.ci_low > prev->ci_high)) o.pass = false;
    prev = gap;
  }
  return o;
}

}  // namespace

FigureReport reproduce(const std::string& figure, const ReproduceOptions& opts) {
  FigureReport rep;
  rep.figure = figure;
  rep.config = figure_config(figure, opts);
  rep.result = run_sweep(rep.config);
  const auto& cfg = rep.config;
  const auto& res = rep.result;
  const auto& grid = cfg.rho_grid;
  const std::string serpt = to_string(PolicyId::kSerptRPreemptive);
  const std::string padded = serpt + "+padded";
  const std::string sedpt = to_string(PolicyId::kSedptRNonpreemptive);
  const std::string fcfs = to_string(PolicyId::kFcfsR);
  const std::string wcr = to_string(PolicyId::kSedptWcrPreemptive);
  const std::string nr = to_string(PolicyId::kSedptNrNonpreemptive);
  const std::string lb = to_string(PolicyId::kLowerBoundVirtual);
  if (figure == "fig2a") {
    rep.orderings.push_back(never_worse(res, grid, serpt, fcfs));
  } else if (figure == "fig2b") {
    rep.gaps.push_back(max_gap(res, cfg, sedpt, serpt, GapSetting::kExpNonpreemptiveDminGeL));
  } else if (figure == "fig2c") {
    rep.gaps.push_back(max_gap(res, cfg, serpt, padded, GapSetting::kExpPreemptiveGeneral));
  } else if (figure == "fig2d") {
    rep.gaps.push_back(max_gap(res, cfg, sedpt, padded, GapSetting::kExpNonpreemptiveGeneral));
  } else if (figure == "fig5") {
    rep.gaps.push_back(max_gap(res, cfg, wcr, lb, GapSetting::kNluPreemptive));
    rep.gaps.push_back(max_gap(res, cfg, nr, lb, GapSetting::kNluNonpreemptive));
  } else if (figure == "fig6") {
    const std::string wcr_np = to_string(PolicyId::kSedptWcrNonpreemptive);
    rep.orderings.push_back(never_worse(res, grid, sedpt, wcr_np));
    rep.orderings.push_back(gap_increasing(res, grid, sedpt, wcr_np, 0.5));
  }
  return rep;
}

void print_report(const FigureReport& report, std::ostream& out) {
  out << report.figure << ": L=" << report.config.threads << " d_min=" << report.result.d_min
      << " dist=" << describe(report.config.dist) << " N=" << report.config.workload.count
      << " reps=" << report.config.reps << " seed=" << report.config.seed << '\n';
  for (const auto& c : report.result.cells)
    out << "  rho=" << format_double(c.rho) << "  " << std::left << std::setw(28) << c.label
        << " mean=" << format_double(c.summary.mean) << " se=" << format_double(c.summary.std_err)
        << '\n';
  for (const auto& g : report.gaps)
    out << "  gap " << g.upper << " - " << g.lower << ": " << format_double(g.gap)
        << " +- " << format_double(g.std_err) << " at rho=" << format_double(g.rho) << " vs "
        << to_string(g.setting) << " bound " << format_double(g.bound) << " -> "
        << to_string(g.verdict) << '\n';
  for (const auto& o : report.orderings)
    out << "  " << o.description << ": " << (o.pass ? "holds" : "fails") << '\n';
}

}  // namespace redshard
