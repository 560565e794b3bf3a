#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "redshard/distributions.hpp"
#include "redshard/engine.hpp"
#include "redshard/policies.hpp"
#include "redshard/workload.hpp"

namespace redshard {

struct HistoryPoint {
  double time = 0.0;
  std::vector<int> remaining;     // sorted descending
  std::vector<int> differential;  // alpha - delta, sorted descending
  std::size_t departures = 0;
};

struct CoupledHistories {
  enum class Coupling { kSharedDepartureInstants, kPerThreadStreams };
  Coupling coupling = Coupling::kSharedDepartureInstants;
  int threads = 1;
  std::vector<double> arrivals;  // shared by both sides
  std::vector<HistoryPoint> a;
  std::vector<HistoryPoint> b;
  bool experimental = false;
};

struct CoupledRun {
  PolicySpec policy_a;
  PolicySpec policy_b;
  std::vector<Request> workload;
  std::optional<int> pad_b;  // side b runs on codes padded to this distance
  int threads = 1;
  DownloadDist dist = Exponential{1.0};
  std::uint64_t seed = 1;
};

/// One Poisson clock at rate L*mu; each tick departs, on each side, the
/// busy chunk picked by a shared uniform. Throws DistMismatch unless the
/// law is exponential.
CoupledHistories coupled_departure_run(const CoupledRun& run);

/// Per-thread exponential tick streams. Side a uses a tick only if its
/// thread is busy; side b uses it unless all of its threads are idle.
CoupledHistories coupled_thread_stream_run(const CoupledRun& run);

struct DominanceMode {
  enum class Kind { kDifferentialVsRemaining, kRemainingOffset, kTotalLMinus1, kMixed2LMinus1 };
  Kind kind = Kind::kDifferentialVsRemaining;
  long long offset = 0;  // kRemainingOffset only

  static DominanceMode differential_vs_remaining() { return {Kind::kDifferentialVsRemaining, 0}; }
  static DominanceMode remaining_offset(long long c) { return {Kind::kRemainingOffset, c}; }
  static DominanceMode total_L_minus_1() { return {Kind::kTotalLMinus1, 0}; }
  static DominanceMode mixed_2L_minus_1() { return {Kind::kMixed2LMinus1, 0}; }
};

std::string to_string(const DominanceMode& mode);

struct DominanceViolation {
  std::size_t index = 0;
  double time = 0.0;
  std::size_t j = 1;
  long long lhs = 0;
  long long rhs = 0;
};

struct DominanceReport {
  bool pass = true;
  std::size_t points = 0;
  std::optional<DominanceViolation> first_violation;
};

/// Exact integer check at every aligned point and every j. Side a plays
/// alpha (and delta), side b plays beta. Throws MisalignedHistories.
DominanceReport check_dominance(const CoupledHistories& h, const DominanceMode& mode);

/// Smallest history pair that breaks `mode`; a check against it must fail.
CoupledHistories violation_fixture(const DominanceMode& mode, int threads);

enum class DistanceRegime { kAtLeastThreads, kBelowThreads, kAny };

/// Random explicit workload for coupled runs: up to `max_requests`
/// requests, k in [1, 4], arrivals at a busy rate.
std::vector<Request> random_coupling_workload(std::uint64_t seed, std::size_t max_requests,
                                              int threads, DistanceRegime regime);

struct OrderCheck {
  std::size_t j = 0;
  bool pass = true;
  double max_excess = 0.0;  // max over grid of P_a - P_b - 3 se
  double mean_a = 0.0;
  double mean_b = 0.0;
};

struct OrderReport {
  bool pass = true;
  std::size_t reps = 0;
  std::vector<OrderCheck> checks;
};

struct StochasticOrderQuery {
  PolicySpec policy_a;
  PolicySpec policy_b;
  ReplicationPlan plan;  // workload, L, dist, reps, seed; plan.sim.policy is ignored
  std::vector<std::size_t> j_set;
};

/// Checks P(t_j > x) under a is at most the same under b plus 3 binomial
/// standard errors on a 50-point grid. Requires reps >= 10^4.
OrderReport empirical_stochastic_order(const StochasticOrderQuery& q);

struct InvarianceReport {
  bool pass = true;
  std::size_t reps = 0;
  std::size_t max_j = 0;
  std::vector<PolicyId> policies;
  std::vector<std::vector<double>> means;  // [policy][j-1]
  double max_z = 0.0;                      // max |diff| / pooled se
};

/// Compares mean t_j across work-conserving policies for j up to 20.
/// Throws PreconditionViolated on a non-work-conserving policy or a
/// workload with d_min < L; DistMismatch for non-exponential laws.
InvarianceReport check_departure_invariance(std::span<const PolicySpec> policies,
                                            const ReplicationPlan& plan);

enum class Lemma {
  kInvariance,
  kDominanceNp,
  kDominanceRedundancy,
  kDominanceNlu,
  kOrderNlu,
  kOrderNsu,
};

/// "invariance", "dominance-np", "dominance-redundancy", "dominance-nlu",
/// "order-nlu", "order-nsu". Throws InvalidSpec.
Lemma parse_lemma(std::string_view text);
std::string to_string(Lemma lemma);
std::vector<Lemma> all_lemmas();

/// Outcome of many coupled runs against one dominance mode.
struct DominanceSuiteReport {
  std::string mode;
  std::size_t runs = 0;
  std::size_t failures = 0;
  std::size_t experimental_runs = 0;
  std::optional<std::uint64_t> first_failing_seed;
  std::optional<DominanceViolation> first_violation;
  bool fixture_rejected = false;  // negative control failed as it must
  bool pass() const { return failures == 0 && fixture_rejected; }
};

/// Randomized coupled runs (N <= 50, L in 2..6) for a dominance lemma:
///   dominance-np: SEDPT_R vs SERPT_R, shared departure instants, d_min >= L
///   dominance-redundancy: SERPT_R vs SERPT_R on padded codes, offset L - d_min
///   dominance-nlu: SEDPT_NR vs the virtual bound, total and mixed modes
std::vector<DominanceSuiteReport> run_dominance_suite(Lemma lemma, std::size_t runs,
                                                      std::uint64_t seed);

/// SERPT_R, SEDPT_R and FCFS_R on an exponential workload with d_min >= L.
ReplicationPlan invariance_plan(std::size_t reps, std::uint64_t seed);
std::vector<PolicySpec> invariance_policies();

/// NLU: SEDPT_NR vs the forced-switch adversary under a shifted
/// exponential, all threads busy. NSU: SEDPT_R vs non-preemptive SEDPT_WCR under an
/// exponential mixture, k = 1 and d_min >= L. Both use j in {1, 5, 10}.
StochasticOrderQuery order_nlu_query(std::size_t reps, std::uint64_t seed);
StochasticOrderQuery order_nsu_query(std::size_t reps, std::uint64_t seed);

}  // namespace redshard
