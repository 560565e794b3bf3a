#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <thread>
#include <vector>

#include "redshard/distributions.hpp"
#include "redshard/model.hpp"
#include "redshard/policies.hpp"
#include "redshard/workload.hpp"

namespace redshard {

/// Called after every decision with the post-decision state.
using DecisionObserver = std::function<void(const SystemSnapshot&, Trigger)>;

struct SimConfig {
  int threads = 1;  // L
  DownloadDist dist = Exponential{1.0};
  PolicySpec policy;
  std::uint64_t seed = 1;
  bool record_snapshots = false;
  std::size_t max_events = 100'000'000;
  std::size_t stop_after_departures = 0;  // 0: run until every request completes
  bool check_invariants = false;
  DecisionObserver observer;
};

void validate(const SimConfig& cfg);

struct SnapshotDigest {
  double time = 0.0;
  Trigger trigger = Trigger::kStart;
  std::vector<int> remaining;
  std::vector<int> differential;
  int busy = 0;
  std::size_t departures = 0;
};

struct Trace {
  std::vector<double> arrivals;             // a_i by request id
  std::vector<double> chunk_task_arrivals;  // s_j: k_i instants at a_i
  std::vector<double> chunk_departures;     // t_j, redundant completions included
  std::vector<std::size_t> departure_requests;
  std::vector<std::optional<double>> completions;  // c_i by request id
  std::vector<SnapshotDigest> snapshots;
  StateTotals totals;
  std::size_t events = 0;
};

/// Runs one sample path. Service requirements come from per-thread streams
/// derived from cfg.seed, so equal seeds give bit-identical traces.
Trace simulate(std::span<const Request> workload, const SimConfig& cfg);

/// (1/N) * sum(c_i - a_i). Throws IncompleteTrace.
double average_flow_time(const Trace& trace);

void write_trace_jsonl(const Trace& trace, std::ostream& out);

struct Summary {
  double mean = 0.0;
  double std_err = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t reps = 0;
};

Summary summarize(std::span<const double> samples);

struct ReplicationPlan {
  WorkloadSpec workload;
  SimConfig sim;
  std::size_t reps = 2;
  bool resample_arrivals = true;
  std::uint64_t base_seed = 1;
  std::optional<int> pad_distance;  // raise every code distance to this
};

/// Workload used by replication `rep` (shared by every policy run with the
/// same base seed).
std::vector<Request> replication_workload(const ReplicationPlan& plan, std::size_t rep);
std::uint64_t replication_sim_seed(const ReplicationPlan& plan, std::size_t rep);

std::vector<double> replicate_flow_times(const ReplicationPlan& plan);
Summary run_replications(const ReplicationPlan& plan);

/// Worker count: hardware concurrency, capped by REDSHARD_THREADS.
unsigned worker_count();

/// Runs fn(i) for i in [0, count) across workers; results land in index
/// order. The first exception thrown by any task is rethrown.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, Fn fn) {
  std::vector<T> out(count);
  unsigned workers = std::min<std::size_t>(worker_count(), std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  if (workers <= 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace redshard
