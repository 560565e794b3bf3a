#include "redshard/engine.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <queue>
#include <string>

#include "json.hpp"

#include "redshard/errors.hpp"
#include "redshard/rng.hpp"

namespace redshard {

namespace {

struct CompletionEvent {
  double time;
  int thread;
  std::uint64_t generation;
  // Earliest time first, then lowest thread id.
  bool operator>(const CompletionEvent& o) const {
    return std::tie(time, thread) > std::tie(o.time, o.thread);
  }
};

using EventQueue =
    std::priority_queue<CompletionEvent, std::vector<CompletionEvent>, std::greater<>>;

class ServiceDraws {
 public:
  ServiceDraws(const DownloadDist& dist, std::uint64_t seed, int threads) : dist_(dist) {
    for (int l = 0; l < threads; ++l)
      streams_.emplace_back(seed, label(StreamLabel::kService, static_cast<std::uint64_t>(l)));
  }
  double draw(int thread) { return sample(dist_, streams_[thread]); }

 private:
  const DownloadDist& dist_;
  std::vector<RandomStream> streams_;
};

Trace empty_trace(std::span<const Request> workload) {
  Trace trace;
  trace.arrivals.reserve(workload.size());
  for (const auto& r : workload) trace.arrivals.push_back(r.arrival);
  trace.completions.assign(workload.size(), std::nullopt);
  return trace;
}

void record_arrival(Trace& trace, const Request& r) {
  trace.chunk_task_arrivals.insert(trace.chunk_task_arrivals.end(), r.k, r.arrival);
}

// Pops stale entries; returns the next live completion time, if any.
std::optional<double> next_completion(EventQueue& queue,
                                      const std::vector<std::uint64_t>& generation) {
  while (!queue.empty() && queue.top().generation != generation[queue.top().thread]) queue.pop();
  if (queue.empty()) return std::nullopt;
  return queue.top().time;
}

Trace simulate_virtual(std::span<const Request> workload, const SimConfig& cfg) {
  Trace trace = empty_trace(workload);
  VirtualBoundState state(workload);
  ServiceDraws draws(cfg.dist, cfg.seed, cfg.threads);
  EventQueue queue;
  std::vector<std::uint64_t> generation(cfg.threads, 0);
  bool running = false;
  std::size_t next_arrival = 0;
  bool first = true;

  auto start_thread = [&](int l, double now) {
    ++generation[l];
    queue.push({now + draws.draw(l), l, generation[l]});
  };

  while (next_arrival < workload.size() || !state.empty()) {
    if (cfg.stop_after_departures && trace.chunk_departures.size() >= cfg.stop_after_departures)
      break;
    auto tc = running ? next_completion(queue, generation) : std::nullopt;
    double ta = next_arrival < workload.size() ? workload[next_arrival].arrival
                                               : std::numeric_limits<double>::infinity();
    if (!tc && std::isinf(ta)) throw SimulationStalled("virtual bound run has no pending event");
    double now = tc ? std::min(*tc, ta) : ta;
    bool arrived = false;

    while (tc && *tc == now && running) {
      CompletionEvent ev = queue.top();
      queue.pop();
      ++trace.events;
      auto credit = state.credit_departure();
      trace.chunk_departures.push_back(now);
      trace.departure_requests.push_back(credit->request);
      ++trace.totals.downloaded;
      if (credit->completed) trace.completions[credit->request] = now;
      if (state.empty()) {
        // Nothing left to credit: all threads stop, partial work is lost.
        for (auto& g : generation) ++g;
        running = false;
      } else {
        start_thread(ev.thread, now);
        ++trace.totals.started;
      }
      tc = running ? next_completion(queue, generation) : std::nullopt;
    }
    while (next_arrival < workload.size() && workload[next_arrival].arrival == now) {
      const auto& r = workload[next_arrival++];
      ++trace.events;
      state.arrive(r.id);
      record_arrival(trace, r);
      arrived = true;
    }
    if (trace.events > cfg.max_events)
      throw EventCapExceeded("more than " + std::to_string(cfg.max_events) + " events");
    if (arrived && !running && !state.empty()) {
      for (int l = 0; l < cfg.threads; ++l) start_thread(l, now);
      trace.totals.started += cfg.threads;
      running = true;
    }
    if (cfg.record_snapshots) {
      auto rem = state.remaining_vector();
      Trigger trig = first ? Trigger::kStart : (arrived ? Trigger::kArrival : Trigger::kCompletion);
      trace.snapshots.push_back(
          {now, trig, rem, rem, running ? cfg.threads : 0, trace.chunk_departures.size()});
    }
    first = false;
  }
  return trace;
}

SnapshotDigest digest(const SystemSnapshot& snap, Trigger trigger) {
  return {snap.now,
          trigger,
          state_vector(snap, VectorKind::kRemaining),
          state_vector(snap, VectorKind::kDifferential),
          snap.busy_threads(),
          snap.departures};
}

}  // namespace

void validate(const SimConfig& cfg) {
  if (cfg.threads < 1) throw InvalidSpec("SimConfig: L must be >= 1");
  if (cfg.max_events == 0) throw InvalidSpec("SimConfig: max_events must be > 0");
  redshard::validate(cfg.dist);
}

Trace simulate(std::span<const Request> workload, const SimConfig& cfg) {
  validate(cfg);
  validate_requests(workload);
  auto policy = make_policy(cfg.policy);
  policy->check_workload(workload, cfg.threads);
  if (policy->bound_only()) return simulate_virtual(workload, cfg);

  Trace trace = empty_trace(workload);
  SystemState state(workload, cfg.threads);
  ServiceDraws draws(cfg.dist, cfg.seed, cfg.threads);
  EventQueue queue;
  std::vector<std::uint64_t> generation(cfg.threads, 0);
  std::size_t next_arrival = 0;
  bool first = true;
  auto fresh = [&](int thread) { return draws.draw(thread); };

  while (!state.all_complete()) {
    if (cfg.stop_after_departures && trace.chunk_departures.size() >= cfg.stop_after_departures)
      break;
    auto tc = next_completion(queue, generation);
    double ta = next_arrival < workload.size() ? workload[next_arrival].arrival
                                               : std::numeric_limits<double>::infinity();
    if (!tc && std::isinf(ta))
      throw SimulationStalled(policy->name() + " left unfinished requests with no pending event");
    double now = tc ? std::min(*tc, ta) : ta;
    state.set_time(now);
    bool arrived = false;

    while (tc && *tc == now) {
      CompletionEvent ev = queue.top();
      queue.pop();
      ++trace.events;
      ++generation[ev.thread];
      auto done = state.complete(ev.thread);
      trace.chunk_departures.push_back(now);
      trace.departure_requests.push_back(done.request);
      if (done.request_completed) {
        trace.completions[done.request] = now;
        for (int l : done.terminated_threads) ++generation[l];
      }
      tc = next_completion(queue, generation);
    }
    while (next_arrival < workload.size() && workload[next_arrival].arrival == now) {
      const auto& r = workload[next_arrival++];
      ++trace.events;
      state.arrive(r.id);
      record_arrival(trace, r);
      arrived = true;
    }
    if (trace.events > cfg.max_events)
      throw EventCapExceeded("more than " + std::to_string(cfg.max_events) + " events");

    Trigger trigger = first ? Trigger::kStart : (arrived ? Trigger::kArrival : Trigger::kCompletion);
    first = false;
    auto batch = policy->decide(state.view(), trigger);
    auto applied = apply_directives(state, batch, policy->preemptive(), fresh);
    for (int l : applied.preempted) ++generation[l];
    for (int l : applied.started) {
      ++generation[l];
      queue.push({state.view().threads[l].completion_time(), l, generation[l]});
    }
    if (cfg.check_invariants) check_invariants(state.view());
    if (cfg.observer) cfg.observer(state.view(), trigger);
    if (cfg.record_snapshots) trace.snapshots.push_back(digest(state.view(), trigger));
  }
  trace.totals = state.totals();
  return trace;
}

double average_flow_time(const Trace& trace) {
  if (trace.arrivals.empty()) throw IncompleteTrace("trace has no requests");
  double sum = 0.0;
  for (std::size_t i = 0; i < trace.arrivals.size(); ++i) {
    if (!trace.completions[i])
      throw IncompleteTrace("request " + std::to_string(i) + " never completed");
    sum += *trace.completions[i] - trace.arrivals[i];
  }
  return sum / static_cast<double>(trace.arrivals.size());
}

void write_trace_jsonl(const Trace& trace, std::ostream& out) {
  static const char* kTrigger[] = {"start", "arrival", "completion"};
  for (const auto& s : trace.snapshots) {
    nlohmann::json line{{"t", s.time},
                        {"trigger", kTrigger[static_cast<int>(s.trigger)]},
                        {"remaining", s.remaining},
                        {"differential", s.differential},
                        {"busy", s.busy},
                        {"departures", s.departures}};
    out << line.dump() << '\n';
  }
}

Summary summarize(std::span<const double> samples) {
  Summary s;
  s.reps = samples.size();
  if (samples.empty()) return s;
  // Welford keeps the variance stable for 1e6-sample runs.
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  for (double x : samples) {
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  s.mean = mean;
  if (n > 1) s.std_err = std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  s.ci_low = mean - 1.96 * s.std_err;
  s.ci_high = mean + 1.96 * s.std_err;
  return s;
}

std::vector<Request> replication_workload(const ReplicationPlan& plan, std::size_t rep) {
  std::vector<Request> requests;
  if (plan.workload.mode == WorkloadSpec::Mode::kExplicit) {
    requests = plan.workload.requests;
  } else {
    std::size_t index = plan.resample_arrivals ? rep : 0;
    requests = generate_requests(plan.workload,
                                 derive_seed(plan.base_seed, index, label(StreamLabel::kWorkload)));
  }
  if (plan.pad_distance) requests = pad_codes(requests, *plan.pad_distance);
  return requests;
}

std::uint64_t replication_sim_seed(const ReplicationPlan& plan, std::size_t rep) {
  return derive_seed(plan.base_seed, rep, label(StreamLabel::kSimulation));
}

std::vector<double> replicate_flow_times(const ReplicationPlan& plan) {
  if (plan.reps < 2) throw InvalidSpec("replications: reps must be >= 2");
  validate(plan.workload);
  validate(plan.sim);
  return parallel_map<double>(plan.reps, [&](std::size_t rep) {
    SimConfig cfg = plan.sim;
    cfg.seed = replication_sim_seed(plan, rep);
    auto requests = replication_workload(plan, rep);
    return average_flow_time(simulate(requests, cfg));
  });
}

Summary run_replications(const ReplicationPlan& plan) {
  auto samples = replicate_flow_times(plan);
  return summarize(samples);
}

unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("REDSHARD_THREADS")) {
    char* end = nullptr;
    long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

}  // namespace redshard
