#include "redshard/policies.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "redshard/errors.hpp"
#include "redshard/rng.hpp"

namespace redshard {

namespace {

struct IdName {
  PolicyId id;
  const char* name;
};

constexpr std::array<IdName, 13> kNames{{
    {PolicyId::kFcfsR, "FCFS_R"},
    {PolicyId::kFcfsWcr, "FCFS_WCR"},
    {PolicyId::kSerptRPreemptive, "SERPT_R_preemptive"},
    {PolicyId::kSerptRNonpreemptive, "SERPT_R_nonpreemptive"},
    {PolicyId::kSedptRNonpreemptive, "SEDPT_R_nonpreemptive"},
    {PolicyId::kSedptNrNonpreemptive, "SEDPT_NR_nonpreemptive"},
    {PolicyId::kSedptWcrPreemptive, "SEDPT_WCR_preemptive"},
    {PolicyId::kSedptWcrNonpreemptive, "SEDPT_WCR_nonpreemptive"},
    {PolicyId::kLowerBoundVirtual, "LOWER_BOUND_VIRTUAL"},
    {PolicyId::kScriptQ1, "SCRIPT_Q1"},
    {PolicyId::kScriptQ2, "SCRIPT_Q2"},
    {PolicyId::kAdvForcedSwitch, "ADV_FORCED_SWITCH"},
    {PolicyId::kAdvRandom, "ADV_RANDOM"},
}};

// Sort key for picking a request: (primary, arrival, id), smallest wins.
using Key = std::tuple<long long, double, std::size_t>;

// Working copy of the decision-relevant state. Directives are appended as
// the plan mutates the copy, so later choices see earlier ones.
class Planner {
 public:
  explicit Planner(const SystemSnapshot& s)
      : snap_(s), delta_(s.assigned_counts), fresh_(s.requests.size(), 0),
        paused_(s.requests.size()) {
    for (std::size_t r : s.active) {
      fresh_[r] = s.requests[r].available_fresh();
      paused_[r] = s.requests[r].paused;
      sort_paused(r);
    }
    for (const auto& t : s.threads)
      if (!t.busy) idle_.push_back(t.id);
  }

  const SystemSnapshot& snap() const { return snap_; }
  int delta(std::size_t r) const { return delta_[r]; }
  int alpha(std::size_t r) const { return snap_.requests[r].remaining(); }
  int assignable(std::size_t r) const {
    return fresh_[r] + static_cast<int>(paused_[r].size());
  }
  int fresh(std::size_t r) const { return fresh_[r]; }
  bool has_idle() const { return !idle_.empty(); }
  int idle_count() const { return static_cast<int>(idle_.size()); }

  void preempt(int thread) {
    const auto& slot = snap_.threads[thread];
    out_.push_back(Directive::preempt(thread));
    --delta_[slot.request];
    paused_[slot.request].push_back({slot.chunk, slot.elapsed(snap_.now), slot.requirement});
    sort_paused(slot.request);
    idle_.insert(std::lower_bound(idle_.begin(), idle_.end(), thread), thread);
  }

  // Gives the lowest idle thread a chunk of r: paused first, then fresh.
  void assign(std::size_t r) { assign(r, false); }
  void assign_fresh(std::size_t r) { assign(r, true); }

  std::vector<Directive> take() { return std::move(out_); }


 private:
  void assign(std::size_t r, bool fresh_only) {
    int thread = idle_.front();
    idle_.erase(idle_.begin());
    if (!fresh_only && !paused_[r].empty()) {
      out_.push_back(Directive::assign(thread, r, paused_[r].front().chunk));
      paused_[r].erase(paused_[r].begin());
    } else {
      if (fresh_[r] <= 0) throw std::logic_error("planner: no chunk to assign");
      out_.push_back(Directive::assign(thread, r));
      --fresh_[r];
    }
    ++delta_[r];
  }

  void sort_paused(std::size_t r) {
    std::sort(paused_[r].begin(), paused_[r].end(),
              [](const PausedAttempt& a, const PausedAttempt& b) {
                return std::tie(b.elapsed, a.chunk) < std::tie(a.elapsed, b.chunk);
              });
  }

  const SystemSnapshot& snap_;
  std::vector<int> delta_;
  std::vector<int> fresh_;
  std::vector<std::vector<PausedAttempt>> paused_;
  std::vector<int> idle_;
  std::vector<Directive> out_;
};

Key make_key(const SystemSnapshot& s, std::size_t r, long long primary) {
  return {primary, s.requests[r].request.arrival, r};
}

// Greedy fill: each idle thread in id order goes to the eligible request
// with the smallest key, re-evaluated after every assignment.
template <class KeyFn, class Eligible>
void greedy_fill(Planner& p, KeyFn key, Eligible eligible) {
  while (p.has_idle()) {
    std::optional<Key> best;
    std::size_t pick = 0;
    for (std::size_t r : p.snap().active) {
      if (p.assignable(r) <= 0 || !eligible(r)) continue;
      Key k = make_key(p.snap(), r, key(r));
      if (!best || k < *best) {
        best = k;
        pick = r;
      }
    }
    if (!best) return;
    p.assign(pick);
  }
}

auto by_alpha(const Planner& p) {
  return [&p](std::size_t r) -> long long { return p.alpha(r); };
}
auto by_differential(const Planner& p) {
  return [&p](std::size_t r) -> long long { return p.alpha(r) - p.delta(r); };
}
auto by_arrival() {
  return [](std::size_t) -> long long { return 0; };
}
auto any_request() {
  return [](std::size_t) { return true; };
}

// Busy threads of request r, most recently started first.
std::vector<int> newest_first(const SystemSnapshot& s, std::size_t r) {
  std::vector<int> out;
  for (const auto& t : s.threads)
    if (t.busy && t.request == r) out.push_back(t.id);
  std::sort(out.begin(), out.end(), [&](int a, int b) {
    return std::make_pair(s.threads[a].start, a) > std::make_pair(s.threads[b].start, b);
  });
  return out;
}

class GreedyPolicy : public Policy {
 public:
  enum class Order { kAlpha, kDifferential, kFcfs };
  GreedyPolicy(PolicySpec spec, Order order, bool cap_at_alpha)
      : Policy(spec), order_(order), cap_(cap_at_alpha) {}

  std::vector<Directive> decide(const SystemSnapshot& snap, Trigger) const override {
    Planner p(snap);
    auto eligible = [&](std::size_t r) { return !cap_ || p.alpha(r) - p.delta(r) > 0; };
    switch (order_) {
      case Order::kAlpha: greedy_fill(p, by_alpha(p), eligible); break;
      case Order::kDifferential: greedy_fill(p, by_differential(p), eligible); break;
      case Order::kFcfs: greedy_fill(p, by_arrival(), eligible); break;
    }
    return p.take();
  }
  bool preemptive() const override { return false; }
  bool work_conserving() const override { return !cap_; }

 private:
  Order order_;
  bool cap_;
};

// Re-plans the whole allocation at every event: requests in ascending
// alpha order each take up to n - downloaded threads.
class PreemptiveSerpt : public Policy {
 public:
  using Policy::Policy;

  std::vector<Directive> decide(const SystemSnapshot& snap, Trigger) const override {
    Planner p(snap);
    std::vector<std::size_t> order(snap.active.begin(), snap.active.end());
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return make_key(snap, a, p.alpha(a)) < make_key(snap, b, p.alpha(b));
    });
    std::vector<int> target(snap.requests.size(), 0);
    int budget = snap.thread_count();
    for (std::size_t r : order) {
      const auto& rs = snap.requests[r];
      target[r] = std::min(budget, rs.request.n - rs.downloaded);
      budget -= target[r];
    }
    for (std::size_t r : order) {
      int extra = p.delta(r) - target[r];
      if (extra <= 0) continue;
      auto threads = newest_first(snap, r);
      for (int i = 0; i < extra; ++i) p.preempt(threads[i]);
    }
    for (std::size_t r : order)
      while (p.delta(r) < target[r] && p.has_idle()) p.assign(r);
    return p.take();
  }
  bool preemptive() const override { return true; }
  bool work_conserving() const override { return true; }
};

// Non-redundant pass first, then redundant fill. When preemptive, redundant
// threads are preempted on arrival (and start) to cover non-redundant demand.
class WorkConservingRedundant : public Policy {
 public:
  WorkConservingRedundant(PolicySpec spec, bool fcfs, bool preempt = true)
      : Policy(spec), fcfs_(fcfs), preempt_(preempt) {}

  std::vector<Directive> decide(const SystemSnapshot& snap, Trigger trigger) const override {
    Planner p(snap);
    if (preempt_ && trigger != Trigger::kCompletion) {
      int demand = 0;
      std::vector<std::pair<double, int>> redundant;  // (start, thread)
      for (std::size_t r : snap.active) {
        int alpha = p.alpha(r), delta = p.delta(r);
        if (delta < alpha) demand += std::min(alpha - delta, p.assignable(r));
        if (delta > alpha) {
          auto threads = newest_first(snap, r);
          for (int i = 0; i < delta - alpha; ++i)
            redundant.emplace_back(snap.threads[threads[i]].start, threads[i]);
        }
      }
      int shortfall = demand - p.idle_count();
      if (shortfall > 0) {
        std::sort(redundant.begin(), redundant.end(), std::greater<>());
        int count = std::min<int>(shortfall, static_cast<int>(redundant.size()));
        for (int i = 0; i < count; ++i) p.preempt(redundant[i].second);
      }
    }
    auto nr = [&](std::size_t r) { return p.alpha(r) - p.delta(r) > 0; };
    if (fcfs_) {
      greedy_fill(p, by_arrival(), nr);
      greedy_fill(p, by_arrival(), any_request());
    } else {
      greedy_fill(p, by_differential(p), nr);
      greedy_fill(p, by_differential(p), any_request());
    }
    return p.take();
  }
  bool preemptive() const override { return preempt_; }
  bool work_conserving() const override { return true; }

 private:
  bool fcfs_;
  bool preempt_;
};

class VirtualBound : public Policy {
 public:
  using Policy::Policy;
  std::vector<Directive> decide(const SystemSnapshot&, Trigger) const override {
    throw std::logic_error("LOWER_BOUND_VIRTUAL is driven by its own engine path");
  }
  bool preemptive() const override { return false; }
  bool work_conserving() const override { return false; }
  bool bound_only() const override { return true; }
};

bool same_shape(const Request& r, double arrival, int k, int n) {
  return r.k == k && r.n == n && std::abs(r.arrival - arrival) <= 1e-12;
}

class ScriptQ1 : public Policy {
 public:
  using Policy::Policy;
  std::vector<Directive> decide(const SystemSnapshot& snap, Trigger trigger) const override {
    Planner p(snap);
    if (trigger == Trigger::kStart) {
      for (int i = 0; i < 2 && p.has_idle() && p.assignable(0) > 0; ++i) p.assign(0);
      for (int i = 0; i < 2 && p.has_idle() && p.assignable(1) > 0; ++i) p.assign(1);
      return p.take();
    }
    for (std::size_t r : {std::size_t{0}, std::size_t{1}}) {
      if (snap.requests[r].finished()) continue;
      while (p.has_idle() && p.assignable(r) > 0) p.assign(r);
    }
    return p.take();
  }
  bool preemptive() const override { return false; }
  bool work_conserving() const override { return false; }
  void check_workload(std::span<const Request> requests, int threads) const override {
    if (threads != 4 || requests.size() != 2 || !same_shape(requests[0], 0, 1, 4) ||
        !same_shape(requests[1], 0, 2, 2))
      throw WrongWorkload("SCRIPT_Q1 needs L=4 and requests (k=1,n=4,a=0), (k=2,n=2,a=0)");
  }
};

class ScriptQ2 : public Policy {
 public:
  using Policy::Policy;
  std::vector<Directive> decide(const SystemSnapshot& snap, Trigger) const override {
    Planner p(snap);
    if (!snap.requests[1].arrived) return p.take();
    for (std::size_t r : {std::size_t{1}, std::size_t{0}}) {
      if (snap.requests[r].finished()) continue;
      while (p.has_idle() && p.assignable(r) > 0) p.assign(r);
    }
    return p.take();
  }
  bool preemptive() const override { return false; }
  bool work_conserving() const override { return false; }
  void check_workload(std::span<const Request> requests, int threads) const override {
    if (threads != 2 || requests.size() != 2 || !same_shape(requests[0], 0, 2, 3) ||
        !same_shape(requests[1], spec().epsilon, 1, 2))
      throw WrongWorkload("SCRIPT_Q2 needs L=2 and requests (k=2,n=3,a=0), (k=1,n=2,a=epsilon)");
  }
};

// Keeps switching threads onto fresh chunks: idle threads take fresh chunks
// in FCFS order, then busy threads with the most accrued service are
// preempted onto remaining fresh chunks; paused chunks only fill leftovers.
class ForcedSwitch : public Policy {
 public:
  using Policy::Policy;
  std::vector<Directive> decide(const SystemSnapshot& snap, Trigger) const override {
    Planner p(snap);
    auto has_fresh = [&](std::size_t r) { return p.fresh(r) > 0; };
    auto next_fresh = [&]() -> std::optional<std::size_t> {
      for (std::size_t r : snap.active)
        if (has_fresh(r)) return r;
      return std::nullopt;
    };
    while (p.has_idle()) {
      auto r = next_fresh();
      if (!r) break;
      p.assign_fresh(*r);
    }
    std::vector<std::pair<double, int>> busy;
    for (const auto& t : snap.threads)
      if (t.busy) busy.emplace_back(-t.elapsed(snap.now), t.id);
    std::sort(busy.begin(), busy.end());
    for (auto [neg_elapsed, thread] : busy) {
      auto r = next_fresh();
      if (!r) break;
      p.preempt(thread);
      p.assign_fresh(*r);
    }
    greedy_fill(p, by_arrival(), any_request());
    return p.take();
  }
  bool preemptive() const override { return true; }
  bool work_conserving() const override { return true; }
};

class RandomAssignment : public Policy {
 public:
  using Policy::Policy;
  std::vector<Directive> decide(const SystemSnapshot& snap, Trigger) const override {
    Planner p(snap);
    std::uint64_t stream =
        derive_seed(std::bit_cast<std::uint64_t>(snap.now), snap.departures, snap.active.size());
    RandomStream rng(spec().seed ^ label(StreamLabel::kPolicy), stream);
    while (p.has_idle()) {
      std::vector<std::size_t> options;
      for (std::size_t r : snap.active)
        if (p.assignable(r) > 0) options.push_back(r);
      if (options.empty()) break;
      auto pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(options.size()));
      p.assign(options[std::min(pick, options.size() - 1)]);
    }
    return p.take();
  }
  bool preemptive() const override { return false; }
  bool work_conserving() const override { return true; }
};

}  // namespace

PolicyId parse_policy_id(std::string_view text) {
  for (const auto& [id, name] : kNames)
    if (text == name) return id;
  if (text == "SERPT_R") return PolicyId::kSerptRPreemptive;
  if (text == "SEDPT_R") return PolicyId::kSedptRNonpreemptive;
  if (text == "SEDPT_NR") return PolicyId::kSedptNrNonpreemptive;
  if (text == "SEDPT_WCR") return PolicyId::kSedptWcrPreemptive;
  throw InvalidSpec("unknown policy id '" + std::string(text) + "'");
}

std::string to_string(PolicyId id) {
  for (const auto& [pid, name] : kNames)
    if (pid == id) return name;
  throw std::logic_error("unnamed policy id");
}

std::vector<PolicyId> all_policy_ids() {
  std::vector<PolicyId> out;
  for (const auto& [id, name] : kNames) out.push_back(id);
  return out;
}

void Policy::check_workload(std::span<const Request>, int) const {}

std::unique_ptr<Policy> make_policy(const PolicySpec& spec) {
  using O = GreedyPolicy::Order;
  switch (spec.id) {
    case PolicyId::kFcfsR: return std::make_unique<GreedyPolicy>(spec, O::kFcfs, false);
    case PolicyId::kFcfsWcr: return std::make_unique<WorkConservingRedundant>(spec, true);
    case PolicyId::kSerptRPreemptive: return std::make_unique<PreemptiveSerpt>(spec);
    case PolicyId::kSerptRNonpreemptive:
      return std::make_unique<GreedyPolicy>(spec, O::kAlpha, false);
    case PolicyId::kSedptRNonpreemptive:
      return std::make_unique<GreedyPolicy>(spec, O::kDifferential, false);
    case PolicyId::kSedptNrNonpreemptive:
      return std::make_unique<GreedyPolicy>(spec, O::kDifferential, true);
    case PolicyId::kSedptWcrPreemptive:
      return std::make_unique<WorkConservingRedundant>(spec, false);
    case PolicyId::kSedptWcrNonpreemptive:
      return std::make_unique<WorkConservingRedundant>(spec, false, false);
    case PolicyId::kLowerBoundVirtual: return std::make_unique<VirtualBound>(spec);
    case PolicyId::kScriptQ1: return std::make_unique<ScriptQ1>(spec);
    case PolicyId::kScriptQ2: return std::make_unique<ScriptQ2>(spec);
    case PolicyId::kAdvForcedSwitch: return std::make_unique<ForcedSwitch>(spec);
    case PolicyId::kAdvRandom: return std::make_unique<RandomAssignment>(spec);
  }
  throw std::logic_error("make_policy: unhandled id");
}

std::vector<Request> script_q1_requests() {
  return {Request{0, 0.0, 1, 4}, Request{1, 0.0, 2, 2}};
}

std::vector<Request> script_q2_requests(double epsilon) {
  return {Request{0, 0.0, 2, 3}, Request{1, epsilon, 1, 2}};
}

int script_threads(PolicyId id) {
  if (id == PolicyId::kScriptQ1) return 4;
  if (id == PolicyId::kScriptQ2) return 2;
  throw InvalidSpec("not a scripted policy: " + to_string(id));
}

AppliedBatch apply_directives(SystemState& state, std::span<const Directive> batch,
                              bool allow_preempt,
                              const std::function<double(int thread)>& fresh_requirement) {
  AppliedBatch out;
  for (const auto& d : batch) {
    if (d.kind != Directive::Kind::kPreempt) continue;
    if (!allow_preempt) throw IllegalDirective("preempt from a non-preemptive policy");
    state.preempt(d.thread);
    out.preempted.push_back(d.thread);
  }
  for (const auto& d : batch) {
    if (d.kind == Directive::Kind::kIdle) {
      if (d.thread < 0 || d.thread >= state.view().thread_count() ||
          state.view().threads[d.thread].busy)
        throw IllegalDirective("idle directive for busy or unknown thread " +
                               std::to_string(d.thread));
    } else if (d.kind == Directive::Kind::kAssign) {
      double req = 0.0;
      if (!d.resume_chunk && fresh_requirement) req = fresh_requirement(d.thread);
      state.start(d.thread, d.request, d.resume_chunk, req);
      out.started.push_back(d.thread);
    }
  }
  return out;
}

}  // namespace redshard
