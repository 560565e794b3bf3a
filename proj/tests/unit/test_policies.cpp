#include <algorithm>
#include <map>
#include <vector>

#include "doctest.h"
#include "redshard/engine.hpp"
#include "redshard/errors.hpp"
#include "redshard/policies.hpp"
#include "redshard/verify.hpp"

using namespace redshard;

namespace {

SystemState arrived(const std::vector<Request>& reqs, int threads) {
  SystemState s(reqs, threads);
  for (std::size_t i = 0; i < reqs.size(); ++i) s.arrive(i);
  return s;
}

std::map<std::size_t, int> threads_per_request(const std::vector<Directive>& batch) {
  std::map<std::size_t, int> out;
  for (const auto& d : batch)
    if (d.kind == Directive::Kind::kAssign) ++out[d.request];
  return out;
}

const std::vector<PolicyId> kFeasible{
    PolicyId::kFcfsR,          PolicyId::kFcfsWcr,
    PolicyId::kSerptRPreemptive, PolicyId::kSerptRNonpreemptive,
    PolicyId::kSedptRNonpreemptive, PolicyId::kSedptNrNonpreemptive,
    PolicyId::kSedptWcrPreemptive, PolicyId::kSedptWcrNonpreemptive,
    PolicyId::kAdvForcedSwitch, PolicyId::kAdvRandom};

}  // namespace

TEST_SUITE("policies") {

TEST_CASE("ids round-trip and aliases parse") {
  for (PolicyId id : all_policy_ids()) CHECK(parse_policy_id(to_string(id)) == id);
  CHECK(parse_policy_id("SERPT_R") == PolicyId::kSerptRPreemptive);
  CHECK(parse_policy_id("SEDPT_R") == PolicyId::kSedptRNonpreemptive);
  CHECK(parse_policy_id("SEDPT_NR") == PolicyId::kSedptNrNonpreemptive);
  CHECK(parse_policy_id("SEDPT_WCR") == PolicyId::kSedptWcrPreemptive);
  CHECK_THROWS_AS(parse_policy_id("SJF"), InvalidSpec);
}

TEST_CASE("SERPT_R sends all 4 threads to request 1 in Example 1") {
  auto s = arrived(script_q1_requests(), 4);
  auto batch = make_policy({PolicyId::kSerptRPreemptive})->decide(s.view(), Trigger::kStart);
  auto per = threads_per_request(batch);
  CHECK(per[0] == 4);
  CHECK(per.count(1) == 0);
}

TEST_CASE("SCRIPT_Q1 splits 2 and 2 at t=0") {
  auto s = arrived(script_q1_requests(), 4);
  auto batch = make_policy({PolicyId::kScriptQ1})->decide(s.view(), Trigger::kStart);
  auto per = threads_per_request(batch);
  CHECK(per[0] == 2);
  CHECK(per[1] == 2);
}

TEST_CASE("SEDPT_NR caps threads at alpha") {
  std::vector<Request> reqs{{0, 0.0, 2, 3}};
  auto s = arrived(reqs, 3);
  auto p = make_policy({PolicyId::kSedptNrNonpreemptive});
  auto batch = p->decide(s.view(), Trigger::kStart);
  CHECK(threads_per_request(batch)[0] == 2);
  CHECK_FALSE(p->work_conserving());
  CHECK_FALSE(p->preemptive());
}

TEST_CASE("SEDPT_R orders by differential and allows redundancy") {
  // r0 needs 3 with 0 threads, r1 needs 1: r1 first, then r1 takes more
  // threads while its alpha - delta stays smallest.
  std::vector<Request> reqs{{0, 0.0, 3, 4}, {1, 0.0, 1, 3}};
  auto s = arrived(reqs, 4);
  auto batch = make_policy({PolicyId::kSedptRNonpreemptive})->decide(s.view(), Trigger::kStart);
  auto per = threads_per_request(batch);
  CHECK(per[1] == 3);
  CHECK(per[0] == 1);
}

TEST_CASE("FCFS_R fills the earliest request first") {
  std::vector<Request> reqs{{0, 0.0, 3, 4}, {1, 0.0, 1, 3}};
  auto s = arrived(reqs, 6);
  auto per = threads_per_request(make_policy({PolicyId::kFcfsR})->decide(s.view(), Trigger::kStart));
  CHECK(per[0] == 4);
  CHECK(per[1] == 2);
}

TEST_CASE("preemptive SEDPT_WCR frees redundant threads on arrival") {
  std::vector<Request> reqs{{0, 0.0, 1, 3}, {1, 1.0, 1, 3}};
  SystemState s(reqs, 3);
  s.arrive(0);
  auto wcr = make_policy({PolicyId::kSedptWcrPreemptive});
  auto first = wcr->decide(s.view(), Trigger::kStart);
  apply_directives(s, first, true, [](int) { return 5.0; });
  CHECK(s.view().busy_threads() == 3);
  s.set_time(1.0);
  s.arrive(1);
  auto batch = wcr->decide(s.view(), Trigger::kArrival);
  int preempts = static_cast<int>(std::count_if(batch.begin(), batch.end(), [](const Directive& d) {
    return d.kind == Directive::Kind::kPreempt;
  }));
  CHECK(preempts == 1);
  CHECK(threads_per_request(batch)[1] == 1);

  auto np = make_policy({PolicyId::kSedptWcrNonpreemptive});
  for (const auto& d : np->decide(s.view(), Trigger::kArrival))
    CHECK(d.kind != Directive::Kind::kPreempt);
  CHECK(np->work_conserving());
}

TEST_CASE("apply_directives rejects illegal batches") {
  std::vector<Request> reqs{{0, 0.0, 1, 2}};
  auto s = arrived(reqs, 2);
  auto req = [](int) { return 1.0; };
  std::vector<Directive> twice{Directive::assign(0, 0), Directive::assign(0, 0)};
  CHECK_THROWS_AS(apply_directives(s, twice, false, req), IllegalDirective);

  auto s2 = arrived(reqs, 2);
  std::vector<Directive> ok{Directive::assign(0, 0)};
  auto applied = apply_directives(s2, ok, false, req);
  CHECK(applied.started == std::vector<int>{0});
  std::vector<Directive> pre{Directive::preempt(0)};
  CHECK_THROWS_AS(apply_directives(s2, pre, false, req), IllegalDirective);
  CHECK_NOTHROW(apply_directives(s2, pre, true, req));
  CHECK(s2.view().requests[0].paused.size() == 1);
}

TEST_CASE("scripts check their workloads") {
  CHECK_THROWS_AS(make_policy({PolicyId::kScriptQ1})->check_workload(script_q2_requests(0.01), 2),
                  WrongWorkload);
  CHECK_NOTHROW(make_policy({PolicyId::kScriptQ1})->check_workload(script_q1_requests(), 4));
  CHECK_NOTHROW(make_policy({PolicyId::kScriptQ2, 0.01})->check_workload(script_q2_requests(0.01), 2));
  CHECK_THROWS_AS(make_policy({PolicyId::kScriptQ2, 0.02})->check_workload(script_q2_requests(0.01), 2),
                  WrongWorkload);
  CHECK(script_threads(PolicyId::kScriptQ1) == 4);
  CHECK(script_threads(PolicyId::kScriptQ2) == 2);
}

TEST_CASE("work conservation, alpha cap and no-preempt on every event of 1000 runs") {
  for (PolicyId id : kFeasible) {
    auto policy = make_policy({id});
    std::size_t broken = 0, cap_broken = 0;
    for (std::uint64_t run = 0; run < 1000; ++run) {
      int L = 2 + static_cast<int>(run % 5);
      auto w = random_coupling_workload(run, 30, L, DistanceRegime::kAny);
      SimConfig cfg;
      cfg.threads = L;
      cfg.dist = run % 2 ? make_exponential(1.0) : make_shifted_exponential(0.4, 1 / 0.6);
      cfg.policy = {id};
      cfg.seed = run;
      cfg.check_invariants = true;
      cfg.observer = [&](const SystemSnapshot& snap, Trigger) {
        if (policy->work_conserving() && snap.busy_threads() < snap.thread_count())
          for (std::size_t r : snap.active)
            if (snap.requests[r].assignable() > 0) ++broken;
        if (id == PolicyId::kSedptNrNonpreemptive)
          for (std::size_t r : snap.active)
            if (snap.delta(r) > snap.requests[r].remaining()) ++cap_broken;
      };
      auto trace = simulate(w, cfg);
      if (!policy->preemptive()) CHECK(trace.totals.preempted == 0);
    }
    INFO(to_string(id));
    CHECK(broken == 0);
    CHECK(cap_broken == 0);
  }
}

TEST_CASE("decide is deterministic") {
  for (PolicyId id : kFeasible) {
    auto w = random_coupling_workload(3, 10, 3, DistanceRegime::kAny);
    SystemState s(w, 3);
    for (std::size_t i = 0; i < w.size(); ++i) s.arrive(i);
    auto p = make_policy({id, 0.01, 5});
    CHECK(p->decide(s.view(), Trigger::kArrival) == p->decide(s.view(), Trigger::kArrival));
  }
}

TEST_CASE("label equivariance under permutation of identical requests") {
  // Three identical requests with distinct progress; relabelling them must
  // relabel the decision the same way. FCFS orders equal arrivals by id, so
  // it is excluded.
  const std::vector<std::vector<std::size_t>> perms{{1, 0, 2}, {2, 1, 0}, {1, 2, 0}};
  const std::vector<int> progress{0, 1, 2};
  for (PolicyId id : {PolicyId::kSerptRPreemptive, PolicyId::kSerptRNonpreemptive,
                      PolicyId::kSedptRNonpreemptive, PolicyId::kSedptNrNonpreemptive,
                      PolicyId::kSedptWcrPreemptive}) {
    auto policy = make_policy({id});
    auto build = [&](const std::vector<std::size_t>& pi) {
      std::vector<Request> reqs{{0, 0.0, 4, 6}, {1, 0.0, 4, 6}, {2, 0.0, 4, 6}};
      SystemState s(reqs, 8);
      for (std::size_t i = 0; i < 3; ++i) s.arrive(i);
      int thread = 0;
      for (std::size_t i = 0; i < 3; ++i)
        for (int c = 0; c < progress[i]; ++c) s.start(thread++, pi[i], {}, 1.0);
      s.set_time(1.0);
      for (int t = 0; t < thread; ++t) s.complete(t);
      return s;
    };
    std::vector<std::size_t> identity{0, 1, 2};
    auto base = build(identity);
    auto base_batch = policy->decide(base.view(), Trigger::kArrival);
    for (const auto& pi : perms) {
      auto permuted = build(pi);
      auto batch = policy->decide(permuted.view(), Trigger::kArrival);
      REQUIRE(batch.size() == base_batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        Directive mapped = base_batch[i];
        if (mapped.kind == Directive::Kind::kAssign) mapped.request = pi[mapped.request];
        CHECK(batch[i] == mapped);
      }
    }
  }
}

}
