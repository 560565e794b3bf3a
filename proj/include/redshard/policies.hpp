#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "redshard/model.hpp"

namespace redshard {

enum class PolicyId {
  kFcfsR,
  kFcfsWcr,
  kSerptRPreemptive,
  kSerptRNonpreemptive,
  kSedptRNonpreemptive,
  kSedptNrNonpreemptive,
  kSedptWcrPreemptive,
  kSedptWcrNonpreemptive,
  kLowerBoundVirtual,
  kScriptQ1,
  kScriptQ2,
  kAdvForcedSwitch,
  kAdvRandom,
};

/// Accepts the canonical ids (e.g. "SERPT_R_preemptive") and the short
/// forms "SERPT_R", "SEDPT_R", "SEDPT_NR", "SEDPT_WCR". Throws InvalidSpec.
PolicyId parse_policy_id(std::string_view text);
std::string to_string(PolicyId id);
std::vector<PolicyId> all_policy_ids();

struct PolicySpec {
  PolicyId id = PolicyId::kSerptRPreemptive;
  double epsilon = 0.01;   // SCRIPT_Q2 arrival offset
  std::uint64_t seed = 0;  // ADV_RANDOM
};

enum class Trigger { kStart, kArrival, kCompletion };

struct Directive {
  enum class Kind { kAssign, kPreempt, kIdle };
  Kind kind = Kind::kIdle;
  int thread = 0;
  std::size_t request = 0;
  std::optional<int> resume_chunk;  // empty: start a fresh chunk

  static Directive assign(int thread, std::size_t request, std::optional<int> resume = {}) {
    return {Kind::kAssign, thread, request, resume};
  }
  static Directive preempt(int thread) { return {Kind::kPreempt, thread, 0, {}}; }
  static Directive idle(int thread) { return {Kind::kIdle, thread, 0, {}}; }
  friend bool operator==(const Directive&, const Directive&) = default;
};

class Policy {
 public:
  explicit Policy(PolicySpec spec) : spec_(spec) {}
  virtual ~Policy() = default;

  /// Pure function of (snapshot, trigger, spec).
  virtual std::vector<Directive> decide(const SystemSnapshot& snap, Trigger trigger) const = 0;
  virtual bool preemptive() const = 0;
  virtual bool work_conserving() const = 0;
  virtual bool bound_only() const { return false; }
  /// Throws WrongWorkload when the policy cannot run on this input.
  virtual void check_workload(std::span<const Request> requests, int threads) const;

  const PolicySpec& spec() const { return spec_; }
  PolicyId id() const { return spec_.id; }
  std::string name() const { return to_string(spec_.id); }

 private:
  PolicySpec spec_;
};

std::unique_ptr<Policy> make_policy(const PolicySpec& spec);

/// Workloads the scripted policies are built for.
std::vector<Request> script_q1_requests();
std::vector<Request> script_q2_requests(double epsilon);
int script_threads(PolicyId id);

struct AppliedBatch {
  std::vector<int> preempted;
  std::vector<int> started;  // threads that began or resumed service
};

/// Applies preempts first, then assigns. Throws IllegalDirective on any
/// illegal entry (including preempts when `allow_preempt` is false).
AppliedBatch apply_directives(SystemState& state, std::span<const Directive> batch,
                              bool allow_preempt,
                              const std::function<double(int thread)>& fresh_requirement);

}  // namespace redshard
