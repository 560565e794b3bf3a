#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <tuple>
#include <vector>

#include "redshard/workload.hpp"

namespace redshard {

/// A chunk whose download was preempted; resuming continues from `elapsed`.
struct PausedAttempt {
  int chunk;
  double elapsed;
  double requirement;
};

struct RequestState {
  Request request;
  bool arrived = false;
  int downloaded = 0;  // g_i
  int in_service = 0;
  int started = 0;     // distinct chunks ever started; fresh ids are [started, n)
  std::vector<PausedAttempt> paused;
  std::optional<double> completion;

  int remaining() const { return request.k - downloaded; }
  int available_fresh() const { return request.n - started; }
  int assignable() const { return available_fresh() + static_cast<int>(paused.size()); }
  bool finished() const { return completion.has_value(); }
};

struct ThreadSlot {
  int id = 0;
  bool busy = false;
  std::size_t request = 0;
  int chunk = -1;
  double start = 0.0;          // start of the current service stint
  double requirement = 0.0;    // total service the chunk needs
  double elapsed_prior = 0.0;  // service accrued before this stint

  double elapsed(double now) const { return elapsed_prior + (now - start); }
  double completion_time() const { return start + (requirement - elapsed_prior); }
};

/// Decision input handed to policies. Requests are indexed by id; `active`
/// lists arrived, unfinished requests in (arrival, id) order.
struct SystemSnapshot {
  double now = 0.0;
  std::vector<RequestState> requests;
  std::vector<std::size_t> active;
  std::vector<ThreadSlot> threads;
  std::vector<int> assigned_counts;  // delta_i by request id
  std::size_t departures = 0;
  std::size_t completed_requests = 0;

  int thread_count() const { return static_cast<int>(threads.size()); }
  int busy_threads() const;
  int delta(std::size_t request) const { return assigned_counts[request]; }
};

enum class VectorKind { kRemaining, kDifferential };

/// Sorted (descending) alpha or alpha - delta over unfinished requests.
std::vector<int> state_vector(const SystemSnapshot& snap, VectorKind kind);

/// Sum of vec[j-1 ...]; entries beyond the end count as zero.
long long tail_sum(std::span<const int> vec, std::size_t j);

long long remaining_total(const SystemSnapshot& snap);

/// Throws std::logic_error naming the first broken invariant.
void check_invariants(const SystemSnapshot& snap);

struct StateTotals {
  std::size_t started = 0;
  std::size_t downloaded = 0;
  std::size_t preempted = 0;
  std::size_t terminated = 0;
};

/// Mutable runtime state behind a SystemSnapshot. Owned by one engine or
/// coupled driver; not thread-safe.
class SystemState {
 public:
  SystemState(std::span<const Request> requests, int threads);

  const SystemSnapshot& view() const { return snap_; }
  const StateTotals& totals() const { return totals_; }

  void set_time(double now);
  void arrive(std::size_t request);

  /// Starts (fresh) or resumes (paused) a chunk on an idle thread.
  /// Returns the chunk id. Throws IllegalDirective on misuse.
  int start(int thread, std::size_t request, std::optional<int> resume_chunk,
            double fresh_requirement);

  void preempt(int thread);

  struct Completion {
    std::size_t request = 0;
    bool request_completed = false;
    std::vector<int> terminated_threads;
  };
  /// Completes the chunk on `thread`; terminates sibling downloads when the
  /// request reaches k chunks.
  Completion complete(int thread);

  bool all_complete() const { return snap_.completed_requests == snap_.requests.size(); }

 private:
  ThreadSlot& idle_slot(int thread);
  ThreadSlot& busy_slot(int thread);
  void release(ThreadSlot& slot);

  SystemSnapshot snap_;
  StateTotals totals_;
};

/// State of the virtual lower-bound construction: every departure is
/// credited to the unfinished request with the fewest remaining chunks.
class VirtualBoundState {
 public:
  explicit VirtualBoundState(std::span<const Request> requests);

  void arrive(std::size_t request);

  struct Credit {
    std::size_t request;
    bool completed;
  };
  std::optional<Credit> credit_departure();

  long long remaining_total() const { return total_; }
  std::vector<int> remaining_vector() const;
  bool empty() const { return total_ == 0; }
  std::size_t completed_requests() const { return completed_; }

 private:
  std::vector<Request> requests_;
  std::vector<int> remaining_;
  std::set<std::tuple<int, double, std::size_t>> order_;
  long long total_ = 0;
  std::size_t completed_ = 0;
};

}  // namespace redshard
