#include "redshard/model.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <string>

#include "redshard/errors.hpp"

namespace redshard {

int SystemSnapshot::busy_threads() const {
  int busy = 0;
  for (const auto& t : threads) busy += t.busy ? 1 : 0;
  return busy;
}

std::vector<int> state_vector(const SystemSnapshot& snap, VectorKind kind) {
  std::vector<int> out;
  out.reserve(snap.active.size());
  for (std::size_t id : snap.active) {
    const auto& r = snap.requests[id];
    int a = r.remaining();
    out.push_back(kind == VectorKind::kRemaining ? a : a - snap.assigned_counts[id]);
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

long long tail_sum(std::span<const int> vec, std::size_t j) {
  if (j < 1) throw std::invalid_argument("tail_sum: j must be >= 1");
  long long s = 0;
  for (std::size_t i = j - 1; i < vec.size(); ++i) s += vec[i];
  return s;
}

long long remaining_total(const SystemSnapshot& snap) {
  long long s = 0;
  for (std::size_t id : snap.active) s += snap.requests[id].remaining();
  return s;
}

void check_invariants(const SystemSnapshot& snap) {
  auto fail = [](const std::string& what) { throw std::logic_error("invariant: " + what); };
  std::vector<int> counted(snap.requests.size(), 0);
  int busy = 0;
  if (snap.threads.empty()) fail("no threads");
  for (const auto& t : snap.threads) {
    if (!t.busy) continue;
    ++busy;
    if (t.request >= snap.requests.size()) fail("thread serves unknown request");
    const auto& r = snap.requests[t.request];
    if (r.finished()) fail("thread serves completed request " + std::to_string(t.request));
    if (!r.arrived) fail("thread serves request before arrival");
    ++counted[t.request];
  }
  int delta_sum = 0;
  for (std::size_t i = 0; i < snap.requests.size(); ++i) {
    const auto& r = snap.requests[i];
    delta_sum += snap.assigned_counts[i];
    if (counted[i] != snap.assigned_counts[i] || counted[i] != r.in_service)
      fail("delta mismatch for request " + std::to_string(i));
    if (r.downloaded < 0 || r.downloaded > r.request.k) fail("downloaded out of range");
    if (r.finished() != (r.downloaded == r.request.k)) fail("completion flag mismatch");
    if (!r.finished() &&
        r.downloaded + r.in_service + r.available_fresh() + static_cast<int>(r.paused.size()) >
            r.request.n)
      fail("chunk accounting exceeds n for request " + std::to_string(i));
    if (r.started > r.request.n) fail("more than n distinct chunks started");
  }
  if (delta_sum != busy || busy > snap.thread_count()) fail("sum of delta != busy threads");
  for (std::size_t id : snap.active) {
    const auto& r = snap.requests[id];
    if (!r.arrived || r.finished()) fail("active list holds an inactive request");
  }
}

SystemState::SystemState(std::span<const Request> requests, int threads) {
  if (threads < 1) throw std::invalid_argument("SystemState: need at least one thread");
  snap_.requests.reserve(requests.size());
  for (const auto& r : requests) {
    RequestState rs;
    rs.request = r;
    snap_.requests.push_back(std::move(rs));
  }
  snap_.assigned_counts.assign(requests.size(), 0);
  snap_.threads.resize(threads);
  for (int l = 0; l < threads; ++l) snap_.threads[l].id = l;
}

void SystemState::set_time(double now) {
  if (now < snap_.now) throw std::logic_error("time moved backwards");
  snap_.now = now;
}

void SystemState::arrive(std::size_t request) {
  auto& r = snap_.requests.at(request);
  if (r.arrived) throw std::logic_error("request arrived twice");
  r.arrived = true;
  // Keep (arrival, id) order; arrivals come in order so this is an append.
  auto pos = std::upper_bound(snap_.active.begin(), snap_.active.end(), request,
                              [&](std::size_t a, std::size_t b) {
                                const auto& ra = snap_.requests[a].request;
                                const auto& rb = snap_.requests[b].request;
                                return std::tie(ra.arrival, ra.id) < std::tie(rb.arrival, rb.id);
                              });
  snap_.active.insert(pos, request);
}

ThreadSlot& SystemState::idle_slot(int thread) {
  if (thread < 0 || thread >= snap_.thread_count())
    throw IllegalDirective("thread id " + std::to_string(thread) + " out of range");
  auto& slot = snap_.threads[thread];
  if (slot.busy) throw IllegalDirective("thread " + std::to_string(thread) + " is busy");
  return slot;
}

ThreadSlot& SystemState::busy_slot(int thread) {
  if (thread < 0 || thread >= snap_.thread_count())
    throw IllegalDirective("thread id " + std::to_string(thread) + " out of range");
  auto& slot = snap_.threads[thread];
  if (!slot.busy) throw IllegalDirective("thread " + std::to_string(thread) + " is idle");
  return slot;
}

void SystemState::release(ThreadSlot& slot) {
  auto& r = snap_.requests[slot.request];
  --r.in_service;
  --snap_.assigned_counts[slot.request];
  slot.busy = false;
  slot.chunk = -1;
}

int SystemState::start(int thread, std::size_t request, std::optional<int> resume_chunk,
                       double fresh_requirement) {
  auto& slot = idle_slot(thread);
  if (request >= snap_.requests.size())
    throw IllegalDirective("unknown request " + std::to_string(request));
  auto& r = snap_.requests[request];
  if (!r.arrived || r.finished())
    throw IllegalDirective("request " + std::to_string(request) + " is not active");
  int chunk;
  if (resume_chunk) {
    auto it = std::find_if(r.paused.begin(), r.paused.end(),
                           [&](const PausedAttempt& p) { return p.chunk == *resume_chunk; });
    if (it == r.paused.end())
      throw IllegalDirective("chunk " + std::to_string(*resume_chunk) + " of request " +
                             std::to_string(request) + " is not paused");
    chunk = it->chunk;
    slot.requirement = it->requirement;
    slot.elapsed_prior = it->elapsed;
    r.paused.erase(it);
  } else {
    if (r.available_fresh() <= 0)
      throw IllegalDirective("request " + std::to_string(request) + " has no fresh chunk");
    chunk = r.started++;
    slot.requirement = fresh_requirement;
    slot.elapsed_prior = 0.0;
    ++totals_.started;
  }
  slot.busy = true;
  slot.request = request;
  slot.chunk = chunk;
  slot.start = snap_.now;
  ++r.in_service;
  ++snap_.assigned_counts[request];
  return chunk;
}

void SystemState::preempt(int thread) {
  auto& slot = busy_slot(thread);
  auto& r = snap_.requests[slot.request];
  r.paused.push_back({slot.chunk, slot.elapsed(snap_.now), slot.requirement});
  ++totals_.preempted;
  release(slot);
}

SystemState::Completion SystemState::complete(int thread) {
  auto& slot = busy_slot(thread);
  Completion out;
  out.request = slot.request;
  auto& r = snap_.requests[slot.request];
  release(slot);
  ++r.downloaded;
  ++totals_.downloaded;
  ++snap_.departures;
  if (r.downloaded < r.request.k) return out;

  out.request_completed = true;
  r.completion = snap_.now;
  ++snap_.completed_requests;
  for (auto& other : snap_.threads) {
    if (other.busy && other.request == out.request) {
      out.terminated_threads.push_back(other.id);
      ++totals_.terminated;
      release(other);
    }
  }
  r.paused.clear();
  auto it = std::find(snap_.active.begin(), snap_.active.end(), out.request);
  snap_.active.erase(it);
  return out;
}

VirtualBoundState::VirtualBoundState(std::span<const Request> requests)
    : requests_(requests.begin(), requests.end()), remaining_(requests.size(), 0) {}

void VirtualBoundState::arrive(std::size_t request) {
  const auto& r = requests_.at(request);
  remaining_[request] = r.k;
  total_ += r.k;
  order_.emplace(r.k, r.arrival, r.id);
}

std::optional<VirtualBoundState::Credit> VirtualBoundState::credit_departure() {
  if (order_.empty()) return std::nullopt;
  auto [rem, arrival, id] = *order_.begin();
  order_.erase(order_.begin());
  --remaining_[id];
  --total_;
  if (remaining_[id] == 0) {
    ++completed_;
    return Credit{id, true};
  }
  order_.emplace(remaining_[id], arrival, id);
  return Credit{id, false};
}

std::vector<int> VirtualBoundState::remaining_vector() const {
  std::vector<int> out;
  out.reserve(order_.size());
  for (const auto& [rem, arrival, id] : order_) out.push_back(rem);
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

}  // namespace redshard
