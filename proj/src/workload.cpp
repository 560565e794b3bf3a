#include "redshard/workload.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "redshard/errors.hpp"

namespace redshard {

WorkloadSpec WorkloadSpec::explicit_list(std::vector<Request> requests) {
  WorkloadSpec spec;
  spec.mode = Mode::kExplicit;
  spec.count = requests.size();
  spec.requests = std::move(requests);
  return spec;
}

void validate_requests(std::span<const Request> requests) {
  if (requests.empty()) throw InvalidSpec("workload has no requests");
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const auto& r = requests[i];
    if (r.k < 1 || r.n < r.k)
      throw InvalidSpec("request " + std::to_string(i) + " needs n >= k >= 1");
    if (!std::isfinite(r.arrival) || r.arrival < 0.0)
      throw InvalidSpec("request " + std::to_string(i) + " has a bad arrival time");
    if (r.id != i) throw InvalidSpec("request ids must be 0..N-1 in order");
    if (i > 0 && r.arrival < requests[i - 1].arrival)
      throw InvalidSpec("arrivals must be nondecreasing");
  }
  if (requests.front().arrival != 0.0) throw InvalidSpec("first arrival must be at t=0");
}

void validate(const WorkloadSpec& spec) {
  if (spec.mode == WorkloadSpec::Mode::kExplicit) {
    validate_requests(spec.requests);
    return;
  }
  if (spec.count < 1) throw InvalidSpec("N must be >= 1");
  if (spec.code_mix.empty()) throw InvalidSpec("code_mix is empty");
  double p = 0.0;
  for (const auto& c : spec.code_mix) {
    if (!(c.probability > 0.0)) throw InvalidSpec("code_mix probability must be > 0");
    if (c.k < 1 || c.n < c.k) throw InvalidSpec("code_mix entry needs n >= k >= 1");
    p += c.probability;
  }
  if (std::abs(p - 1.0) > 1e-12) throw InvalidSpec("code_mix probabilities must sum to 1");
  if (spec.arrival_mixture.empty()) throw InvalidSpec("arrival_mixture is empty");
  double q = 0.0;
  for (const auto& a : spec.arrival_mixture) {
    if (!(a.probability > 0.0) || !(a.rate_multiple > 0.0))
      throw InvalidSpec("arrival_mixture entries must be positive");
    q += a.probability;
  }
  if (std::abs(q - 1.0) > 1e-12) throw InvalidSpec("arrival_mixture probabilities must sum to 1");
  if (spec.count > 1 && !(spec.lambda > 0.0 && std::isfinite(spec.lambda)))
    throw InvalidSpec("lambda must be > 0 when N > 1");
}

std::vector<Request> generate_requests(const WorkloadSpec& spec, std::uint64_t seed) {
  validate(spec);
  if (spec.mode == WorkloadSpec::Mode::kExplicit) return spec.requests;

  std::vector<MixtureComponent> arrivals;
  for (const auto& a : spec.arrival_mixture)
    arrivals.push_back({a.probability, a.rate_multiple * std::max(spec.lambda, 1e-300)});
  const DownloadDist interarrival = ExponentialMixture{arrivals};

  RandomStream arrival_rng(seed, label(StreamLabel::kArrivals));
  RandomStream code_rng(seed, label(StreamLabel::kCodeMix));

  std::vector<Request> out;
  out.reserve(spec.count);
  double t = 0.0;
  for (std::size_t i = 0; i < spec.count; ++i) {
    if (i > 0) t += sample(interarrival, arrival_rng);
    double u = code_rng.uniform();
    double acc = 0.0;
    const CodeClass* chosen = &spec.code_mix.back();
    for (const auto& c : spec.code_mix) {
      acc += c.probability;
      if (u < acc) {
        chosen = &c;
        break;
      }
    }
    out.push_back({i, t, chosen->k, chosen->n});
  }
  return out;
}

int min_code_distance(std::span<const Request> requests) {
  if (requests.empty()) throw EmptyWorkload("min_code_distance of an empty workload");
  int d = requests.front().distance();
  for (const auto& r : requests) d = std::min(d, r.distance());
  return d;
}

std::vector<Request> pad_codes(std::span<const Request> requests, int distance) {
  std::vector<Request> out(requests.begin(), requests.end());
  for (auto& r : out) r.n = std::max(r.n, r.k + distance - 1);
  return out;
}

double mean_chunks_per_request(const WorkloadSpec& spec) {
  if (spec.mode == WorkloadSpec::Mode::kExplicit) {
    double s = 0.0;
    for (const auto& r : spec.requests) s += r.k;
    return spec.requests.empty() ? 0.0 : s / static_cast<double>(spec.requests.size());
  }
  double s = 0.0;
  for (const auto& c : spec.code_mix) s += c.probability * c.k;
  return s;
}

double mean_interarrival(const WorkloadSpec& spec) {
  double s = 0.0;
  for (const auto& a : spec.arrival_mixture) s += a.probability / (a.rate_multiple * spec.lambda);
  return s;
}

double traffic_intensity(const WorkloadSpec& spec, int threads, const DownloadDist& dist,
                         IntensityVariant variant) {
  if (threads < 1) throw std::invalid_argument("traffic_intensity: L must be >= 1");
  if (spec.mode == WorkloadSpec::Mode::kExplicit)
    throw InvalidSpec("traffic intensity needs a stochastic workload");
  // lambda is the nominal rate parameter of the arrival mixture, used as-is;
  // the realised request rate is 1 / mean_interarrival(spec).
  const double request_rate = spec.lambda;
  if (variant == IntensityVariant::kChunkRate) {
    return mean_chunks_per_request(spec) * request_rate * mean(dist) / threads;
  }
  return request_rate * expected_extreme(dist, threads, Extreme::kMin).value;
}

double solve_lambda_for_rho(const WorkloadSpec& spec, int threads, const DownloadDist& dist,
                            IntensityVariant variant, double rho_target) {
  if (!(rho_target > 0.0)) throw std::invalid_argument("rho_target must be > 0");
  WorkloadSpec unit = spec;
  unit.lambda = 1.0;
  return rho_target / traffic_intensity(unit, threads, dist, variant);
}

}  // namespace redshard
