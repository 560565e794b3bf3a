#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "redshard/distributions.hpp"

namespace redshard {

/// One file read stored with an (n, k) MDS code.
struct Request {
  std::size_t id = 0;
  double arrival = 0.0;  // seconds
  int k = 1;             // chunks needed
  int n = 1;             // chunks stored

  int distance() const { return n - k + 1; }
  friend bool operator==(const Request&, const Request&) = default;
};

struct CodeClass {
  double probability;
  int n;
  int k;
};

/// Inter-arrival mixture component; rate is rate_multiple * lambda.
struct ArrivalComponent {
  double probability;
  double rate_multiple;
};

struct WorkloadSpec {
  enum class Mode { kExplicit, kStochastic };

  Mode mode = Mode::kStochastic;
  std::vector<Request> requests;  // explicit mode

  std::size_t count = 1;  // N
  double lambda = 0.0;    // 1/seconds
  std::vector<ArrivalComponent> arrival_mixture{{1.0, 1.0}};
  std::vector<CodeClass> code_mix;

  static WorkloadSpec explicit_list(std::vector<Request> requests);
};

void validate(const WorkloadSpec& spec);
void validate_requests(std::span<const Request> requests);

/// Arrivals and code parameters use independent streams derived from `seed`.
std::vector<Request> generate_requests(const WorkloadSpec& spec, std::uint64_t seed);

int min_code_distance(std::span<const Request> requests);

/// Copy of `requests` with n raised so every distance is at least `distance`.
std::vector<Request> pad_codes(std::span<const Request> requests, int distance);

enum class IntensityVariant { kChunkRate, kMinBased };

double mean_chunks_per_request(const WorkloadSpec& spec);
double mean_interarrival(const WorkloadSpec& spec);

double traffic_intensity(const WorkloadSpec& spec, int threads, const DownloadDist& dist,
                         IntensityVariant variant);

double solve_lambda_for_rho(const WorkloadSpec& spec, int threads, const DownloadDist& dist,
                            IntensityVariant variant, double rho_target);

}  // namespace redshard
