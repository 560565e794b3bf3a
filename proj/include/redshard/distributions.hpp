#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "redshard/rng.hpp"

namespace redshard {

struct Exponential {
  double rate;  // 1/seconds
};

/// Constant shift followed by an exponential tail.
struct ShiftedExponential {
  double shift;  // seconds
  double rate;   // 1/seconds, of the part beyond the shift
};

struct MixtureComponent {
  double weight;
  double rate;
};

struct ExponentialMixture {
  std::vector<MixtureComponent> components;
};

/// Chunk downloading-time law.
using DownloadDist = std::variant<Exponential, ShiftedExponential, ExponentialMixture>;

DownloadDist make_exponential(double rate);
DownloadDist make_shifted_exponential(double shift, double rate);
DownloadDist make_exponential_mixture(std::vector<MixtureComponent> components);

/// Throws InvalidDistribution when parameters break the family invariants.
void validate(const DownloadDist& dist);

double mean(const DownloadDist& dist);
std::string describe(const DownloadDist& dist);
bool is_exponential(const DownloadDist& dist);

double sample(const DownloadDist& dist, RandomStream& rng);

/// Draws X - elapsed conditioned on X > elapsed.
double residual_sample(const DownloadDist& dist, double elapsed, RandomStream& rng);

/// P(X > t).
double tail(const DownloadDist& dist, double t);

enum class AgingClass { kNlu, kNsu, kBoth, kNeither };
std::string to_string(AgingClass c);

/// Checks the New-Longer-than-Used and New-Shorter-than-Used inequalities on
/// every (t, tau) grid pair, skipping tau with zero tail.
AgingClass classify(const DownloadDist& dist, std::span<const double> t_grid,
                    std::span<const double> tau_grid, double tolerance = 1e-12);

/// 201-point grid {0, 0.05 m, ..., 10 m} with m the mean of the law.
std::vector<double> default_classification_grid(const DownloadDist& dist);
AgingClass classify(const DownloadDist& dist);

double harmonic_number(int n);

enum class Extreme { kMax, kMin };

struct Analytic {};
struct MonteCarlo {
  std::size_t reps = 100000;
  std::uint64_t seed = 1;
};
using ExtremeMethod = std::variant<Analytic, MonteCarlo>;

struct ExtremeEstimate {
  double value = 0.0;
  double std_err = 0.0;  // zero for analytic results
};

/// E{max or min of `count` i.i.d. draws}. count == 0 yields 0.
ExtremeEstimate expected_extreme(const DownloadDist& dist, int count, Extreme which,
                                 const ExtremeMethod& method = Analytic{});

}  // namespace redshard
