#include "redshard/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "redshard/errors.hpp"

namespace redshard {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double draw_exponential(double rate, RandomStream& rng) {
  return -std::log(rng.uniform()) / rate;
}

std::size_t pick_component(const std::vector<double>& weights, RandomStream& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return weights.size() - 1;
}

// Integral over [0, inf) of S(t)^power for a mixture survival S, expanded
// over compositions of `power` into the components.
double mixture_survival_power_integral(const ExponentialMixture& mix, int power,
                                       std::size_t& budget) {
  const std::size_t m = mix.components.size();
  std::vector<int> counts(m, 0);
  double total = 0.0;
  // log multinomial coefficient is accumulated incrementally via lgamma
  const double log_fact_power = std::lgamma(power + 1.0);
  auto visit = [&](auto&& self, std::size_t idx, int left) -> void {
    if (budget == 0) throw UnsupportedAnalytic("mixture expansion too large");
    if (idx + 1 == m) {
      counts[idx] = left;
      --budget;
      double log_term = log_fact_power;
      double rate_sum = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        log_term -= std::lgamma(counts[i] + 1.0);
        if (counts[i] > 0) log_term += counts[i] * std::log(mix.components[i].weight);
        rate_sum += counts[i] * mix.components[i].rate;
      }
      total += std::exp(log_term) / rate_sum;
      return;
    }
    for (int c = 0; c <= left; ++c) {
      counts[idx] = c;
      self(self, idx + 1, left - c);
    }
  };
  visit(visit, 0, power);
  return total;
}

double binomial(int n, int k) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

}  // namespace

DownloadDist make_exponential(double rate) {
  DownloadDist d = Exponential{rate};
  validate(d);
  return d;
}

DownloadDist make_shifted_exponential(double shift, double rate) {
  DownloadDist d = ShiftedExponential{shift, rate};
  validate(d);
  return d;
}

DownloadDist make_exponential_mixture(std::vector<MixtureComponent> components) {
  DownloadDist d = ExponentialMixture{std::move(components)};
  validate(d);
  return d;
}

void validate(const DownloadDist& dist) {
  auto positive_rate = [](double r) { return std::isfinite(r) && r > 0.0; };
  std::visit(
      Overloaded{
          [&](const Exponential& e) {
            if (!positive_rate(e.rate)) throw InvalidDistribution("rate must be > 0");
          },
          [&](const ShiftedExponential& s) {
            if (!positive_rate(s.rate)) throw InvalidDistribution("rate must be > 0");
            if (!(std::isfinite(s.shift) && s.shift >= 0.0))
              throw InvalidDistribution("shift must be >= 0");
          },
          [&](const ExponentialMixture& m) {
            if (m.components.empty()) throw InvalidDistribution("mixture has no components");
            double sum = 0.0;
            for (const auto& c : m.components) {
              if (!(c.weight > 0.0)) throw InvalidDistribution("mixture weight must be > 0");
              if (!positive_rate(c.rate)) throw InvalidDistribution("rate must be > 0");
              sum += c.weight;
            }
            if (std::abs(sum - 1.0) > 1e-12)
              throw InvalidDistribution("mixture weights must sum to 1");
          },
      },
      dist);
}

double mean(const DownloadDist& dist) {
  return std::visit(Overloaded{
                        [](const Exponential& e) { return 1.0 / e.rate; },
                        [](const ShiftedExponential& s) { return s.shift + 1.0 / s.rate; },
                        [](const ExponentialMixture& m) {
                          double acc = 0.0;
                          for (const auto& c : m.components) acc += c.weight / c.rate;
                          return acc;
                        },
                    },
                    dist);
}

std::string describe(const DownloadDist& dist) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const Exponential& e) { os << "exponential(rate=" << e.rate << ")"; },
                 [&](const ShiftedExponential& s) {
                   os << "shifted_exp(shift=" << s.shift << ",rate=" << s.rate << ")";
                 },
                 [&](const ExponentialMixture& m) {
                   os << "exp_mixture(";
                   for (std::size_t i = 0; i < m.components.size(); ++i) {
                     if (i) os << ",";
                     os << m.components[i].weight << "@" << m.components[i].rate;
                   }
                   os << ")";
                 },
             },
             dist);
  return os.str();
}

bool is_exponential(const DownloadDist& dist) {
  return std::holds_alternative<Exponential>(dist);
}

double sample(const DownloadDist& dist, RandomStream& rng) {
  return std::visit(Overloaded{
                        [&](const Exponential& e) { return draw_exponential(e.rate, rng); },
                        [&](const ShiftedExponential& s) {
                          return s.shift + draw_exponential(s.rate, rng);
                        },
                        [&](const ExponentialMixture& m) {
                          std::vector<double> w;
                          w.reserve(m.components.size());
                          for (const auto& c : m.components) w.push_back(c.weight);
                          auto i = pick_component(w, rng);
                          return draw_exponential(m.components[i].rate, rng);
                        },
                    },
                    dist);
}

double residual_sample(const DownloadDist& dist, double elapsed, RandomStream& rng) {
  if (tail(dist, elapsed) <= 0.0)
    throw ZeroTailProbability("P(X > elapsed) is zero at elapsed=" + std::to_string(elapsed));
  return std::visit(
      Overloaded{
          [&](const Exponential& e) { return draw_exponential(e.rate, rng); },
          [&](const ShiftedExponential& s) {
            double lead = std::max(0.0, s.shift - elapsed);
            return lead + draw_exponential(s.rate, rng);
          },
          [&](const ExponentialMixture& m) {
            // Posterior component weights given survival to `elapsed`.
            std::vector<double> logw;
            logw.reserve(m.components.size());
            for (const auto& c : m.components) logw.push_back(std::log(c.weight) - c.rate * elapsed);
            double top = *std::max_element(logw.begin(), logw.end());
            std::vector<double> w;
            double sum = 0.0;
            for (double lw : logw) {
              w.push_back(std::exp(lw - top));
              sum += w.back();
            }
            for (double& x : w) x /= sum;
            auto i = pick_component(w, rng);
            return draw_exponential(m.components[i].rate, rng);
          },
      },
      dist);
}

double tail(const DownloadDist& dist, double t) {
  if (t <= 0.0) return 1.0;
  return std::visit(Overloaded{
                        [&](const Exponential& e) { return std::exp(-e.rate * t); },
                        [&](const ShiftedExponential& s) {
                          return t <= s.shift ? 1.0 : std::exp(-s.rate * (t - s.shift));
                        },
                        [&](const ExponentialMixture& m) {
                          double acc = 0.0;
                          for (const auto& c : m.components) acc += c.weight * std::exp(-c.rate * t);
                          return std::min(acc, 1.0);
                        },
                    },
                    dist);
}

std::string to_string(AgingClass c) {
  switch (c) {
    case AgingClass::kNlu: return "NLU";
    case AgingClass::kNsu: return "NSU";
    case AgingClass::kBoth: return "both";
    case AgingClass::kNeither: return "neither";
  }
  return "?";
}

AgingClass classify(const DownloadDist& dist, std::span<const double> t_grid,
                    std::span<const double> tau_grid, double tolerance) {
  bool nlu = true;
  bool nsu = true;
  for (double tau : tau_grid) {
    double survived = tail(dist, tau);
    if (survived <= 0.0) continue;
    for (double t : t_grid) {
      double fresh = tail(dist, t);
      double used = tail(dist, t + tau) / survived;
      if (fresh < used - tolerance) nlu = false;
      if (fresh > used + tolerance) nsu = false;
    }
  }
  if (nlu && nsu) return AgingClass::kBoth;
  if (nlu) return AgingClass::kNlu;
  if (nsu) return AgingClass::kNsu;
  return AgingClass::kNeither;
}

std::vector<double> default_classification_grid(const DownloadDist& dist) {
  const double m = mean(dist);
  std::vector<double> grid(201);
  for (int i = 0; i <= 200; ++i) grid[i] = 0.05 * i * m;
  return grid;
}

AgingClass classify(const DownloadDist& dist) {
  auto grid = default_classification_grid(dist);
  return classify(dist, grid, grid);
}

double harmonic_number(int n) {
  double h = 0.0;
  for (int l = 1; l <= n; ++l) h += 1.0 / l;
  return h;
}

ExtremeEstimate expected_extreme(const DownloadDist& dist, int count, Extreme which,
                                 const ExtremeMethod& method) {
  if (count < 0) throw std::invalid_argument("expected_extreme: count must be >= 0");
  if (count == 0) return {};

  if (const auto* mc = std::get_if<MonteCarlo>(&method)) {
    if (mc->reps < 2) throw std::invalid_argument("expected_extreme: reps must be >= 2");
    RandomStream rng(mc->seed, label(StreamLabel::kSimulation));
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t r = 0; r < mc->reps; ++r) {
      double best = sample(dist, rng);
      for (int l = 1; l < count; ++l) {
        double x = sample(dist, rng);
        best = which == Extreme::kMax ? std::max(best, x) : std::min(best, x);
      }
      sum += best;
      sum_sq += best * best;
    }
    const double n = static_cast<double>(mc->reps);
    const double m = sum / n;
    const double var = std::max(0.0, (sum_sq - n * m * m) / (n - 1.0));
    return {m, std::sqrt(var / n)};
  }

  const double hl = harmonic_number(count);
  return std::visit(
      Overloaded{
          [&](const Exponential& e) -> ExtremeEstimate {
            return {which == Extreme::kMax ? hl / e.rate : 1.0 / (count * e.rate), 0.0};
          },
          [&](const ShiftedExponential& s) -> ExtremeEstimate {
            return {s.shift + (which == Extreme::kMax ? hl / s.rate : 1.0 / (count * s.rate)),
                    0.0};
          },
          [&](const ExponentialMixture& m) -> ExtremeEstimate {
            if (count > 40) throw UnsupportedAnalytic("mixture max/min with count > 40");
            std::size_t budget = 2'000'000;
            if (which == Extreme::kMin) {
              return {mixture_survival_power_integral(m, count, budget), 0.0};
            }
            // E max = sum_s (-1)^{s+1} C(count, s) * integral S^s.
            double acc = 0.0;
            for (int s = 1; s <= count; ++s) {
              double term = binomial(count, s) * mixture_survival_power_integral(m, s, budget);
              acc += (s % 2 == 1) ? term : -term;
            }
            return {acc, 0.0};
          },
      },
      dist);
}

}  // namespace redshard
