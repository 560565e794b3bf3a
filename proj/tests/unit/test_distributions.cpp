#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "redshard/distributions.hpp"
#include "redshard/errors.hpp"

using namespace redshard;

namespace {

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

const DownloadDist kExp = make_exponential(50.0);
const DownloadDist kShifted = make_shifted_exponential(0.008, 50.0 / 0.6);
const DownloadDist kMixture = make_exponential_mixture({{0.5, 20.0}, {0.5, 80.0}});

}  // namespace

TEST_SUITE("distributions") {

TEST_CASE("constructors reject bad parameters") {
  CHECK_THROWS_AS(make_exponential(0.0), InvalidDistribution);
  CHECK_THROWS_AS(make_exponential(-1.0), InvalidDistribution);
  CHECK_THROWS_AS(make_shifted_exponential(-0.1, 1.0), InvalidDistribution);
  CHECK_THROWS_AS(make_shifted_exponential(0.1, 0.0), InvalidDistribution);
  CHECK_THROWS_AS(make_exponential_mixture({}), InvalidDistribution);
  CHECK_THROWS_AS(make_exponential_mixture({{0.5, 1.0}, {0.4, 2.0}}), InvalidDistribution);
  CHECK_THROWS_AS(make_exponential_mixture({{1.0, -2.0}}), InvalidDistribution);
  CHECK_NOTHROW(validate(kMixture));
}

TEST_CASE("means") {
  CHECK(mean(kExp) == doctest::Approx(0.02));
  CHECK(mean(kShifted) == doctest::Approx(0.02));
  CHECK(mean(kMixture) == doctest::Approx(0.5 / 20 + 0.5 / 80));
  CHECK(is_exponential(kExp));
  CHECK_FALSE(is_exponential(kShifted));
  CHECK_FALSE(describe(kMixture).empty());
}

TEST_CASE("tail examples") {
  CHECK(tail(make_exponential(1.0), 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(tail(make_shifted_exponential(0.4 / 50, 50 / 0.6), 0.3 / 50) == 1.0);
  for (const auto& d : {kExp, kShifted, kMixture}) CHECK(tail(d, 0.0) == 1.0);
}

TEST_CASE("tail is nonincreasing") {
  for (const auto& d : {kExp, kShifted, kMixture}) {
    double prev = 1.0;
    for (int i = 1; i <= 2000; ++i) {
      double t = i * 1e-4;
      double v = tail(d, t);
      CHECK(v <= prev);
      prev = v;
    }
  }
}

TEST_CASE("classify") {
  CHECK(classify(kExp) == AgingClass::kBoth);
  CHECK(classify(make_exponential(1.0)) == AgingClass::kBoth);
  CHECK(classify(kShifted) == AgingClass::kNlu);
  CHECK(classify(kMixture) == AgingClass::kNsu);

  std::vector<double> grid;
  for (int i = 0; i <= 50; ++i) grid.push_back(0.1 * i);
  auto mix = make_exponential_mixture({{0.5, 0.4}, {0.5, 1.6}});
  CHECK(classify(mix, grid, grid) == AgingClass::kNsu);
  CHECK(classify(make_shifted_exponential(0.4, 1 / 0.6), grid, grid) == AgingClass::kNlu);
  CHECK(to_string(AgingClass::kNlu) == "NLU");
}

TEST_CASE("expected_extreme examples") {
  auto e1 = make_exponential(1.0);
  CHECK(expected_extreme(e1, 3, Extreme::kMax).value == doctest::Approx(11.0 / 6).epsilon(1e-12));
  CHECK(expected_extreme(e1, 3, Extreme::kMin).value == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(expected_extreme(e1, 0, Extreme::kMax).value == 0.0);
  double m3 = expected_extreme(kShifted, 3, Extreme::kMax).value;
  double m2 = expected_extreme(kShifted, 2, Extreme::kMax).value;
  CHECK(m3 == doctest::Approx(0.0300).epsilon(1e-9));
  CHECK(m2 == doctest::Approx(0.0260).epsilon(1e-9));
  CHECK(m3 + m2 == doctest::Approx(0.0560).epsilon(1e-9));
  CHECK(harmonic_number(3) == doctest::Approx(11.0 / 6));
  CHECK(harmonic_number(0) == 0.0);
}

TEST_CASE("expected_extreme analytic matches Monte Carlo") {
  for (const auto& d : {kExp, kShifted, kMixture}) {
    for (auto which : {Extreme::kMax, Extreme::kMin}) {
      auto a = expected_extreme(d, 3, which);
      auto mc = expected_extreme(d, 3, which, MonteCarlo{200000, 11});
      CHECK(mc.std_err > 0.0);
      CHECK(std::abs(a.value - mc.value) <= 4 * mc.std_err);
    }
  }
}

TEST_CASE("extreme sandwich for NLU laws") {
  for (int L = 1; L <= 8; ++L) {
    for (const auto& d : {kExp, kShifted}) {
      double m = mean(d);
      double v = expected_extreme(d, L, Extreme::kMax).value;
      CHECK(v >= m * (1 - 1e-12));
      CHECK(v <= harmonic_number(L) * m * (1 + 1e-12));
    }
  }
}

TEST_CASE("sample mean within 4 SE at 10^6 draws") {
  for (const auto& d : {kExp, kShifted, kMixture}) {
    RandomStream rng(42, 0);
    const int n = 1000000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      double x = sample(d, rng);
      s += x;
      s2 += x * x;
    }
    double m = s / n;
    double se = std::sqrt((s2 / n - m * m) / n);
    CHECK(std::abs(m - mean(d)) <= 4 * se);
  }
}

TEST_CASE("residual_sample at zero elapsed matches sample (KS, 100 seeds)") {
  const std::size_t n = 100000;
  const double crit = 1.628 * std::sqrt(2.0 / n);  // alpha = 0.01
  for (const auto& d : {kExp, kShifted, kMixture}) {
    int passes = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      RandomStream ra(seed, 1), rb(seed, 2);
      std::vector<double> a(n), b(n);
      for (auto& x : a) x = sample(d, ra);
      for (auto& x : b) x = residual_sample(d, 0.0, rb);
      if (ks_statistic(a, b) <= crit) ++passes;
    }
    INFO(describe(d));
    CHECK(passes >= 99);
  }
}

TEST_CASE("residual_sample follows the conditional law") {
  // P(R > x) = tail(tau + x) / tail(tau), checked at a few points.
  for (const auto& d : {kExp, kShifted, kMixture}) {
    for (double tau : {0.004, 0.02, 0.05}) {
      RandomStream rng(9, 3);
      const int n = 200000;
      std::vector<double> xs(n);
      for (auto& x : xs) x = residual_sample(d, tau, rng);
      for (double x : {0.002, 0.01, 0.03}) {
        double p = static_cast<double>(std::count_if(xs.begin(), xs.end(),
                                                     [&](double v) { return v > x; })) / n;
        double expect = tail(d, tau + x) / tail(d, tau);
        double se = std::sqrt(expect * (1 - expect) / n);
        CHECK(std::abs(p - expect) <= 4 * se + 1e-12);
      }
    }
  }
}

TEST_CASE("residual inside the shift keeps the remaining shift") {
  RandomStream rng(1);
  for (int i = 0; i < 1000; ++i) CHECK(residual_sample(kShifted, 0.001, rng) >= 0.007 - 1e-15);
}

TEST_CASE("residual with zero tail probability throws") {
  RandomStream rng(1);
  CHECK_THROWS_AS(residual_sample(kExp, 1e5, rng), ZeroTailProbability);
}

}
