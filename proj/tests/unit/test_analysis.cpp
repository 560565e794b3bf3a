#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "redshard/analysis.hpp"
#include "redshard/errors.hpp"

using namespace redshard;

TEST_SUITE("analysis") {

TEST_CASE("gap_bound examples") {
  auto exp50 = make_exponential(50.0);
  CHECK(gap_bound({GapSetting::kExpPreemptiveGeneral, 5, 3, exp50}) ==
        doctest::Approx((1.0 / 3 + 1.0 / 4) / 50).epsilon(1e-12));
  CHECK(gap_bound({GapSetting::kExpPreemptiveGeneral, 5, 3, exp50}) ==
        doctest::Approx(0.011667).epsilon(1e-4));
  CHECK(gap_bound({GapSetting::kExpNonpreemptiveDminGeL, 3, 3, exp50}) == doctest::Approx(0.02));
  CHECK(gap_bound({GapSetting::kExpNonpreemptiveGeneral, 5, 3, exp50}) ==
        doctest::Approx(0.02 + 0.0116667).epsilon(1e-5));
  auto nlu = make_shifted_exponential(0.4 / 50, 50 / 0.6);
  CHECK(gap_bound({GapSetting::kNluNonpreemptive, 3, 3, nlu}) == doctest::Approx(0.0560).epsilon(1e-9));
  CHECK(gap_bound({GapSetting::kNluPreemptive, 3, 3, nlu}) == doctest::Approx(0.0560).epsilon(1e-9));
  CHECK(gap_bound({GapSetting::kNsuRepetitionNonpreemptive, 3, 3, exp50}) == 0.0);
  CHECK(gap_bound({GapSetting::kExpPreemptiveDminGeL, 3, 3, exp50}) == 0.0);
}

TEST_CASE("empty harmonic sum is zero when d_min >= L") {
  auto e = make_exponential(2.0);
  for (int L = 1; L <= 6; ++L)
    for (int d = L; d <= 8; ++d) CHECK(gap_bound({GapSetting::kExpPreemptiveGeneral, L, d, e}) == 0.0);
}

TEST_CASE("exponential bounds are monotone in d_min and L") {
  auto e = make_exponential(3.0);
  for (auto s : {GapSetting::kExpPreemptiveGeneral, GapSetting::kExpNonpreemptiveGeneral}) {
    for (int L = 1; L <= 8; ++L) {
      for (int d = 1; d <= 8; ++d) {
        double v = gap_bound({s, L, d, e});
        CHECK(gap_bound({s, L, d + 1, e}) <= v);
        CHECK(gap_bound({s, L + 1, d, e}) >= v);
      }
    }
  }
}

TEST_CASE("NLU bound identity for shifted exponential") {
  for (int L = 1; L <= 8; ++L) {
    double shift = 0.3, rate = 2.0;
    auto d = make_shifted_exponential(shift, rate);
    double mean_minus_shift = 1.0 / rate;
    double expect = (L > 1 ? 2 * shift : shift) +
                    mean_minus_shift * (harmonic_number(L) + harmonic_number(L - 1));
    CHECK(gap_bound({GapSetting::kNluNonpreemptive, L, 1, d}) ==
          doctest::Approx(expect).epsilon(1e-12));
    CHECK(gap_bound({GapSetting::kNluNonpreemptive, L, 1, d}) <=
          shift * 2 + mean_minus_shift * (harmonic_number(L) + harmonic_number(L - 1)) + 1e-12);
  }
}

TEST_CASE("exponential settings reject other laws") {
  auto nlu = make_shifted_exponential(0.1, 1.0);
  CHECK_THROWS_AS(gap_bound({GapSetting::kExpPreemptiveGeneral, 5, 3, nlu}), UnsupportedSetting);
  CHECK_THROWS_AS(gap_bound({GapSetting::kExpNonpreemptiveDminGeL, 3, 3, nlu}), UnsupportedSetting);
  CHECK_THROWS_AS(gap_bound({GapSetting::kExpPreemptiveGeneral, 0, 3, make_exponential(1.0)}),
                  UnsupportedSetting);
}

TEST_CASE("setting names round-trip") {
  for (auto s : all_gap_settings()) CHECK(parse_gap_setting(to_string(s)) == s);
  CHECK(all_gap_settings().size() == 7);
  CHECK_THROWS_AS(parse_gap_setting("nope"), UnsupportedSetting);
}

TEST_CASE("harmonic-log estimate is display-only and bounds the harmonic sum") {
  CHECK_FALSE(harmonic_log_estimate(3, 3, 50).has_value());
  auto est = harmonic_log_estimate(5, 3, 50);
  REQUIRE(est.has_value());
  CHECK(*est == doctest::Approx((std::log(4.0 / 3) + 1) / 50));
  CHECK(*est >= gap_bound({GapSetting::kExpPreemptiveGeneral, 5, 3, make_exponential(50)}));
}

TEST_CASE("verdict examples") {
  CHECK(verdict(0.0114, 0.0005, 0.02) == Verdict::kWithin);
  CHECK(verdict(0.05, 0.001, 0.02) == Verdict::kViolated);
  CHECK(verdict(0.021, 0.002, 0.02) == Verdict::kInconclusive);
  CHECK(verdict(0.02, 0.0, 0.02) == Verdict::kWithin);
  CHECK_THROWS_AS(verdict(0.01, -1.0, 0.02), std::invalid_argument);
  CHECK(to_string(Verdict::kWithin) == "within");
}

TEST_CASE("bound table covers every setting") {
  auto rows = bound_table(5, 3, make_exponential(50));
  CHECK(rows.size() == all_gap_settings().size());
  for (const auto& r : rows) CHECK(r.value.has_value());
  auto nlu_rows = bound_table(3, 3, make_shifted_exponential(0.008, 50 / 0.6));
  int missing = 0;
  for (const auto& r : nlu_rows) missing += r.value ? 0 : 1;
  CHECK(missing > 0);
  for (const auto& r : nlu_rows)
    if (!r.value) CHECK_FALSE(r.note.empty());
}

}
