#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "redshard/distributions.hpp"

namespace redshard {

enum class GapSetting {
  kExpPreemptiveGeneral,
  kExpNonpreemptiveDminGeL,
  kExpNonpreemptiveGeneral,
  kNluNonpreemptive,
  kNluPreemptive,
  kNsuRepetitionNonpreemptive,
  kExpPreemptiveDminGeL,
};

GapSetting parse_gap_setting(std::string_view text);
std::string to_string(GapSetting s);
std::vector<GapSetting> all_gap_settings();

struct GapBoundQuery {
  GapSetting setting = GapSetting::kExpPreemptiveGeneral;
  int threads = 1;  // L
  int d_min = 1;
  DownloadDist dist = Exponential{1.0};
};

/// Extra average flow time the setting's policy may incur over the optimum;
/// 0 means delay-optimal. Exponential settings need an exponential law
/// (UnsupportedSetting otherwise).
double gap_bound(const GapBoundQuery& q);

/// (1/mu) * (ln((L-1)/d_min) + 1): display-only upper estimate of the
/// preemptive harmonic sum. Empty when d_min >= L.
std::optional<double> harmonic_log_estimate(int threads, int d_min, double mu);

enum class Verdict { kWithin, kViolated, kInconclusive };
std::string to_string(Verdict v);

/// violated: measured - 3se > bound; inconclusive: measured > bound but the
/// 3se band reaches it; within otherwise.
Verdict verdict(double measured_gap, double std_err, double bound);

struct BoundRow {
  GapSetting setting;
  std::optional<double> value;
  std::string note;  // reason when value is empty
};

std::vector<BoundRow> bound_table(int threads, int d_min, const DownloadDist& dist);

}  // namespace redshard
