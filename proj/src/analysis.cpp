#include "redshard/analysis.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "redshard/errors.hpp"

namespace redshard {

namespace {

struct SettingName {
  GapSetting setting;
  const char* name;
};

constexpr std::array<SettingName, 7> kSettings{{
    {GapSetting::kExpPreemptiveGeneral, "exp_preemptive_general"},
    {GapSetting::kExpNonpreemptiveDminGeL, "exp_nonpreemptive_dmin_ge_L"},
    {GapSetting::kExpNonpreemptiveGeneral, "exp_nonpreemptive_general"},
    {GapSetting::kNluNonpreemptive, "nlu_nonpreemptive"},
    {GapSetting::kNluPreemptive, "nlu_preemptive"},
    {GapSetting::kNsuRepetitionNonpreemptive, "nsu_repetition_nonpreemptive"},
    {GapSetting::kExpPreemptiveDminGeL, "exp_preemptive_dmin_ge_L"},
}};

double exponential_rate(const DownloadDist& dist, GapSetting s) {
  if (!is_exponential(dist))
    throw UnsupportedSetting(to_string(s) + " needs an exponential law, got " + describe(dist));
  return std::get<Exponential>(dist).rate;
}

}  // namespace

GapSetting parse_gap_setting(std::string_view text) {
  for (const auto& [s, name] : kSettings)
    if (text == name) return s;
  throw UnsupportedSetting("unknown setting '" + std::string(text) + "'");
}

std::string to_string(GapSetting s) {
  for (const auto& [id, name] : kSettings)
    if (id == s) return name;
  throw std::logic_error("unnamed gap setting");
}

std::vector<GapSetting> all_gap_settings() {
  std::vector<GapSetting> out;
  for (const auto& [s, name] : kSettings) out.push_back(s);
  return out;
}

double gap_bound(const GapBoundQuery& q) {
  if (q.threads < 1 || q.d_min < 1)
    throw UnsupportedSetting("gap_bound needs L >= 1 and d_min >= 1");
  validate(q.dist);
  switch (q.setting) {
    case GapSetting::kExpPreemptiveGeneral: {
      double mu = exponential_rate(q.dist, q.setting);
      double sum = 0.0;
      for (int l = q.d_min; l <= q.threads - 1; ++l) sum += 1.0 / l;
      return sum / mu;
    }
    case GapSetting::kExpNonpreemptiveDminGeL:
      return 1.0 / exponential_rate(q.dist, q.setting);
    case GapSetting::kExpNonpreemptiveGeneral:
      return gap_bound({GapSetting::kExpPreemptiveGeneral, q.threads, q.d_min, q.dist}) +
             gap_bound({GapSetting::kExpNonpreemptiveDminGeL, q.threads, q.d_min, q.dist});
    case GapSetting::kNluNonpreemptive:
    case GapSetting::kNluPreemptive:
      return expected_extreme(q.dist, q.threads, Extreme::kMax).value +
             expected_extreme(q.dist, q.threads - 1, Extreme::kMax).value;
    case GapSetting::kNsuRepetitionNonpreemptive:
    case GapSetting::kExpPreemptiveDminGeL:
      return 0.0;
  }
  throw std::logic_error("gap_bound: unhandled setting");
}

std::optional<double> harmonic_log_estimate(int threads, int d_min, double mu) {
  if (d_min >= threads) return std::nullopt;
  return (std::log(static_cast<double>(threads - 1) / d_min) + 1.0) / mu;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kWithin: return "within";
    case Verdict::kViolated: return "violated";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "?";
}

Verdict verdict(double measured_gap, double std_err, double bound) {
  if (std_err < 0) throw std::invalid_argument("verdict: negative standard error");
  if (measured_gap - 3.0 * std_err > bound) return Verdict::kViolated;
  if (measured_gap > bound) return Verdict::kInconclusive;
  return Verdict::kWithin;
}

std::vector<BoundRow> bound_table(int threads, int d_min, const DownloadDist& dist) {
  std::vector<BoundRow> rows;
  for (GapSetting s : all_gap_settings()) {
    try {
      rows.push_back({s, gap_bound({s, threads, d_min, dist}), ""});
    } catch (const Error& e) {
      rows.push_back({s, std::nullopt, e.what()});
    }
  }
  return rows;
}

}  // namespace redshard
