#pragma once

// Trial domain types and standardization of raw results into Z statistics.
//
// Effect sizes are standardized as theta = (beta - c) / sigma, so every
// failure region is anchored at 0 in theta-space: an endpoint is null when
// theta <= 0. Type I error rates are one-sided (rejection in the favorable
// direction only).

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace enfp {

// A = intersection null (all endpoints null), B = union null (any endpoint
// null). Single-endpoint trials are typed B.
enum class FailureType
{
  A,
  B
};

enum class PolicyMode
{
  alpha_level,
  h_threshold
};

enum class Outcome
{
  positive,
  negative
};

std::string_view to_string(FailureType t);
std::string_view to_string(PolicyMode mode);
std::string_view to_string(Outcome outcome);
FailureType parse_failure_type(std::string_view s);
PolicyMode parse_policy_mode(std::string_view s);
Outcome parse_outcome(std::string_view s);

struct Interval
{
  double low = 0.0;
  double high = 0.0;

  bool contains(double x) const { return low < x && x < high; }
  bool operator==(const Interval&) const = default;
};

struct EfficacyMeasure
{
  int endpoint_index = 1;
  // Exactly one of z / censor_interval is set.
  std::optional<double> z;
  std::optional<Interval> censor_interval;
  bool direction_favorable = true;
  // Two-sided p-value the record was supplied with, if any. For censored
  // measures this is the threshold p0 of "p >= p0".
  std::optional<double> p_value;

  bool censored() const { return censor_interval.has_value(); }
  void validate() const;

  bool operator==(const EfficacyMeasure&) const = default;
};

struct RejectionPolicy
{
  PolicyMode mode = PolicyMode::alpha_level;
  // One critical value per endpoint; the trial rejects on z > critical.
  // May be left empty in alpha_level mode and filled by with_criticals().
  std::vector<double> critical_z;
  std::optional<double> nominal_alpha;
  std::optional<double> h_floor;

  bool operator==(const RejectionPolicy&) const = default;
};

struct TrialRecord
{
  std::string trial_id;
  int m = 1;
  FailureType failure_type = FailureType::B;
  std::vector<EfficacyMeasure> measures;
  std::optional<RejectionPolicy> policy;
  std::optional<std::string> stratum;
  std::optional<Outcome> outcome;

  // Throws Error(invalid_argument) on a violated invariant.
  void validate() const;

  bool operator==(const TrialRecord&) const = default;
};

// Z = (beta_hat - c) / sigma.
double standardize(double beta_hat, double c, double sigma);

// Signed z from a two-sided p-value: sign * Phi^-1(1 - p/2).
double p_to_z(double p_two_sided, bool direction_favorable);

// Exact inverse of p_to_z on |z|: 2 * (1 - Phi(|z|)).
double z_to_p(double z);

// |Z| < Phi^-1(1 - p0/2), the "p >= p0" censoring convention.
Interval censored_interval(double p0 = 0.05);

// Per-endpoint critical value holding the trial-level one-sided level alpha:
// Bonferroni alpha/m for type A, alpha per endpoint for type B.
double critical_z(double alpha, int m, FailureType t);
std::vector<double> critical_values(double alpha, int m, FailureType t);

// Fills empty per-endpoint critical values from nominal_alpha.
TrialRecord with_criticals(TrialRecord trial);

// Type A: any endpoint beyond its critical value. Type B: every endpoint.
bool rejects(FailureType t,
             std::span<const double> z,
             std::span<const double> critical);

// Every endpoint must carry an observed z.
Outcome classify_rejection(const TrialRecord& trial);

// Also accepts censored endpoints whose interval lies wholly on one side of
// the critical value; throws cannot_classify when the outcome is undecided.
Outcome classify_with_intervals(const TrialRecord& trial);

} // namespace enfp
