#include "enfp/trial.hpp"

#include "enfp/error.hpp"
#include "enfp/normal.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace enfp {

namespace {

// Critical values written to two decimals (2.24 for 2.2414) are accepted as
// holding the declared level.
constexpr double critical_rounding_slack = 5e-3;

} // namespace

std::string_view to_string(FailureType t)
{
  return t == FailureType::A ? "A" : "B";
}

std::string_view to_string(PolicyMode mode)
{
  return mode == PolicyMode::alpha_level ? "alpha_level" : "h_threshold";
}

std::string_view to_string(Outcome outcome)
{
  return outcome == Outcome::positive ? "positive" : "negative";
}

FailureType parse_failure_type(std::string_view s)
{
  if (s == "A" || s == "a")
    return FailureType::A;
  if (s == "B" || s == "b")
    return FailureType::B;
  fail(ErrorKind::invalid_argument,
       fmt::format("unknown failure type '{}' (expected A or B)", s));
}

PolicyMode parse_policy_mode(std::string_view s)
{
  if (s == "alpha_level")
    return PolicyMode::alpha_level;
  if (s == "h_threshold")
    return PolicyMode::h_threshold;
  fail(ErrorKind::invalid_argument, fmt::format("unknown policy mode '{}'", s));
}

Outcome parse_outcome(std::string_view s)
{
  if (s == "positive" || s == "pos" || s == "1")
    return Outcome::positive;
  if (s == "negative" || s == "neg" || s == "0")
    return Outcome::negative;
  fail(ErrorKind::invalid_argument, fmt::format("unknown outcome '{}'", s));
}

void EfficacyMeasure::validate() const
{
  require(endpoint_index >= 1,
          ErrorKind::invalid_argument,
          "endpoint_index must be >= 1");
  require(z.has_value() != censor_interval.has_value(),
          ErrorKind::invalid_argument,
          fmt::format("endpoint {}: exactly one of z / censor interval must "
                      "be present",
                      endpoint_index));
  if (z)
    require(std::isfinite(*z),
            ErrorKind::invalid_argument,
            fmt::format("endpoint {}: z is not finite", endpoint_index));
  if (censor_interval)
    require(censor_interval->low < censor_interval->high,
            ErrorKind::invalid_argument,
            fmt::format("endpoint {}: censor interval must satisfy low < high",
                        endpoint_index));
  if (p_value)
    require(*p_value > 0.0 && *p_value <= 1.0,
            ErrorKind::domain,
            fmt::format("endpoint {}: p-value outside (0, 1]", endpoint_index));
}

void TrialRecord::validate() const
{
  const auto where = [this] { return fmt::format("trial '{}'", trial_id); };
  require(m >= 1, ErrorKind::invalid_argument, where() + ": m must be >= 1");
  require(measures.size() == static_cast<std::size_t>(m),
          ErrorKind::invalid_argument,
          fmt::format("{}: {} measures for m = {}", where(), measures.size(), m));
  for (std::size_t j = 0; j < measures.size(); ++j) {
    measures[j].validate();
    require(measures[j].endpoint_index == static_cast<int>(j) + 1,
            ErrorKind::invalid_argument,
            where() + ": endpoint indices must run 1..m without gaps");
  }
  if (!policy)
    return;
  const auto& p = *policy;
  if (p.mode == PolicyMode::alpha_level) {
    require(p.nominal_alpha.has_value(),
            ErrorKind::invalid_argument,
            where() + ": alpha_level policy needs nominal_alpha");
    require(*p.nominal_alpha > 0.0 && *p.nominal_alpha < 1.0,
            ErrorKind::invalid_argument,
            where() + ": nominal_alpha must lie in (0, 1)");
    if (!p.critical_z.empty()) {
      require(p.critical_z.size() == measures.size(),
              ErrorKind::invalid_argument,
              where() + ": one critical value per endpoint required");
      const double floor_z = critical_z(*p.nominal_alpha, m, failure_type);
      for (double c : p.critical_z)
        require(c >= floor_z - critical_rounding_slack,
                ErrorKind::invalid_argument,
                fmt::format("{}: critical value {} is laxer than the "
                            "multiplicity-adjusted {:.6f}",
                            where(), c, floor_z));
    }
  } else {
    require(p.h_floor.has_value() && *p.h_floor > 0.0 && *p.h_floor < 1.0,
            ErrorKind::invalid_argument,
            where() + ": h_threshold policy needs h_floor in (0, 1)");
    require(p.critical_z.empty() || p.critical_z.size() == measures.size(),
            ErrorKind::invalid_argument,
            where() + ": one critical value per endpoint required");
  }
}

double standardize(double beta_hat, double c, double sigma)
{
  require(sigma > 0.0,
          ErrorKind::invalid_scale,
          fmt::format("standard error must be positive (got {})", sigma));
  return (beta_hat - c) / sigma;
}

double p_to_z(double p_two_sided, bool direction_favorable)
{
  require(p_two_sided > 0.0 && p_two_sided <= 1.0,
          ErrorKind::domain,
          fmt::format("two-sided p-value must lie in (0, 1] (got {})",
                      p_two_sided));
  const double magnitude = normal_upper_quantile(0.5 * p_two_sided);
  return direction_favorable ? magnitude : -magnitude;
}

double z_to_p(double z)
{
  return 2.0 * normal_sf(std::fabs(z));
}

Interval censored_interval(double p0)
{
  require(p0 > 0.0 && p0 < 1.0,
          ErrorKind::domain,
          fmt::format("censoring threshold p0 must lie in (0, 1) (got {})", p0));
  const double c = normal_upper_quantile(0.5 * p0);
  return { -c, c };
}

double critical_z(double alpha, int m, FailureType t)
{
  require(alpha > 0.0 && alpha < 1.0,
          ErrorKind::invalid_argument,
          fmt::format("alpha must lie in (0, 1) (got {})", alpha));
  require(m >= 1, ErrorKind::invalid_argument, "m must be >= 1");
  const double per_endpoint = t == FailureType::A ? alpha / m : alpha;
  return normal_upper_quantile(per_endpoint);
}

std::vector<double> critical_values(double alpha, int m, FailureType t)
{
  return std::vector<double>(static_cast<std::size_t>(m),
                             critical_z(alpha, m, t));
}

TrialRecord with_criticals(TrialRecord trial)
{
  if (trial.policy && trial.policy->critical_z.empty() &&
      trial.policy->mode == PolicyMode::alpha_level &&
      trial.policy->nominal_alpha) {
    trial.policy->critical_z = critical_values(
      *trial.policy->nominal_alpha, trial.m, trial.failure_type);
  }
  return trial;
}

bool rejects(FailureType t,
             std::span<const double> z,
             std::span<const double> critical)
{
  if (t == FailureType::A) {
    for (std::size_t j = 0; j < z.size(); ++j)
      if (z[j] > critical[j])
        return true;
    return false;
  }
  for (std::size_t j = 0; j < z.size(); ++j)
    if (!(z[j] > critical[j]))
      return false;
  return true;
}

Outcome classify_with_intervals(const TrialRecord& trial)
{
  require(trial.policy.has_value(),
          ErrorKind::cannot_classify,
          fmt::format("trial '{}' has no rejection policy", trial.trial_id));
  const TrialRecord resolved = with_criticals(trial);
  resolved.validate();
  const auto& crit = resolved.policy->critical_z;
  require(crit.size() == resolved.measures.size(),
          ErrorKind::cannot_classify,
          fmt::format("trial '{}' has no critical values (h_threshold policies "
                      "must be resolved against a prior model first)",
                      trial.trial_id));

  // A censored endpoint decides its own rejection when its interval lies
  // wholly on one side of the critical value.
  int rejected = 0;
  int undecided = 0;
  const int m = static_cast<int>(resolved.measures.size());
  for (int j = 0; j < m; ++j) {
    const auto& e = resolved.measures[j];
    if (e.z) {
      rejected += *e.z > crit[j];
    } else if (e.censor_interval->low >= crit[j]) {
      ++rejected;
    } else if (e.censor_interval->high > crit[j]) {
      ++undecided;
    }
  }
  const bool any = resolved.failure_type == FailureType::A;
  if (any ? rejected > 0 : rejected + undecided < m)
    return any ? Outcome::positive : Outcome::negative;
  require(undecided == 0,
          ErrorKind::cannot_classify,
          fmt::format("trial '{}' has a censored endpoint that straddles its critical value",
                      trial.trial_id));
  return any ? Outcome::negative : Outcome::positive;
}

Outcome classify_rejection(const TrialRecord& trial)
{
  for (const auto& e : trial.measures)
    require(e.z.has_value(),
            ErrorKind::cannot_classify,
            fmt::format("trial '{}' endpoint {} is censored", trial.trial_id, e.endpoint_index));
  return classify_with_intervals(trial);
}

} // namespace enfp
