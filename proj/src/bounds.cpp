#include "enfp/bounds.hpp"

#include "enfp/error.hpp"
#include "enfp/normal.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace enfp {

namespace {

void check_rho(double rho)
{
  require(rho >= 0.0 && rho <= 1.0,
          ErrorKind::invalid_argument,
          fmt::format("rho must lie in [0, 1], got {}", rho));
}

long long snapped_floor(double x)
{
  const double nearest = std::round(x);
  if (std::fabs(x - nearest) <= 1e-9 * std::max(1.0, std::fabs(x)))
    return static_cast<long long>(nearest);
  return static_cast<long long>(std::floor(x));
}

} // namespace

void FreqTrial::validate() const
{
  require(m >= 1, ErrorKind::invalid_argument, "m must be >= 1");
  require(alpha > 0.0 && alpha < 1.0,
          ErrorKind::invalid_argument,
          fmt::format("alpha must lie in (0, 1), got {}", alpha));
}

double delta(double rho, int m, FailureType t)
{
  check_rho(rho);
  require(m >= 1, ErrorKind::invalid_argument, "m must be >= 1");
  return t == FailureType::A ? rho : m * rho;
}

double tau_hat_single(double rho_hat, std::span<const double> alphas)
{
  check_rho(rho_hat);
  double sum = 0.0;
  for (double a : alphas) {
    require(a > 0.0 && a < 1.0,
            ErrorKind::invalid_argument,
            fmt::format("alpha must lie in (0, 1), got {}", a));
    sum += a;
  }
  return rho_hat * sum;
}

double tau_hat_mixed(double rho_hat, std::span<const FreqTrial> trials)
{
  check_rho(rho_hat);
  if (trials.empty())
    return 0.0;
  double sum_delta = 0.0;
  double sum_alpha = 0.0;
  bool all_single_b = true;
  for (const auto& t : trials) {
    t.validate();
    sum_delta += delta(rho_hat, t.m, t.failure_type);
    sum_alpha += t.alpha;
    all_single_b = all_single_b && t.m == 1 && t.failure_type == FailureType::B;
  }
  return tau_from_sums(rho_hat, trials.size(), sum_delta, sum_alpha, all_single_b);
}

double tau_from_sums(double rho_hat,
                     std::size_t n,
                     double sum_delta,
                     double sum_alpha,
                     bool all_single_b)
{
  if (n == 0)
    return 0.0;
  // (1/N) (N rho) (sum alpha) is rho * sum alpha; evaluating it that way
  // avoids the N rho / N rounding.
  if (all_single_b)
    return rho_hat * sum_alpha;
  return sum_delta / static_cast<double>(n) * sum_alpha;
}

double total_error(double tau0, double rho_hat)
{
  require(tau0 > 0.0, ErrorKind::invalid_argument, "tau0 must be > 0");
  require(rho_hat > 0.0 && rho_hat <= 1.0,
          ErrorKind::invalid_argument,
          "rho must lie in (0, 1]");
  return tau0 / rho_hat;
}

long long capacity(double tau0, double rho_hat, double alpha_fixed, CapacityMode mode)
{
  require(alpha_fixed > 0.0 && alpha_fixed < 1.0,
          ErrorKind::invalid_argument,
          "alpha must lie in (0, 1)");
  const double total = total_error(tau0, rho_hat);
  if (mode == CapacityMode::rounded_total_error)
    return snapped_floor(std::round(total) / alpha_fixed);
  return snapped_floor(total / alpha_fixed);
}

StratifiedBound tau_hat_stratified(std::span<const FreqTrial> trials,
                                   const std::map<std::string, double>& rho_by_stratum)
{
  std::map<std::string, std::vector<FreqTrial>> groups;
  for (const auto& t : trials)
    groups[t.stratum].push_back(t);
  StratifiedBound out;
  for (const auto& [name, group] : groups) {
    const auto it = rho_by_stratum.find(name);
    require(it != rho_by_stratum.end(),
            ErrorKind::missing_stratum,
            fmt::format("no rho for stratum '{}'", name));
    const double tau = tau_hat_mixed(it->second, group);
    out.per_stratum[name] = tau;
    out.total += tau;
  }
  return out;
}

FreqTrial freq_trial_from_record(const TrialRecord& record)
{
  FreqTrial t;
  t.m = record.m;
  t.failure_type = record.failure_type;
  t.stratum = record.stratum.value_or("");
  require(record.policy.has_value(),
          ErrorKind::data,
          fmt::format("trial '{}' has no rejection policy", record.trial_id));
  const auto& p = *record.policy;
  if (p.nominal_alpha) {
    t.alpha = *p.nominal_alpha;
  } else {
    require(!p.critical_z.empty(),
            ErrorKind::data,
            fmt::format("trial '{}' has no alpha level or critical values", record.trial_id));
    // Endpoint levels are Pr[Z > c] at theta = 0. Type A rejects on any
    // endpoint (union bound); type B needs all, so its worst case is the
    // laxest single endpoint.
    double sum = 0.0;
    double laxest = 0.0;
    for (double c : p.critical_z) {
      sum += normal_sf(c);
      laxest = std::max(laxest, normal_sf(c));
    }
    t.alpha = record.failure_type == FailureType::A ? sum : laxest;
  }
  t.validate();
  return t;
}

} // namespace enfp
