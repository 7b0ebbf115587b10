#pragma once

// Frequentist ENFP upper bounds (tau_hat) and trial-capacity arithmetic.
//
// tau_hat for a mixed population of N trials is the product of sums
//
//     (1/N) * (sum_i delta(rho, m_i, t_i)) * (sum_i alpha_i)
//
// with delta(rho, m, A) = rho and delta(rho, m, B) = m * rho. When every
// trial has a single endpoint it reduces to rho * sum_i alpha_i.

#include "enfp/trial.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace enfp {

struct FreqTrial
{
  int m = 1;
  FailureType failure_type = FailureType::B;
  double alpha = 0.0;
  std::string stratum;

  void validate() const;
};

// May exceed 1 for type B: it bounds Pr[trial null] by a union bound.
double delta(double rho, int m, FailureType t);

// rho * sum(alphas); 0 for an empty list.
double tau_hat_single(double rho_hat, std::span<const double> alphas);

// (1/n) * sum_delta * sum_alpha; rho * sum_alpha when every trial is (1, B)
// so that the single-endpoint reduction is exact.
double tau_from_sums(double rho_hat,
                     std::size_t n,
                     double sum_delta,
                     double sum_alpha,
                     bool all_single_b);

// Product-of-sums estimator; 0 for an empty population.
double tau_hat_mixed(double rho_hat, std::span<const FreqTrial> trials);

enum class CapacityMode
{
  // floor(tau0 / (rho * alpha)), with ratios within 1e-9 (relative) of an
  // integer snapped to it before flooring.
  exact,
  // Round the total error tau0 / rho to an integer first, then
  // floor(total / alpha).
  rounded_total_error
};

long long capacity(double tau0,
                   double rho_hat,
                   double alpha_fixed,
                   CapacityMode mode = CapacityMode::exact);

// tau0 / rho, the total alpha that may be spent on (1, B) trials.
double total_error(double tau0, double rho_hat);

struct StratifiedBound
{
  std::map<std::string, double> per_stratum;
  double total = 0.0;
};

// Each stratum uses its own rho. Throws missing_stratum when a trial's
// stratum has no rho.
StratifiedBound tau_hat_stratified(std::span<const FreqTrial> trials,
                                   const std::map<std::string, double>& rho_by_stratum);

// Frequentist inputs from records: trial-level alpha is the policy's
// nominal_alpha, or, failing that, recovered from the critical values.
FreqTrial freq_trial_from_record(const TrialRecord& record);

} // namespace enfp
