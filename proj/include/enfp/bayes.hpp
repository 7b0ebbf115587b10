#pragma once

// Bayesian conditional ENFP estimate omega_hat: a sum over positive trials
// of per-trial contributions G built from 1 - h(z).
//
// Type A: 1 - h at one designated endpoint (any single endpoint bounds the
// probability that all of them are null). Type B: sum over endpoints.
// The same number estimates the unconditional bound omega and the
// conditional ENFP given the observed z values.

#include "enfp/gmodel.hpp"
#include "enfp/trial.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace enfp {

enum class EndpointSelection
{
  // Endpoint index 1.
  first,
  // The endpoint with the largest z, which gives the smallest contribution.
  tightest
};

std::string_view to_string(EndpointSelection s);
EndpointSelection parse_endpoint_selection(std::string_view s);

struct PositiveTrialResult
{
  std::string trial_id;
  int m = 1;
  FailureType failure_type = FailureType::B;
  std::vector<double> z_values;
  // h at each z, frozen when the trial was classified.
  std::vector<double> h_values;
  std::string stratum;

  void validate() const;
};

// Classifies the record and, if it is positive, freezes h under the model.
// Throws cannot_classify for records that cannot be classified and
// invalid_argument for negative trials.
PositiveTrialResult make_positive_result(const TrialRecord& record, const PriorModel& model);

// Uses the frozen h values.
double trial_contribution(const PositiveTrialResult& trial,
                          EndpointSelection selection = EndpointSelection::first);

// Audit path: recomputes h from z under the given model.
double trial_contribution(const PositiveTrialResult& trial,
                          const PriorModel& model,
                          EndpointSelection selection = EndpointSelection::first);

double omega_hat(std::span<const PositiveTrialResult> positives,
                 EndpointSelection selection = EndpointSelection::first);
double omega_hat(std::span<const PositiveTrialResult> positives,
                 const PriorModel& model,
                 EndpointSelection selection = EndpointSelection::first);

struct StratifiedOmega
{
  std::map<std::string, double> per_stratum;
  double total = 0.0;
};

// Recomputes each trial's contribution under its stratum's model. Throws
// missing_stratum when a stratum has no model. Strata with no positives
// contribute 0 when listed in models.
StratifiedOmega omega_hat_stratified(std::span<const PositiveTrialResult> positives,
                                     const std::map<std::string, PriorModel>& models,
                                     EndpointSelection selection = EndpointSelection::first);

} // namespace enfp
