#include "enfp/bayes.hpp"

#include "enfp/error.hpp"
#include "enfp/posterior.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace enfp {

namespace {

std::size_t designated_endpoint(const PositiveTrialResult& t, EndpointSelection s)
{
  if (s == EndpointSelection::first)
    return 0;
  return static_cast<std::size_t>(
    std::max_element(t.z_values.begin(), t.z_values.end()) - t.z_values.begin());
}

template<class NullProb>
double contribution(const PositiveTrialResult& t, EndpointSelection s, NullProb null_prob)
{
  t.validate();
  if (t.failure_type == FailureType::A)
    return null_prob(designated_endpoint(t, s));
  double sum = 0.0;
  for (std::size_t j = 0; j < t.z_values.size(); ++j)
    sum += null_prob(j);
  return sum;
}

} // namespace

std::string_view to_string(EndpointSelection s)
{
  return s == EndpointSelection::first ? "first" : "tightest";
}

EndpointSelection parse_endpoint_selection(std::string_view s)
{
  if (s == "first")
    return EndpointSelection::first;
  if (s == "tightest")
    return EndpointSelection::tightest;
  fail(ErrorKind::invalid_argument,
       fmt::format("endpoint selection must be 'first' or 'tightest', got '{}'", s));
}

void PositiveTrialResult::validate() const
{
  require(m >= 1, ErrorKind::invalid_argument, "m must be >= 1");
  require(z_values.size() == static_cast<std::size_t>(m),
          ErrorKind::invalid_argument,
          fmt::format("trial '{}': need {} z values, got {}", trial_id, m, z_values.size()));
  require(h_values.empty() || h_values.size() == z_values.size(),
          ErrorKind::invalid_argument,
          fmt::format("trial '{}': h values do not match z values", trial_id));
  for (double h : h_values)
    require(h >= 0.0 && h <= 1.0,
            ErrorKind::invalid_argument,
            fmt::format("trial '{}': h value {} outside [0, 1]", trial_id, h));
}

PositiveTrialResult make_positive_result(const TrialRecord& record, const PriorModel& model)
{
  const TrialRecord resolved = resolve_h_policy(record, model);
  require(classify_rejection(resolved) == Outcome::positive,
          ErrorKind::invalid_argument,
          fmt::format("trial '{}' is not positive", record.trial_id));
  PositiveTrialResult r;
  r.trial_id = record.trial_id;
  r.m = record.m;
  r.failure_type = record.failure_type;
  r.stratum = record.stratum.value_or("");
  for (const auto& e : record.measures) {
    r.z_values.push_back(*e.z);
    r.h_values.push_back(h_probability(model, *e.z));
  }
  return r;
}

double trial_contribution(const PositiveTrialResult& trial, EndpointSelection selection)
{
  require(trial.h_values.size() == trial.z_values.size(),
          ErrorKind::invalid_argument,
          fmt::format("trial '{}' has no frozen h values", trial.trial_id));
  return contribution(trial, selection, [&](std::size_t j) { return 1.0 - trial.h_values[j]; });
}

double trial_contribution(const PositiveTrialResult& trial,
                          const PriorModel& model,
                          EndpointSelection selection)
{
  return contribution(trial, selection, [&](std::size_t j) {
    return h_evaluate(model, trial.z_values[j]).null_prob;
  });
}

double omega_hat(std::span<const PositiveTrialResult> positives, EndpointSelection selection)
{
  double sum = 0.0;
  for (const auto& t : positives)
    sum += trial_contribution(t, selection);
  return sum;
}

double omega_hat(std::span<const PositiveTrialResult> positives,
                 const PriorModel& model,
                 EndpointSelection selection)
{
  double sum = 0.0;
  for (const auto& t : positives)
    sum += trial_contribution(t, model, selection);
  return sum;
}

StratifiedOmega omega_hat_stratified(std::span<const PositiveTrialResult> positives,
                                     const std::map<std::string, PriorModel>& models,
                                     EndpointSelection selection)
{
  StratifiedOmega out;
  for (const auto& [name, model] : models)
    out.per_stratum[name] = 0.0;
  for (const auto& t : positives) {
    const auto it = models.find(t.stratum);
    require(it != models.end(),
            ErrorKind::missing_stratum,
            fmt::format("no prior model for stratum '{}'", t.stratum));
    out.per_stratum[t.stratum] += trial_contribution(t, it->second, selection);
  }
  for (const auto& [name, value] : out.per_stratum)
    out.total += value;
  return out;
}

} // namespace enfp
