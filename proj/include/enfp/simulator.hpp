#pragma once

// Monte Carlo oracle for synthetic trial populations with known effect
// sizes. Each trial draws (m, t), endpoint effects theta_j i.i.d. from the
// true prior, a pre-trial signal that drives its alpha level, and
// z_j = theta_j + noise with shared-factor correlation across endpoints.
// Realized false positives (positive trials whose parameter lies in the
// failure region) are compared with tau_hat and omega_hat, and the
// concordance assumptions are checked empirically.

#include "enfp/gmodel.hpp"
#include "enfp/trial.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace enfp {

enum class PolicyKind
{
  fixed_alpha,
  // Higher signal, larger alpha.
  signal_concordant,
  // Higher signal, smaller alpha: violates the concordance assumptions.
  adversarial
};

std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view s);

struct PolicySpec
{
  PolicyKind kind = PolicyKind::fixed_alpha;
  // Trial-level one-sided levels; sorted ascending on validation.
  std::vector<double> alpha_menu{ 0.025 };
  // Standard deviation of the noise in the signal.
  double signal_noise = 1.0;
  // Ascending signal cut points, alpha_menu.size() - 1 of them. Empty: use
  // equal-probability quantiles of the signal from a seeded pilot sample.
  std::vector<double> thresholds;

  void validate() const;
};

struct DesignShare
{
  int m = 1;
  FailureType failure_type = FailureType::B;
  double weight = 1.0;
};

struct ScenarioConfig
{
  std::string name = "scenario";
  // Explicit grid prior for theta (uniform spacing, possibly zero masses).
  std::vector<double> prior_theta;
  std::vector<double> prior_masses;
  std::size_t n_trials = 1000;
  std::vector<DesignShare> designs{ {} };
  double endpoint_correlation = 0.0;
  PolicySpec policy;
  std::uint64_t seed = 0;
  int replicates = 1;
  unsigned threads = 0;

  void validate() const;
  PriorModel true_prior() const;
};

// Parses a scenario document. The prior is either explicit
// {"theta": [...], "masses": [...]} or a mixture
// {"step": s, "null_theta": [...], "null_weights": [...], "rho": r,
//  "alternative": {"mean": mu, "sd": sd, "low": a, "high": b}}
// whose alternative is a normal discretized on the step grid.
ScenarioConfig scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::string& path);

// Grid prior rho * null + (1 - rho) * discretized N(mean, sd) on [low, high].
void set_mixture_prior(ScenarioConfig& cfg,
                       double step,
                       std::span<const double> null_theta,
                       std::span<const double> null_weights,
                       double rho,
                       double alt_mean,
                       double alt_sd,
                       double alt_low,
                       double alt_high);

struct SimulatedTrial
{
  TrialRecord record;
  std::vector<double> theta;
  double alpha = 0.0;
  double signal = 0.0;
};

// One replicate of the population, deterministic in (seed, replicate).
std::vector<SimulatedTrial> simulate_population(const ScenarioConfig& cfg, int replicate = 0);

// Type A: null when every theta_j <= 0. Type B: when any theta_j <= 0.
bool in_failure_region(FailureType t, std::span<const double> theta);

std::size_t oracle_count_fp(std::span<const SimulatedTrial> trials);

struct MeanComparison
{
  std::string name;
  bool applicable = false;
  // Mean alpha (or null probability) in the null / non-null groups.
  double null_mean = 0.0;
  double nonnull_mean = 0.0;
  std::size_t null_count = 0;
  std::size_t nonnull_count = 0;
  double se = 0.0;
  bool pass = true;
};

struct BinFailure
{
  std::string group;
  double z_low = 0.0;
  double positive_null_rate = 0.0;
  double negative_null_rate = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double se = 0.0;
};

struct BinnedComparison
{
  std::string name;
  double bin_width = 0.25;
  std::size_t bins_checked = 0;
  std::size_t bins_skipped = 0;
  std::vector<BinFailure> failures;
  bool pass = true;
};

struct ConcordanceReport
{
  // E[alpha | null] <= E[alpha | non-null] over single-endpoint trials.
  MeanComparison first;
  // E[alpha | failure region] <= E[alpha | complement] over all trials.
  MeanComparison second;
  // Pr[null | z bin, positive] <= Pr[null | z bin, negative], m = 1.
  BinnedComparison third;
  // Same per (m, t, endpoint), endpoint-level nulls.
  BinnedComparison fourth;

  std::size_t failures() const;
};

ConcordanceReport check_concordance(std::span<const SimulatedTrial> trials);

struct McEstimate
{
  double mean = 0.0;
  // Standard error of the mean across replicates; absent for one replicate.
  std::optional<double> se;
};

struct AlphaCalibration
{
  double alpha = 0.0;
  std::size_t null_trials = 0;
  std::size_t null_positives = 0;
};

struct SimulationReport
{
  std::string scenario;
  std::uint64_t seed = 0;
  int replicates = 0;
  std::size_t n_trials = 0;
  double true_rho = 0.0;
  double rho_for_bound = 0.0;
  std::string bound_model_id;
  bool bound_model_is_truth = true;

  McEstimate realized_fp;
  McEstimate positive_count;
  McEstimate tau_hat;
  McEstimate omega_hat;
  // Mean of 1 - h over positive trials' designated endpoints and the
  // realized null fraction among positives, single-endpoint trials only.
  std::optional<double> mean_null_prob_positive;
  std::optional<double> null_fraction_positive;

  ConcordanceReport concordance;
  // Single-endpoint null trials per menu level (all theta = 0 scenarios
  // make this a calibration check).
  std::vector<AlphaCalibration> calibration;

  bool tau_violation = false;
  bool omega_violation = false;
  bool omega_below_tau = true;
};

// Runs every replicate and reduces in replicate order. rho_for_bound
// defaults to the true null mass; model_for_bound to the true prior.
SimulationReport validate_bounds(const ScenarioConfig& cfg,
                                 std::optional<double> rho_for_bound = std::nullopt,
                                 const PriorModel* model_for_bound = nullptr);

nlohmann::json report_to_json(const SimulationReport& report);
SimulationReport report_from_json(const nlohmann::json& doc);
std::string report_table(const SimulationReport& report);

} // namespace enfp
