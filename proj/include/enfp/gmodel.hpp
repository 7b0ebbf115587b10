#pragma once

// Semi-parametric g-modeling deconvolution.
//
// The effect-size prior is discretized on a uniform theta grid and
// parameterized as an exponential family, g(alpha) = exp(Q alpha) / sum,
// with Q a centered, orthonormalized natural cubic spline basis. alpha
// maximizes
//
//     sum_i log f_i(alpha) - c0 * ||alpha||
//
// where f_i = sum_j g_j phi(z_i - theta_j) for an exact observation and
// f_i = sum_j g_j [Phi(high - theta_j) - Phi(low - theta_j)] for an
// interval-censored one.

#include "enfp/trial.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace enfp {

struct ObservationSet
{
  std::vector<double> exact_z;
  std::vector<Interval> censored;

  std::size_t size() const { return exact_z.size() + censored.size(); }

  // Every endpoint of every record contributes one observation.
  static ObservationSet from_records(std::span<const TrialRecord> records);
};

struct FitConfig
{
  double grid_low = -6.0;
  double grid_high = 15.0;
  double grid_step = 0.05;
  int basis_df = 6;
  double penalty_c0 = 1.0;
  int max_iterations = 500;
  double gradient_tolerance = 1e-8;
  std::uint64_t seed = 0;
  std::size_t min_observations = 10;
  // Optimizer start: every coefficient set to this value.
  double start_value = 1.0;
  unsigned threads = 0;

  void validate() const;
};

// theta_j = low + j * step; the point nearest zero is snapped to exactly 0.
std::vector<double> make_theta_grid(double low, double high, double step);

struct PriorModel
{
  std::vector<double> theta;
  std::vector<double> masses;
  int basis_df = 0;
  double penalty_c0 = 0.0;
  std::vector<double> coefficients;
  double log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::size_t n_observations = 0;
  std::string diagnostic;
  // Penalized objective at the start point and after each accepted step.
  std::vector<double> objective_trace;
  std::optional<FitConfig> config;

  // Discrete prior with explicit support points (uniformly spaced).
  static PriorModel from_masses(std::vector<double> theta,
                                std::vector<double> masses);

  void validate() const;

  // Stable content hash of (theta, masses), hex encoded.
  std::string id() const;
};

PriorModel fit_g(const ObservationSet& obs, const FitConfig& cfg);

// Mass at theta <= 0; a grid point exactly at zero counts as null.
double rho_from_g(const PriorModel& model);

// Unpenalized mixture log-likelihood of obs under the model's masses.
double log_likelihood(const PriorModel& model, const ObservationSet& obs);

struct BootstrapResult
{
  int replicates = 0;
  int failed = 0;
  std::uint64_t seed = 0;
  // Successful replicates, in replicate-index order.
  std::vector<int> replicate_index;
  std::vector<double> rho;
  std::vector<std::vector<double>> coefficients;
  double rho_ci_low = 0.0;
  double rho_ci_high = 0.0;
  std::vector<double> z_grid;
  std::vector<double> h_low;
  std::vector<double> h_high;
};

// Nonparametric bootstrap: exact and censored observations are resampled as
// one pooled multiset and refit per replicate. Percentile (2.5%, 97.5%)
// intervals for rho and for h on z_grid. Deterministic given cfg.seed.
BootstrapResult bootstrap(const ObservationSet& obs,
                          const FitConfig& cfg,
                          int replicates,
                          std::span<const double> z_grid);

// Masses implied by replicate coefficients under the model's basis.
std::vector<double> masses_for_coefficients(const PriorModel& model,
                                            std::span<const double> coefficients);

// Type-7 percentile of unsorted data.
double percentile(std::vector<double> values, double prob);

inline constexpr const char* prior_model_format = "enfp-prior-model/1";

nlohmann::json model_to_json(const PriorModel& model,
                             const BootstrapResult* boot = nullptr);
PriorModel model_from_json(const nlohmann::json& doc,
                           std::optional<BootstrapResult>* boot = nullptr);

void save_model(const std::string& path,
                const PriorModel& model,
                const BootstrapResult* boot = nullptr);
PriorModel load_model(const std::string& path,
                      std::optional<BootstrapResult>* boot = nullptr);

} // namespace enfp
