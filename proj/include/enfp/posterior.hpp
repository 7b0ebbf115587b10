#pragma once

// h-probability h(z) = Pr[theta > 0 | Z = z] under a discrete prior, with
// Z | theta ~ N(theta, 1). A grid point at theta = 0 is null.

#include "enfp/gmodel.hpp"
#include "enfp/trial.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace enfp {

struct HValue
{
  double h = 0.0;
  // 1 - h, evaluated directly so it keeps relative accuracy when h ~ 1.
  double null_prob = 1.0;
  // Both components carry mass but h rounded to exactly 0 or 1.
  bool saturated = false;
};

// Evaluates h repeatedly under one model with the log-masses precomputed.
class HEvaluator
{
public:
  explicit HEvaluator(const PriorModel& model);
  // Log-space evaluation; valid for any finite z.
  HValue operator()(double z) const;

private:
  std::vector<double> theta_;
  std::vector<double> log_mass_;
  std::vector<char> positive_;
  bool has_positive_ = false;
  bool has_null_ = false;
};

HValue h_evaluate(const PriorModel& model, double z);
double h_probability(const PriorModel& model, double z);

struct HCurve
{
  std::vector<double> z_grid;
  std::vector<double> h_values;
  std::optional<std::vector<double>> ci_low;
  std::optional<std::vector<double>> ci_high;
  std::string model_id;
  std::size_t saturated_points = 0;
};

std::vector<double> make_z_grid(double low, double high, double step);
// [-1, 6] in steps of 0.01.
std::vector<double> default_z_grid();

// Bands come from the bootstrap: reused directly when its grid matches,
// otherwise regenerated from the stored replicate coefficients. Bands are
// widened where needed so they always bracket the point estimate.
HCurve h_curve(const PriorModel& model,
               const std::vector<double>& z_grid,
               const BootstrapResult* boot = nullptr);

// Smallest z with h(z) >= h0, to within 1e-8. Throws out_of_range when h0
// lies outside the open range of the curve.
double z_for_h(const PriorModel& model, double h0);

// For h_threshold policies, fills per-endpoint critical values with
// z_for_h(h_floor). Other trials are returned unchanged.
TrialRecord resolve_h_policy(TrialRecord trial, const PriorModel& model);

void write_hcurve_csv(std::ostream& out, const HCurve& curve);
// Self-contained 800x500 SVG: h solid, bootstrap bands dashed.
std::string hcurve_svg(const HCurve& curve);

} // namespace enfp
