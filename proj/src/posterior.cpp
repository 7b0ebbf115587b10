#include "enfp/posterior.hpp"

#include "enfp/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <ostream>

namespace enfp {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

struct MassSplit
{
  bool positive = false;
  bool null = false;
};

MassSplit mass_split(const PriorModel& model)
{
  MassSplit s;
  for (std::size_t j = 0; j < model.theta.size(); ++j) {
    if (model.masses[j] <= 0.0)
      continue;
    (model.theta[j] > 0.0 ? s.positive : s.null) = true;
  }
  return s;
}

} // namespace

HEvaluator::HEvaluator(const PriorModel& model)
{
  for (std::size_t j = 0; j < model.theta.size(); ++j) {
    if (model.masses[j] <= 0.0)
      continue;
    const bool pos = model.theta[j] > 0.0;
    theta_.push_back(model.theta[j]);
    log_mass_.push_back(std::log(model.masses[j]));
    positive_.push_back(pos ? 1 : 0);
    (pos ? has_positive_ : has_null_) = true;
  }
}

HValue HEvaluator::operator()(double z) const
{
  require(std::isfinite(z), ErrorKind::invalid_argument, "z must be finite");
  if (!has_positive_)
    return { 0.0, 1.0, false };
  if (!has_null_)
    return { 1.0, 0.0, false };

  // log of g_j exp(-(z - theta_j)^2 / 2); the normal constant cancels.
  const auto n = theta_.size();
  double shift = neg_inf;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = z - theta_[j];
    shift = std::max(shift, log_mass_[j] - 0.5 * d * d);
  }
  double a = 0.0;
  double b = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = z - theta_[j];
    const double w = std::exp(log_mass_[j] - 0.5 * d * d - shift);
    (positive_[j] ? a : b) += w;
  }
  HValue v;
  v.h = a / (a + b);
  v.null_prob = b / (a + b);
  v.saturated = v.h == 0.0 || v.h == 1.0;
  return v;
}

HValue h_evaluate(const PriorModel& model, double z)
{
  return HEvaluator(model)(z);
}

double h_probability(const PriorModel& model, double z)
{
  return h_evaluate(model, z).h;
}

std::vector<double> make_z_grid(double low, double high, double step)
{
  require(low < high && step > 0.0, ErrorKind::invalid_argument, "bad z grid");
  const auto n = static_cast<std::size_t>(std::floor((high - low) / step + 1e-9)) + 1;
  std::vector<double> z(n);
  for (std::size_t k = 0; k < n; ++k)
    z[k] = low + static_cast<double>(k) * step;
  return z;
}

std::vector<double> default_z_grid()
{
  return make_z_grid(-1.0, 6.0, 0.01);
}

HCurve h_curve(const PriorModel& model,
               const std::vector<double>& z_grid,
               const BootstrapResult* boot)
{
  require(std::is_sorted(z_grid.begin(), z_grid.end()),
          ErrorKind::invalid_argument,
          "z grid must be ascending");
  HCurve c;
  c.z_grid = z_grid;
  c.model_id = model.id();
  c.h_values.reserve(z_grid.size());
  const HEvaluator eval(model);
  for (double z : z_grid) {
    const auto v = eval(z);
    c.h_values.push_back(v.h);
    c.saturated_points += v.saturated ? 1 : 0;
  }
  if (!boot)
    return c;

  std::vector<double> low;
  std::vector<double> high;
  if (boot->z_grid == z_grid) {
    low = boot->h_low;
    high = boot->h_high;
  } else {
    require(!boot->coefficients.empty(),
            ErrorKind::invalid_argument,
            "bootstrap result has no replicate coefficients");
    std::vector<std::vector<double>> reps;
    PriorModel rep;
    rep.theta = model.theta;
    for (const auto& coef : boot->coefficients) {
      rep.masses = masses_for_coefficients(model, coef);
      const HEvaluator eval(rep);
      std::vector<double> h;
      h.reserve(z_grid.size());
      for (double z : z_grid)
        h.push_back(eval(z).h);
      reps.push_back(std::move(h));
    }
    std::vector<double> column(reps.size());
    for (std::size_t k = 0; k < z_grid.size(); ++k) {
      for (std::size_t r = 0; r < reps.size(); ++r)
        column[r] = reps[r][k];
      low.push_back(percentile(column, 0.025));
      high.push_back(percentile(column, 0.975));
    }
  }
  for (std::size_t k = 0; k < z_grid.size(); ++k) {
    low[k] = std::min(low[k], c.h_values[k]);
    high[k] = std::max(high[k], c.h_values[k]);
  }
  c.ci_low = std::move(low);
  c.ci_high = std::move(high);
  return c;
}

double z_for_h(const PriorModel& model, double h0)
{
  const auto split = mass_split(model);
  const char* range = !split.positive ? "[0, 0]" : !split.null ? "[1, 1]" : "(0, 1)";
  require(split.positive && split.null && h0 > 0.0 && h0 < 1.0,
          ErrorKind::out_of_range,
          fmt::format("h = {} is not attainable; the curve spans {}", h0, range));

  double lo = -1.0;
  double hi = 1.0;
  while (h_probability(model, lo) >= h0) {
    hi = lo;
    lo *= 2.0;
    require(lo > -1e300, ErrorKind::out_of_range, "failed to bracket h0");
  }
  while (h_probability(model, hi) < h0) {
    lo = hi;
    hi = hi <= 0.0 ? 1.0 : hi * 2.0;
    require(hi < 1e300, ErrorKind::out_of_range, "failed to bracket h0");
  }
  while (hi - lo >= 1e-8) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi)
      break;
    (h_probability(model, mid) >= h0 ? hi : lo) = mid;
  }
  return hi;
}

TrialRecord resolve_h_policy(TrialRecord trial, const PriorModel& model)
{
  if (!trial.policy || trial.policy->mode != PolicyMode::h_threshold)
    return trial;
  require(trial.policy->h_floor.has_value(),
          ErrorKind::invalid_argument,
          fmt::format("trial '{}': h_threshold policy without h_floor", trial.trial_id));
  const double z = z_for_h(model, *trial.policy->h_floor);
  trial.policy->critical_z.assign(static_cast<std::size_t>(trial.m), z);
  return trial;
}

void write_hcurve_csv(std::ostream& out, const HCurve& curve)
{
  out << "z,h,ci_low,ci_high\n";
  for (std::size_t k = 0; k < curve.z_grid.size(); ++k) {
    out << fmt::format("{},{}", curve.z_grid[k], curve.h_values[k]);
    if (curve.ci_low && curve.ci_high)
      out << fmt::format(",{},{}\n", (*curve.ci_low)[k], (*curve.ci_high)[k]);
    else
      out << ",,\n";
  }
}

std::string hcurve_svg(const HCurve& curve)
{
  constexpr double width = 800.0;
  constexpr double height = 500.0;
  constexpr double left = 70.0;
  constexpr double right = 20.0;
  constexpr double top = 20.0;
  constexpr double bottom = 60.0;
  require(curve.z_grid.size() >= 2, ErrorKind::invalid_argument, "curve needs two points");

  const double z0 = curve.z_grid.front();
  const double z1 = curve.z_grid.back();
  auto px = [&](double z) { return left + (z - z0) / (z1 - z0) * (width - left - right); };
  auto py = [&](double h) { return top + (1.0 - h) * (height - top - bottom); };
  auto polyline = [&](const std::vector<double>& ys, const char* style) {
    std::string pts;
    for (std::size_t k = 0; k < ys.size(); ++k)
      pts += fmt::format("{:.2f},{:.2f} ", px(curve.z_grid[k]), py(ys[k]));
    return fmt::format("<polyline fill=\"none\" style=\"{}\" points=\"{}\"/>\n", style, pts);
  };

  std::string s = fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" "
                              "height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
                              width, height);
  s += "<rect width=\"100%\" height=\"100%\" style=\"fill:#ffffff\"/>\n";
  s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" "
                   "style=\"fill:none;stroke:#000000;stroke-width:1\"/>\n",
                   left, top, width - left - right, height - top - bottom);
  for (int i = 0; i <= 5; ++i) {
    const double h = i / 5.0;
    s += fmt::format("<line x1=\"{0}\" x2=\"{1}\" y1=\"{2:.2f}\" y2=\"{2:.2f}\" "
                     "style=\"stroke:#dddddd;stroke-width:1\"/>\n",
                     left, width - right, py(h));
    s += fmt::format("<text x=\"{}\" y=\"{:.2f}\" style=\"font:12px sans-serif;"
                     "text-anchor:end\">{:.1f}</text>\n",
                     left - 6, py(h) + 4, h);
  }
  const double span = z1 - z0;
  const double tick = span > 20 ? 5.0 : span > 8 ? 2.0 : span > 3 ? 1.0 : 0.5;
  for (double z = std::ceil(z0 / tick) * tick; z <= z1 + 1e-9; z += tick)
    s += fmt::format("<text x=\"{:.2f}\" y=\"{}\" style=\"font:12px sans-serif;"
                     "text-anchor:middle\">{:g}</text>\n",
                     px(z), height - bottom + 18, z);
  s += fmt::format("<text x=\"{}\" y=\"{}\" style=\"font:14px sans-serif;"
                   "text-anchor:middle\">z</text>\n",
                   left + (width - left - right) / 2, height - 15);
  s += fmt::format("<text x=\"18\" y=\"{0}\" transform=\"rotate(-90 18 {0})\" "
                   "style=\"font:14px sans-serif;text-anchor:middle\">h(z)</text>\n",
                   top + (height - top - bottom) / 2);
  if (curve.ci_low && curve.ci_high) {
    const char* dashed = "stroke:#000000;stroke-width:1;stroke-dasharray:6,4";
    s += polyline(*curve.ci_low, dashed);
    s += polyline(*curve.ci_high, dashed);
  }
  s += polyline(curve.h_values, "stroke:#000000;stroke-width:2");
  s += "</svg>\n";
  return s;
}

} // namespace enfp
