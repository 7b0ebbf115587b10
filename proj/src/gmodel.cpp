#include "enfp/gmodel.hpp"

#include "enfp/error.hpp"
#include "enfp/normal.hpp"
#include "enfp/parallel.hpp"
#include "enfp/posterior.hpp"
#include "enfp/rng.hpp"
#include "enfp/spline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <limits>
#include <numeric>

namespace enfp {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double neg_inf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t bootstrap_stream = 0xb0075742ULL;

MatrixXd make_basis(std::span<const double> theta, int df)
{
  MatrixXd q = natural_spline_basis(theta, df);
  q.rowwise() -= q.colwise().mean();
  Eigen::JacobiSVD<MatrixXd> svd(q, Eigen::ComputeThinU);
  return svd.matrixU();
}

// Row-scaled component likelihoods: L_ij = exp(log_scale_i) * p(i, j).
struct LikelihoodMatrix
{
  MatrixXd p;
  VectorXd log_scale;
};

LikelihoodMatrix build_likelihood(const ObservationSet& obs,
                                  std::span<const double> theta)
{
  const auto n = static_cast<Eigen::Index>(obs.size());
  const auto nj = static_cast<Eigen::Index>(theta.size());
  LikelihoodMatrix lm{ MatrixXd(n, nj), VectorXd(n) };

  Eigen::Index i = 0;
  for (double z : obs.exact_z) {
    double best = neg_inf;
    for (Eigen::Index j = 0; j < nj; ++j) {
      const double lp = normal_log_pdf(z - theta[j]);
      lm.p(i, j) = lp;
      best = std::max(best, lp);
    }
    for (Eigen::Index j = 0; j < nj; ++j)
      lm.p(i, j) = std::exp(lm.p(i, j) - best);
    lm.log_scale(i) = best;
    ++i;
  }
  for (const auto& iv : obs.censored) {
    double best = 0.0;
    for (Eigen::Index j = 0; j < nj; ++j) {
      const double pr = normal_interval(iv.low - theta[j], iv.high - theta[j]);
      lm.p(i, j) = pr;
      best = std::max(best, pr);
    }
    require(best > 0.0,
            ErrorKind::data,
            fmt::format("censored interval ({}, {}) has no likelihood on the "
                        "theta grid",
                        iv.low, iv.high));
    lm.p.row(i) /= best;
    lm.log_scale(i) = std::log(best);
    ++i;
  }
  return lm;
}

VectorXd softmax(const VectorXd& u)
{
  const double top = u.maxCoeff();
  VectorXd e = (u.array() - top).exp();
  return e / e.sum();
}

struct Evaluation
{
  double objective = neg_inf;
  double loglik = neg_inf;
  VectorXd grad;
  MatrixXd hess;
};

class PenalizedObjective
{
public:
  PenalizedObjective(const MatrixXd& basis,
                     const LikelihoodMatrix& lik,
                     const VectorXd& weights,
                     double c0)
    : q_(basis)
    , lik_(lik)
    , w_(weights)
    , c0_(c0)
  {
    for (Eigen::Index i = 0; i < w_.size(); ++i)
      if (w_(i) != 0.0)
        scale_term_ += static_cast<long double>(w_(i)) * lik_.log_scale(i);
  }

  VectorXd masses(const VectorXd& alpha) const { return softmax(q_ * alpha); }

  // The row scales add a constant to the log-likelihood. Leaving it out of
  // the optimized objective keeps rounding noise far below the size of the
  // final Newton steps, which the line search has to resolve.
  double scaled_loglik(const VectorXd& g) const
  {
    const VectorXd f = lik_.p * g;
    long double total = 0.0L;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      if (w_(i) == 0.0)
        continue;
      if (!(f(i) > 0.0))
        return neg_inf;
      total += static_cast<long double>(w_(i)) * std::log(f(i));
    }
    return static_cast<double>(total);
  }

  double full_objective(double value) const
  {
    return static_cast<double>(scale_term_ + value);
  }

  double to_loglik(double scaled) const
  {
    return static_cast<double>(scale_term_ + scaled);
  }

  // Penalized objective without the constant row-scale term.
  double value(const VectorXd& alpha) const
  {
    return scaled_loglik(masses(alpha)) - c0_ * alpha.norm();
  }

  Evaluation evaluate(const VectorXd& alpha) const
  {
    Evaluation ev;
    const VectorXd g = masses(alpha);
    const VectorXd f = lik_.p * g;
    const double scaled = scaled_loglik(g);
    ev.loglik = to_loglik(scaled);
    const double norm = alpha.norm();
    ev.objective = scaled - c0_ * norm;

    VectorXd r(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i)
      r(i) = w_(i) == 0.0 ? 0.0 : w_(i) / f(i);
    const double total_w = w_.sum();

    // v_j = sum_i w_i * posterior weight of grid point j for observation i.
    const VectorXd v = g.cwiseProduct(lik_.p.transpose() * r);
    const VectorXd qbar = q_.transpose() * g;
    ev.grad = q_.transpose() * (v - total_w * g);

    // m_i = Q' (posterior weights of observation i).
    MatrixXd m = lik_.p * (g.asDiagonal() * q_);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      m.row(i) /= f(i);

    ev.hess = q_.transpose() * v.asDiagonal() * q_ -
              m.transpose() * w_.asDiagonal() * m -
              total_w * (q_.transpose() * g.asDiagonal() * q_ - qbar * qbar.transpose());

    if (c0_ > 0.0 && norm > 0.0) {
      const auto p = alpha.size();
      ev.grad -= c0_ * alpha / norm;
      ev.hess -= c0_ / norm *
                 (MatrixXd::Identity(p, p) - alpha * alpha.transpose() / (norm * norm));
    }
    return ev;
  }

private:
  const MatrixXd& q_;
  const LikelihoodMatrix& lik_;
  const VectorXd& w_;
  double c0_;
  long double scale_term_ = 0.0L;
};

struct OptimizerResult
{
  VectorXd alpha;
  VectorXd g;
  double loglik = neg_inf;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string diagnostic;
  std::vector<double> trace;
};

// Damped Newton ascent with Armijo backtracking. Every accepted step
// increases the penalized objective.
OptimizerResult maximize(const PenalizedObjective& obj,
                         VectorXd alpha,
                         int max_iterations,
                         double tolerance)
{
  OptimizerResult out;
  Evaluation ev = obj.evaluate(alpha);
  if (!std::isfinite(ev.objective)) {
    out.alpha = alpha;
    out.g = obj.masses(alpha);
    out.diagnostic = "objective is not finite at the start point";
    return out;
  }
  out.trace.push_back(obj.full_objective(ev.objective));

  const auto p = alpha.size();
  while (true) {
    const double gnorm = ev.grad.norm();
    if (gnorm < tolerance) {
      out.converged = true;
      break;
    }
    if (out.iterations >= max_iterations) {
      out.diagnostic = fmt::format("iteration limit {} reached with gradient "
                                   "norm {:.3e}",
                                   max_iterations, gnorm);
      break;
    }

    const MatrixXd neg_hess = -ev.hess;
    const double scale = std::max(1.0, neg_hess.diagonal().cwiseAbs().maxCoeff());
    double damping = 0.0;
    VectorXd step;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::LLT<MatrixXd> llt(neg_hess + damping * MatrixXd::Identity(p, p));
      if (llt.info() == Eigen::Success) {
        step = llt.solve(ev.grad);
        if (step.allFinite() && step.dot(ev.grad) > 0.0)
          break;
      }
      step.resize(0);
      damping = damping == 0.0 ? 1e-8 * scale : damping * 10.0;
    }
    if (step.size() == 0)
      step = ev.grad / scale;

    const double slope = step.dot(ev.grad);
    double t = 1.0;
    bool accepted = false;
    VectorXd candidate;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      candidate = alpha + t * step;
      const double value = obj.value(candidate);
      if (value >= ev.objective + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
    }
    // Near the optimum the predicted gain drops below the rounding level of
    // the objective, which can then no longer rank steps; a full Newton step
    // is taken if it reduces the gradient norm.
    const double noise =
      64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(ev.objective));
    if (slope < noise && (!accepted || t < 1.0)) {
      const VectorXd full = alpha + step;
      if (obj.evaluate(full).grad.norm() < gnorm) {
        candidate = full;
        accepted = true;
      }
    }
    if (!accepted) {
      out.diagnostic = fmt::format("line search stalled with gradient norm "
                                   "{:.3e}",
                                   gnorm);
      break;
    }
    alpha = candidate;
    ev = obj.evaluate(alpha);
    out.trace.push_back(obj.full_objective(ev.objective));
    ++out.iterations;
  }

  out.alpha = alpha;
  out.g = obj.masses(alpha);
  out.loglik = ev.loglik;
  out.gradient_norm = ev.grad.norm();
  if (out.converged)
    out.diagnostic = fmt::format("converged in {} iterations", out.iterations);
  return out;
}

void check_observations(const ObservationSet& obs, const FitConfig& cfg)
{
  require(obs.size() > 0, ErrorKind::invalid_argument, "no observations to fit");
  require(obs.size() >= cfg.min_observations,
          ErrorKind::invalid_argument,
          fmt::format("{} observations is below the fitting floor of {}",
                      obs.size(), cfg.min_observations));
  for (double z : obs.exact_z)
    require(std::isfinite(z), ErrorKind::invalid_argument, "non-finite z value");
  for (const auto& iv : obs.censored)
    require(iv.low < iv.high,
            ErrorKind::invalid_argument,
            "censored interval must satisfy low < high");
}

std::vector<double> to_std(const VectorXd& v)
{
  return { v.data(), v.data() + v.size() };
}

PriorModel assemble(const std::vector<double>& theta,
                    const OptimizerResult& res,
                    const FitConfig& cfg,
                    std::size_t n_obs)
{
  PriorModel model;
  model.theta = theta;
  model.masses = to_std(res.g);
  model.basis_df = cfg.basis_df;
  model.penalty_c0 = cfg.penalty_c0;
  model.coefficients = to_std(res.alpha);
  model.log_likelihood = res.loglik;
  model.converged = res.converged;
  model.iterations = res.iterations;
  model.gradient_norm = res.gradient_norm;
  model.n_observations = n_obs;
  model.diagnostic = res.diagnostic;
  model.objective_trace = res.trace;
  model.config = cfg;
  return model;
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n)
{
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace

ObservationSet ObservationSet::from_records(std::span<const TrialRecord> records)
{
  ObservationSet obs;
  for (const auto& t : records)
    for (const auto& e : t.measures) {
      if (e.z)
        obs.exact_z.push_back(*e.z);
      else if (e.censor_interval)
        obs.censored.push_back(*e.censor_interval);
    }
  return obs;
}

void FitConfig::validate() const
{
  require(grid_low < 0.0 && 0.0 < grid_high,
          ErrorKind::invalid_argument,
          "theta grid must satisfy grid_low < 0 < grid_high");
  require(grid_step > 0.0, ErrorKind::invalid_argument, "grid_step must be > 0");
  require((grid_high - grid_low) / grid_step >= static_cast<double>(basis_df) + 2,
          ErrorKind::invalid_argument,
          "theta grid is too coarse for the spline basis");
  require(basis_df >= 1, ErrorKind::invalid_argument, "basis_df must be >= 1");
  require(penalty_c0 >= 0.0, ErrorKind::invalid_argument, "penalty_c0 must be >= 0");
  require(max_iterations >= 1, ErrorKind::invalid_argument, "max_iterations must be >= 1");
  require(gradient_tolerance > 0.0,
          ErrorKind::invalid_argument,
          "gradient_tolerance must be > 0");
}

std::vector<double> make_theta_grid(double low, double high, double step)
{
  require(low < high && step > 0.0, ErrorKind::invalid_argument, "bad theta grid");
  const auto n = static_cast<std::size_t>(std::floor((high - low) / step + 1e-9)) + 1;
  std::vector<double> theta(n);
  for (std::size_t j = 0; j < n; ++j) {
    theta[j] = low + static_cast<double>(j) * step;
    if (std::fabs(theta[j]) < 1e-9 * step)
      theta[j] = 0.0;
  }
  return theta;
}

PriorModel PriorModel::from_masses(std::vector<double> theta,
                                   std::vector<double> masses)
{
  PriorModel m;
  m.theta = std::move(theta);
  m.masses = std::move(masses);
  m.converged = true;
  m.validate();
  return m;
}

void PriorModel::validate() const
{
  require(!theta.empty() && theta.size() == masses.size(),
          ErrorKind::invalid_argument,
          "prior needs matching, nonempty theta and mass vectors");
  double total = 0.0;
  for (double g : masses) {
    require(g >= 0.0 && std::isfinite(g),
            ErrorKind::invalid_argument,
            "prior masses must be finite and nonnegative");
    total += g;
  }
  require(std::fabs(total - 1.0) <= 1e-12,
          ErrorKind::invalid_argument,
          fmt::format("prior masses sum to {:.17g}, not 1", total));
  if (theta.size() > 1) {
    const double step = theta[1] - theta[0];
    require(step > 0.0, ErrorKind::invalid_argument, "theta grid must ascend");
    for (std::size_t j = 1; j < theta.size(); ++j)
      require(std::fabs((theta[j] - theta[j - 1]) - step) <= 1e-12 * std::max(1.0, step),
              ErrorKind::invalid_argument,
              "theta grid spacing must be uniform");
  }
}

std::string PriorModel::id() const
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, theta.data(), theta.size() * sizeof(double));
  h = fnv1a(h, masses.data(), masses.size() * sizeof(double));
  return fmt::format("{:016x}", h);
}

PriorModel fit_g(const ObservationSet& obs, const FitConfig& cfg)
{
  cfg.validate();
  check_observations(obs, cfg);

  const auto theta = make_theta_grid(cfg.grid_low, cfg.grid_high, cfg.grid_step);
  const MatrixXd basis = make_basis(theta, cfg.basis_df);
  const LikelihoodMatrix lik = build_likelihood(obs, theta);
  const VectorXd weights = VectorXd::Ones(static_cast<Eigen::Index>(obs.size()));
  const PenalizedObjective objective(basis, lik, weights, cfg.penalty_c0);

  const VectorXd start = VectorXd::Constant(cfg.basis_df, cfg.start_value);
  const auto res = maximize(objective, start, cfg.max_iterations, cfg.gradient_tolerance);
  return assemble(theta, res, cfg, obs.size());
}

double rho_from_g(const PriorModel& model)
{
  double rho = 0.0;
  for (std::size_t j = 0; j < model.theta.size(); ++j)
    if (model.theta[j] <= 0.0)
      rho += model.masses[j];
  return std::clamp(rho, 0.0, 1.0);
}

double log_likelihood(const PriorModel& model, const ObservationSet& obs)
{
  const auto nj = model.theta.size();
  std::vector<double> terms(nj);
  auto log_sum = [&](auto&& log_component) {
    double best = neg_inf;
    for (std::size_t j = 0; j < nj; ++j) {
      terms[j] = model.masses[j] > 0.0
                   ? std::log(model.masses[j]) + log_component(model.theta[j])
                   : neg_inf;
      best = std::max(best, terms[j]);
    }
    if (best == neg_inf)
      return neg_inf;
    double s = 0.0;
    for (double t : terms)
      s += std::exp(t - best);
    return best + std::log(s);
  };

  double total = 0.0;
  for (double z : obs.exact_z)
    total += log_sum([z](double th) { return normal_log_pdf(z - th); });
  for (const auto& iv : obs.censored)
    total += log_sum([&iv](double th) {
      const double pr = normal_interval(iv.low - th, iv.high - th);
      return pr > 0.0 ? std::log(pr) : neg_inf;
    });
  return total;
}

double percentile(std::vector<double> values, double prob)
{
  require(!values.empty(), ErrorKind::invalid_argument, "percentile of empty data");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<double> masses_for_coefficients(const PriorModel& model,
                                            std::span<const double> coefficients)
{
  require(static_cast<int>(coefficients.size()) == model.basis_df,
          ErrorKind::invalid_argument,
          "coefficient count does not match the basis df");
  const MatrixXd basis = make_basis(model.theta, model.basis_df);
  const VectorXd alpha = Eigen::Map<const VectorXd>(coefficients.data(),
                                                    static_cast<Eigen::Index>(coefficients.size()));
  return to_std(softmax(basis * alpha));
}

BootstrapResult bootstrap(const ObservationSet& obs,
                          const FitConfig& cfg,
                          int replicates,
                          std::span<const double> z_grid)
{
  require(replicates >= 2, ErrorKind::invalid_argument, "bootstrap needs >= 2 replicates");
  require(std::is_sorted(z_grid.begin(), z_grid.end()),
          ErrorKind::invalid_argument,
          "z grid must ascend");
  cfg.validate();
  check_observations(obs, cfg);

  const auto theta = make_theta_grid(cfg.grid_low, cfg.grid_high, cfg.grid_step);
  const MatrixXd basis = make_basis(theta, cfg.basis_df);
  const LikelihoodMatrix lik = build_likelihood(obs, theta);
  const auto n = static_cast<Eigen::Index>(obs.size());

  // Replicates start from the full-data optimum.
  VectorXd start = VectorXd::Constant(cfg.basis_df, cfg.start_value);
  {
    const VectorXd ones = VectorXd::Ones(n);
    const PenalizedObjective full(basis, lik, ones, cfg.penalty_c0);
    const auto res = maximize(full, start, cfg.max_iterations, cfg.gradient_tolerance);
    if (res.converged)
      start = res.alpha;
  }

  struct Slot
  {
    bool ok = false;
    double rho = 0.0;
    std::vector<double> alpha;
    std::vector<double> h;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(replicates));

  parallel_for(slots.size(), cfg.threads, [&](std::size_t b) {
    Rng rng(cfg.seed, bootstrap_stream, b);
    VectorXd counts = VectorXd::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k)
      counts(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)))) += 1.0;
    const PenalizedObjective obj(basis, lik, counts, cfg.penalty_c0);
    const auto res = maximize(obj, start, cfg.max_iterations, cfg.gradient_tolerance);
    if (!res.converged)
      return;
    auto& slot = slots[b];
    slot.ok = true;
    slot.alpha = to_std(res.alpha);
    PriorModel rep;
    rep.theta = theta;
    rep.masses = to_std(res.g);
    slot.rho = rho_from_g(rep);
    const HEvaluator eval(rep);
    slot.h.reserve(z_grid.size());
    for (double z : z_grid)
      slot.h.push_back(eval(z).h);
  });

  BootstrapResult out;
  out.replicates = replicates;
  out.seed = cfg.seed;
  out.z_grid.assign(z_grid.begin(), z_grid.end());
  for (std::size_t b = 0; b < slots.size(); ++b) {
    if (!slots[b].ok) {
      ++out.failed;
      continue;
    }
    out.replicate_index.push_back(static_cast<int>(b));
    out.rho.push_back(slots[b].rho);
    out.coefficients.push_back(slots[b].alpha);
  }
  require(!out.rho.empty(),
          ErrorKind::non_convergence,
          fmt::format("all {} bootstrap replicates failed to converge", replicates));

  out.rho_ci_low = percentile(out.rho, 0.025);
  out.rho_ci_high = percentile(out.rho, 0.975);
  std::vector<double> column;
  for (std::size_t k = 0; k < z_grid.size(); ++k) {
    column.clear();
    for (const auto& s : slots)
      if (s.ok)
        column.push_back(s.h[k]);
    out.h_low.push_back(percentile(column, 0.025));
    out.h_high.push_back(percentile(column, 0.975));
  }
  return out;
}

nlohmann::json model_to_json(const PriorModel& model, const BootstrapResult* boot)
{
  nlohmann::json j;
  j["format"] = prior_model_format;
  j["model_id"] = model.id();
  j["theta"] = model.theta;
  j["masses"] = model.masses;
  j["rho"] = rho_from_g(model);
  j["basis_df"] = model.basis_df;
  j["penalty_c0"] = model.penalty_c0;
  j["coefficients"] = model.coefficients;
  j["log_likelihood"] = model.log_likelihood;
  j["converged"] = model.converged;
  j["iterations"] = model.iterations;
  j["gradient_norm"] = model.gradient_norm;
  j["n_observations"] = model.n_observations;
  j["diagnostic"] = model.diagnostic;
  j["objective_trace"] = model.objective_trace;
  if (model.config) {
    const auto& c = *model.config;
    j["config"] = { { "grid_low", c.grid_low },
                    { "grid_high", c.grid_high },
                    { "grid_step", c.grid_step },
                    { "basis_df", c.basis_df },
                    { "penalty_c0", c.penalty_c0 },
                    { "max_iterations", c.max_iterations },
                    { "gradient_tolerance", c.gradient_tolerance },
                    { "seed", c.seed },
                    { "min_observations", c.min_observations },
                    { "start_value", c.start_value } };
  }
  if (boot) {
    j["bootstrap"] = { { "replicates", boot->replicates },
                       { "failed", boot->failed },
                       { "seed", boot->seed },
                       { "replicate_index", boot->replicate_index },
                       { "rho", boot->rho },
                       { "rho_ci", { boot->rho_ci_low, boot->rho_ci_high } },
                       { "coefficients", boot->coefficients },
                       { "z_grid", boot->z_grid },
                       { "h_low", boot->h_low },
                       { "h_high", boot->h_high } };
  }
  return j;
}

PriorModel model_from_json(const nlohmann::json& j, std::optional<BootstrapResult>* boot)
{
  PriorModel m;
  try {
    require(j.value("format", std::string()) == prior_model_format,
            ErrorKind::data,
            fmt::format("unsupported model format (expected '{}')", prior_model_format));
    m.theta = j.at("theta").get<std::vector<double>>();
    m.masses = j.at("masses").get<std::vector<double>>();
    m.basis_df = j.value("basis_df", 0);
    m.penalty_c0 = j.value("penalty_c0", 0.0);
    m.coefficients = j.value("coefficients", std::vector<double>{});
    m.log_likelihood = j.value("log_likelihood", 0.0);
    m.converged = j.value("converged", false);
    m.iterations = j.value("iterations", 0);
    m.gradient_norm = j.value("gradient_norm", 0.0);
    m.n_observations = j.value("n_observations", std::size_t{ 0 });
    m.diagnostic = j.value("diagnostic", std::string());
    m.objective_trace = j.value("objective_trace", std::vector<double>{});
    if (j.contains("config")) {
      const auto& c = j.at("config");
      FitConfig cfg;
      cfg.grid_low = c.at("grid_low").get<double>();
      cfg.grid_high = c.at("grid_high").get<double>();
      cfg.grid_step = c.at("grid_step").get<double>();
      cfg.basis_df = c.at("basis_df").get<int>();
      cfg.penalty_c0 = c.at("penalty_c0").get<double>();
      cfg.max_iterations = c.at("max_iterations").get<int>();
      cfg.gradient_tolerance = c.at("gradient_tolerance").get<double>();
      cfg.seed = c.at("seed").get<std::uint64_t>();
      cfg.min_observations = c.at("min_observations").get<std::size_t>();
      cfg.start_value = c.value("start_value", 1.0);
      m.config = cfg;
    }
    if (boot && j.contains("bootstrap")) {
      const auto& b = j.at("bootstrap");
      BootstrapResult r;
      r.replicates = b.at("replicates").get<int>();
      r.failed = b.at("failed").get<int>();
      r.seed = b.at("seed").get<std::uint64_t>();
      r.replicate_index = b.at("replicate_index").get<std::vector<int>>();
      r.rho = b.at("rho").get<std::vector<double>>();
      const auto ci = b.at("rho_ci").get<std::vector<double>>();
      require(ci.size() == 2, ErrorKind::data, "rho_ci must have two entries");
      r.rho_ci_low = ci[0];
      r.rho_ci_high = ci[1];
      r.coefficients = b.at("coefficients").get<std::vector<std::vector<double>>>();
      r.z_grid = b.at("z_grid").get<std::vector<double>>();
      r.h_low = b.at("h_low").get<std::vector<double>>();
      r.h_high = b.at("h_high").get<std::vector<double>>();
      *boot = std::move(r);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, fmt::format("malformed model JSON: {}", e.what()));
  }
  try {
    m.validate();
  } catch (const Error& e) {
    fail(ErrorKind::data, fmt::format("invalid model: {}", e.what()));
  }
  if (j.contains("model_id"))
    require(j.at("model_id").get<std::string>() == m.id(),
            ErrorKind::data,
            "model_id does not match the stored masses");
  return m;
}

void save_model(const std::string& path, const PriorModel& model, const BootstrapResult* boot)
{
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::data, fmt::format("cannot write '{}'", path));
  out << model_to_json(model, boot).dump(1) << '\n';
}

PriorModel load_model(const std::string& path, std::optional<BootstrapResult>* boot)
{
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::data, fmt::format("cannot open model file '{}'", path));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, fmt::format("'{}' is not valid JSON: {}", path, e.what()));
  }
  return model_from_json(j, boot);
}

} // namespace enfp
