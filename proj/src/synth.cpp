#include "enfp/synth.hpp"

#include "enfp/error.hpp"
#include "enfp/normal.hpp"
#include "enfp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace enfp {

SynthCorpus make_synthetic_corpus(const SynthConfig& cfg)
{
  require(cfg.rho >= 0.0 && cfg.rho <= 1.0, ErrorKind::invalid_argument, "rho must lie in [0, 1]");
  require(cfg.alt_sd > 0.0, ErrorKind::invalid_argument, "alt_sd must be > 0");
  require(cfg.p0 > 0.0 && cfg.p0 < 1.0, ErrorKind::invalid_argument, "p0 must lie in (0, 1)");
  const std::size_t total = cfg.exact + cfg.censored;
  require(total > 0, ErrorKind::invalid_argument, "corpus would be empty");

  constexpr double null_theta[] = { 0.0, -0.5, -1.0 };
  constexpr double null_cdf[] = { 0.4, 0.7, 1.0 };
  std::vector<double> theta(total);
  std::vector<double> z(total);
  for (std::size_t i = 0; i < total; ++i) {
    Rng rng(cfg.seed, 0, i);
    if (rng.uniform() < cfg.rho) {
      const double u = rng.uniform();
      theta[i] = null_theta[std::upper_bound(std::begin(null_cdf), std::end(null_cdf), u) -
                            std::begin(null_cdf)];
    } else {
      // Inversion of the normal restricted to theta > 0.
      const double lo = normal_cdf(-cfg.alt_mean / cfg.alt_sd);
      const double u = lo + (1.0 - lo) * rng.uniform();
      theta[i] = cfg.alt_mean + cfg.alt_sd * normal_quantile(u);
      if (theta[i] <= 0.0)
        theta[i] = 1e-6;
    }
    z[i] = theta[i] + rng.normal();
  }

  const Interval band = censored_interval(cfg.p0);
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < total; ++i)
    if (band.contains(z[i]))
      eligible.push_back(i);
  require(eligible.size() >= cfg.censored,
          ErrorKind::invalid_argument,
          fmt::format("only {} draws have p >= {}; cannot censor {}", eligible.size(), cfg.p0,
                      cfg.censored));
  Rng pick(cfg.seed, 1, 0);
  for (std::size_t k = 0; k < cfg.censored; ++k) {
    const auto j = k + static_cast<std::size_t>(pick.below(eligible.size() - k));
    std::swap(eligible[k], eligible[j]);
  }
  std::vector<char> censor(total, 0);
  for (std::size_t k = 0; k < cfg.censored; ++k)
    censor[eligible[k]] = 1;

  SynthCorpus out;
  out.theta = theta;
  const double crit = critical_z(cfg.alpha, 1, FailureType::B);
  for (std::size_t i = 0; i < total; ++i) {
    TrialRecord r;
    r.trial_id = fmt::format("SYN{:05d}", i + 1);
    EfficacyMeasure e;
    if (censor[i]) {
      e.censor_interval = band;
      e.p_value = cfg.p0;
      r.outcome = Outcome::negative;
    } else {
      e.p_value = z_to_p(z[i]);
      e.direction_favorable = z[i] >= 0.0;
      e.z = p_to_z(*e.p_value, e.direction_favorable);
      r.outcome = *e.z > crit ? Outcome::positive : Outcome::negative;
    }
    r.measures.push_back(e);
    RejectionPolicy p;
    p.nominal_alpha = cfg.alpha;
    r.policy = p;
    out.records.push_back(std::move(r));
  }
  return out;
}

} // namespace enfp
