#include "enfp/simulator.hpp"

#include "enfp/bounds.hpp"
#include "enfp/error.hpp"
#include "enfp/normal.hpp"
#include "enfp/parallel.hpp"
#include "enfp/posterior.hpp"
#include "enfp/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <numeric>

namespace enfp {

namespace {

constexpr std::uint64_t pilot_stream = 0x9170ULL;
constexpr std::size_t pilot_size = 20000;
constexpr double bin_width = 0.25;

struct Moments
{
  std::size_t n = 0;
  long double sum = 0.0L;
  long double sumsq = 0.0L;

  void add(double x)
  {
    ++n;
    sum += x;
    sumsq += x * x;
  }
  void merge(const Moments& o)
  {
    n += o.n;
    sum += o.sum;
    sumsq += o.sumsq;
  }
  double mean() const { return n ? static_cast<double>(sum / static_cast<long double>(n)) : 0.0; }
  // Variance of the mean.
  double var_mean() const
  {
    if (n < 2)
      return 0.0;
    const auto nn = static_cast<long double>(n);
    const long double var = std::max(0.0L, (sumsq - sum * sum / nn) / (nn - 1.0L));
    return static_cast<double>(var / nn);
  }
};

struct BinCounts
{
  std::size_t pos = 0;
  std::size_t pos_null = 0;
  std::size_t neg = 0;
  std::size_t neg_null = 0;

  void merge(const BinCounts& o)
  {
    pos += o.pos;
    pos_null += o.pos_null;
    neg += o.neg;
    neg_null += o.neg_null;
  }
};

// (m, t, endpoint, bin); m = 0 marks the single-endpoint (third) family.
using BinKey = std::array<long, 4>;

struct Diagnostics
{
  Moments first_null;
  Moments first_nonnull;
  Moments second_null;
  Moments second_nonnull;
  std::map<BinKey, BinCounts> third;
  std::map<BinKey, BinCounts> fourth;

  void merge(const Diagnostics& o)
  {
    first_null.merge(o.first_null);
    first_nonnull.merge(o.first_nonnull);
    second_null.merge(o.second_null);
    second_nonnull.merge(o.second_nonnull);
    for (const auto& [k, v] : o.third)
      third[k].merge(v);
    for (const auto& [k, v] : o.fourth)
      fourth[k].merge(v);
  }
};

long bin_of(double z)
{
  return static_cast<long>(std::floor(z / bin_width));
}

// One trial without the record wrapper; shared by every simulation path.
struct LeanTrial
{
  std::size_t design = 0;
  std::size_t level = 0;
  std::vector<double> theta;
  std::vector<double> z;
  double signal = 0.0;
  bool positive = false;
};

class Sampler
{
public:
  explicit Sampler(const ScenarioConfig& cfg)
    : cfg_(cfg)
    , menu_(cfg.policy.alpha_menu)
  {
    std::sort(menu_.begin(), menu_.end());
    double acc = 0.0;
    for (double g : cfg.prior_masses)
      prior_cdf_.push_back(acc += g);
    acc = 0.0;
    for (const auto& d : cfg.designs)
      design_cdf_.push_back(acc += d.weight);
    for (auto& c : design_cdf_)
      c /= acc;
    for (const auto& d : cfg.designs) {
      std::vector<std::vector<double>> per_level;
      for (double a : menu_)
        per_level.push_back(critical_values(a, d.m, d.failure_type));
      critical_.push_back(std::move(per_level));
    }
    thresholds_ = cfg.policy.thresholds;
    if (thresholds_.empty() && menu_.size() > 1)
      thresholds_ = pilot_thresholds();
  }

  const std::vector<double>& menu() const { return menu_; }
  const std::vector<double>& critical(std::size_t design, std::size_t level) const
  {
    return critical_[design][level];
  }

  void draw(Rng& rng, LeanTrial& out) const
  {
    draw_parameters(rng, out);
    out.level = level_for(out.signal);
    const auto& d = cfg_.designs[out.design];
    const double rc = cfg_.endpoint_correlation;
    const double common = rng.normal();
    out.z.resize(out.theta.size());
    for (std::size_t j = 0; j < out.theta.size(); ++j)
      out.z[j] = out.theta[j] + std::sqrt(rc) * common + std::sqrt(1.0 - rc) * rng.normal();
    out.positive = rejects(d.failure_type, out.z, critical_[out.design][out.level]);
  }

private:
  double draw_theta(Rng& rng) const
  {
    const double u = rng.uniform() * prior_cdf_.back();
    auto it = std::upper_bound(prior_cdf_.begin(), prior_cdf_.end(), u);
    if (it == prior_cdf_.end())
      --it;
    auto j = static_cast<std::size_t>(it - prior_cdf_.begin());
    while (cfg_.prior_masses[j] <= 0.0 && j > 0)
      --j;
    return cfg_.prior_theta[j];
  }

  void draw_parameters(Rng& rng, LeanTrial& out) const
  {
    const double u = rng.uniform();
    out.design = static_cast<std::size_t>(
      std::upper_bound(design_cdf_.begin(), design_cdf_.end(), u) - design_cdf_.begin());
    out.design = std::min(out.design, design_cdf_.size() - 1);
    const auto& d = cfg_.designs[out.design];
    out.theta.resize(static_cast<std::size_t>(d.m));
    for (auto& th : out.theta)
      th = draw_theta(rng);
    // The efficacy proxy is positive exactly when the trial is non-null.
    const double proxy = d.failure_type == FailureType::A
                           ? *std::max_element(out.theta.begin(), out.theta.end())
                           : *std::min_element(out.theta.begin(), out.theta.end());
    out.signal = proxy + cfg_.policy.signal_noise * rng.normal();
  }

  std::size_t level_for(double signal) const
  {
    if (cfg_.policy.kind == PolicyKind::fixed_alpha || menu_.size() == 1)
      return 0;
    const auto k = static_cast<std::size_t>(
      std::upper_bound(thresholds_.begin(), thresholds_.end(), signal) - thresholds_.begin());
    return cfg_.policy.kind == PolicyKind::adversarial ? menu_.size() - 1 - k : k;
  }

  std::vector<double> pilot_thresholds() const
  {
    std::vector<double> s(pilot_size);
    LeanTrial t;
    for (std::size_t i = 0; i < pilot_size; ++i) {
      Rng rng(cfg_.seed, pilot_stream, i);
      draw_parameters(rng, t);
      s[i] = t.signal;
    }
    std::vector<double> cuts;
    const auto k = menu_.size();
    for (std::size_t i = 1; i < k; ++i)
      cuts.push_back(percentile(s, static_cast<double>(i) / static_cast<double>(k)));
    return cuts;
  }

  const ScenarioConfig& cfg_;
  std::vector<double> menu_;
  std::vector<double> prior_cdf_;
  std::vector<double> design_cdf_;
  std::vector<std::vector<std::vector<double>>> critical_;
  std::vector<double> thresholds_;
};

Rng trial_rng(const ScenarioConfig& cfg, int replicate, std::size_t index)
{
  return Rng(cfg.seed, 1 + static_cast<std::uint64_t>(replicate), index);
}

void accumulate(Diagnostics& diag, const ScenarioConfig& cfg, const LeanTrial& t, double alpha)
{
  const auto& d = cfg.designs[t.design];
  const bool fail_region = in_failure_region(d.failure_type, t.theta);
  (fail_region ? diag.second_null : diag.second_nonnull).add(alpha);
  if (d.m == 1) {
    const bool null = t.theta[0] <= 0.0;
    (null ? diag.first_null : diag.first_nonnull).add(alpha);
    auto& b = diag.third[{ 0, 0, 0, bin_of(t.z[0]) }];
    (t.positive ? b.pos : b.neg) += 1;
    if (null)
      (t.positive ? b.pos_null : b.neg_null) += 1;
  }
  for (std::size_t j = 0; j < t.theta.size(); ++j) {
    auto& b = diag.fourth[{ d.m, d.failure_type == FailureType::A ? 0 : 1,
                            static_cast<long>(j) + 1, bin_of(t.z[j]) }];
    const bool null = t.theta[j] <= 0.0;
    (t.positive ? b.pos : b.neg) += 1;
    if (null)
      (t.positive ? b.pos_null : b.neg_null) += 1;
  }
}

MeanComparison compare_means(const std::string& name, const Moments& null, const Moments& nonnull)
{
  MeanComparison c;
  c.name = name;
  c.null_count = null.n;
  c.nonnull_count = nonnull.n;
  c.applicable = null.n > 0 && nonnull.n > 0;
  if (!c.applicable)
    return c;
  c.null_mean = null.mean();
  c.nonnull_mean = nonnull.mean();
  c.se = std::sqrt(null.var_mean() + nonnull.var_mean());
  c.pass = c.null_mean <= c.nonnull_mean + 3.0 * c.se;
  return c;
}

BinnedComparison compare_bins(const std::string& name, const std::map<BinKey, BinCounts>& bins)
{
  BinnedComparison c;
  c.name = name;
  c.bin_width = bin_width;
  for (const auto& [key, b] : bins) {
    if (b.pos == 0 || b.neg == 0) {
      ++c.bins_skipped;
      continue;
    }
    ++c.bins_checked;
    const double pp = static_cast<double>(b.pos_null) / static_cast<double>(b.pos);
    const double pn = static_cast<double>(b.neg_null) / static_cast<double>(b.neg);
    const double se = std::sqrt(pp * (1.0 - pp) / static_cast<double>(b.pos) +
                                pn * (1.0 - pn) / static_cast<double>(b.neg));
    if (pp > pn + 3.0 * se) {
      BinFailure f;
      f.group = key[0] == 0 ? std::string("m=1")
                            : fmt::format("m={},t={},endpoint={}", key[0],
                                          key[1] == 0 ? "A" : "B", key[2]);
      f.z_low = static_cast<double>(key[3]) * bin_width;
      f.positive_null_rate = pp;
      f.negative_null_rate = pn;
      f.positives = b.pos;
      f.negatives = b.neg;
      f.se = se;
      c.failures.push_back(f);
    }
  }
  c.pass = c.failures.empty();
  return c;
}

ConcordanceReport summarize(const Diagnostics& d)
{
  ConcordanceReport r;
  r.first = compare_means("first", d.first_null, d.first_nonnull);
  r.second = compare_means("second", d.second_null, d.second_nonnull);
  r.third = compare_bins("third", d.third);
  r.fourth = compare_bins("fourth", d.fourth);
  return r;
}

McEstimate estimate(const std::vector<double>& xs)
{
  Moments m;
  for (double x : xs)
    m.add(x);
  McEstimate e;
  e.mean = m.mean();
  if (xs.size() > 1)
    e.se = std::sqrt(m.var_mean());
  return e;
}

nlohmann::json estimate_json(const McEstimate& e)
{
  nlohmann::json j{ { "mean", e.mean } };
  j["se"] = e.se ? nlohmann::json(*e.se) : nlohmann::json(nullptr);
  return j;
}

McEstimate estimate_from_json(const nlohmann::json& j)
{
  McEstimate e;
  e.mean = j.at("mean").get<double>();
  if (!j.at("se").is_null())
    e.se = j.at("se").get<double>();
  return e;
}

nlohmann::json mean_json(const MeanComparison& c)
{
  return { { "name", c.name },
           { "applicable", c.applicable },
           { "null_mean", c.null_mean },
           { "nonnull_mean", c.nonnull_mean },
           { "null_count", c.null_count },
           { "nonnull_count", c.nonnull_count },
           { "se", c.se },
           { "pass", c.pass } };
}

MeanComparison mean_from_json(const nlohmann::json& j)
{
  MeanComparison c;
  c.name = j.at("name").get<std::string>();
  c.applicable = j.at("applicable").get<bool>();
  c.null_mean = j.at("null_mean").get<double>();
  c.nonnull_mean = j.at("nonnull_mean").get<double>();
  c.null_count = j.at("null_count").get<std::size_t>();
  c.nonnull_count = j.at("nonnull_count").get<std::size_t>();
  c.se = j.at("se").get<double>();
  c.pass = j.at("pass").get<bool>();
  return c;
}

nlohmann::json binned_json(const BinnedComparison& c)
{
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : c.failures)
    fails.push_back({ { "group", f.group },
                      { "z_low", f.z_low },
                      { "positive_null_rate", f.positive_null_rate },
                      { "negative_null_rate", f.negative_null_rate },
                      { "positives", f.positives },
                      { "negatives", f.negatives },
                      { "se", f.se } });
  return { { "name", c.name },
           { "bin_width", c.bin_width },
           { "bins_checked", c.bins_checked },
           { "bins_skipped", c.bins_skipped },
           { "failures", fails },
           { "pass", c.pass } };
}

BinnedComparison binned_from_json(const nlohmann::json& j)
{
  BinnedComparison c;
  c.name = j.at("name").get<std::string>();
  c.bin_width = j.at("bin_width").get<double>();
  c.bins_checked = j.at("bins_checked").get<std::size_t>();
  c.bins_skipped = j.at("bins_skipped").get<std::size_t>();
  for (const auto& f : j.at("failures")) {
    BinFailure b;
    b.group = f.at("group").get<std::string>();
    b.z_low = f.at("z_low").get<double>();
    b.positive_null_rate = f.at("positive_null_rate").get<double>();
    b.negative_null_rate = f.at("negative_null_rate").get<double>();
    b.positives = f.at("positives").get<std::size_t>();
    b.negatives = f.at("negatives").get<std::size_t>();
    b.se = f.at("se").get<double>();
    c.failures.push_back(b);
  }
  c.pass = j.at("pass").get<bool>();
  return c;
}

} // namespace

std::string_view to_string(PolicyKind kind)
{
  switch (kind) {
    case PolicyKind::fixed_alpha:
      return "fixed_alpha";
    case PolicyKind::signal_concordant:
      return "signal_concordant";
    case PolicyKind::adversarial:
      return "adversarial";
  }
  return "?";
}

PolicyKind parse_policy_kind(std::string_view s)
{
  if (s == "fixed_alpha")
    return PolicyKind::fixed_alpha;
  if (s == "signal_concordant")
    return PolicyKind::signal_concordant;
  if (s == "adversarial")
    return PolicyKind::adversarial;
  fail(ErrorKind::invalid_argument, fmt::format("unknown policy kind '{}'", s));
}

void PolicySpec::validate() const
{
  require(!alpha_menu.empty(), ErrorKind::invalid_argument, "alpha_menu is empty");
  for (double a : alpha_menu)
    require(a > 0.0 && a < 1.0,
            ErrorKind::invalid_argument,
            fmt::format("alpha_menu entry {} is outside (0, 1)", a));
  require(kind != PolicyKind::fixed_alpha || alpha_menu.size() == 1,
          ErrorKind::invalid_argument,
          "fixed_alpha takes a single alpha level");
  require(signal_noise >= 0.0, ErrorKind::invalid_argument, "signal_noise must be >= 0");
  if (!thresholds.empty()) {
    require(thresholds.size() + 1 == alpha_menu.size(),
            ErrorKind::invalid_argument,
            "need one threshold fewer than alpha levels");
    require(std::is_sorted(thresholds.begin(), thresholds.end()),
            ErrorKind::invalid_argument,
            "thresholds must ascend");
  }
}

void ScenarioConfig::validate() const
{
  true_prior();
  require(n_trials >= 1, ErrorKind::invalid_argument, "n_trials must be >= 1");
  require(replicates >= 1, ErrorKind::invalid_argument, "replicates must be >= 1");
  require(endpoint_correlation >= 0.0 && endpoint_correlation < 1.0,
          ErrorKind::invalid_argument,
          "endpoint_correlation must lie in [0, 1)");
  require(!designs.empty(), ErrorKind::invalid_argument, "no (m, t) designs");
  double total = 0.0;
  for (const auto& d : designs) {
    require(d.m >= 1, ErrorKind::invalid_argument, "design m must be >= 1");
    require(d.weight >= 0.0, ErrorKind::invalid_argument, "design weights must be >= 0");
    total += d.weight;
  }
  require(total > 0.0, ErrorKind::invalid_argument, "design weights sum to 0");
  policy.validate();
}

PriorModel ScenarioConfig::true_prior() const
{
  return PriorModel::from_masses(prior_theta, prior_masses);
}

void set_mixture_prior(ScenarioConfig& cfg,
                       double step,
                       std::span<const double> null_theta,
                       std::span<const double> null_weights,
                       double rho,
                       double alt_mean,
                       double alt_sd,
                       double alt_low,
                       double alt_high)
{
  require(step > 0.0, ErrorKind::invalid_argument, "prior step must be > 0");
  require(rho >= 0.0 && rho <= 1.0, ErrorKind::invalid_argument, "rho must lie in [0, 1]");
  require(null_theta.size() == null_weights.size() && !null_theta.empty(),
          ErrorKind::invalid_argument,
          "null_theta and null_weights must match");
  require(alt_sd > 0.0 && alt_low < alt_high, ErrorKind::invalid_argument, "bad alternative");

  auto index = [step](double x) { return static_cast<long>(std::lround(x / step)); };
  long lo = index(alt_low);
  long hi = index(alt_high);
  for (double t : null_theta) {
    require(t <= 0.0, ErrorKind::invalid_argument, "null support points must be <= 0");
    require(std::fabs(t / step - std::round(t / step)) < 1e-9,
            ErrorKind::invalid_argument,
            fmt::format("null support point {} is not on the step grid", t));
    lo = std::min(lo, index(t));
    hi = std::max(hi, index(t));
  }
  const auto n = static_cast<std::size_t>(hi - lo + 1);
  cfg.prior_theta.assign(n, 0.0);
  cfg.prior_masses.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    cfg.prior_theta[k] = static_cast<double>(lo + static_cast<long>(k)) * step;

  double null_total = std::accumulate(null_weights.begin(), null_weights.end(), 0.0);
  require(null_total > 0.0, ErrorKind::invalid_argument, "null weights sum to 0");
  for (std::size_t i = 0; i < null_theta.size(); ++i)
    cfg.prior_masses[static_cast<std::size_t>(index(null_theta[i]) - lo)] +=
      rho * null_weights[i] / null_total;

  // Alternative: normal density on the positive grid points of [low, high].
  std::vector<double> alt(n, 0.0);
  double alt_total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = cfg.prior_theta[k];
    if (t > 0.0 && t >= alt_low - 1e-12 && t <= alt_high + 1e-12) {
      alt[k] = normal_pdf((t - alt_mean) / alt_sd);
      alt_total += alt[k];
    }
  }
  require(alt_total > 0.0 || rho == 1.0,
          ErrorKind::invalid_argument,
          "alternative has no positive support");
  for (std::size_t k = 0; k < n; ++k)
    if (alt_total > 0.0)
      cfg.prior_masses[k] += (1.0 - rho) * alt[k] / alt_total;

  // Renormalize away rounding.
  const double total = std::accumulate(cfg.prior_masses.begin(), cfg.prior_masses.end(), 0.0);
  for (auto& g : cfg.prior_masses)
    g /= total;
}

ScenarioConfig scenario_from_json(const nlohmann::json& j)
{
  ScenarioConfig cfg;
  try {
    cfg.name = j.value("name", std::string("scenario"));
    const auto& p = j.at("true_prior");
    if (p.contains("theta")) {
      cfg.prior_theta = p.at("theta").get<std::vector<double>>();
      cfg.prior_masses = p.at("masses").get<std::vector<double>>();
    } else {
      const auto& alt = p.at("alternative");
      const auto nt = p.at("null_theta").get<std::vector<double>>();
      const auto nw = p.at("null_weights").get<std::vector<double>>();
      set_mixture_prior(cfg,
                        p.at("step").get<double>(),
                        nt,
                        nw,
                        p.at("rho").get<double>(),
                        alt.at("mean").get<double>(),
                        alt.at("sd").get<double>(),
                        alt.at("low").get<double>(),
                        alt.at("high").get<double>());
    }
    cfg.n_trials = j.at("n_trials").get<std::size_t>();
    cfg.designs.clear();
    for (const auto& d : j.at("designs")) {
      DesignShare s;
      s.m = d.at("m").get<int>();
      s.failure_type = parse_failure_type(d.at("t").get<std::string>());
      s.weight = d.value("weight", 1.0);
      cfg.designs.push_back(s);
    }
    cfg.endpoint_correlation = j.value("endpoint_correlation", 0.0);
    const auto& pol = j.at("policy");
    cfg.policy.kind = parse_policy_kind(pol.at("kind").get<std::string>());
    cfg.policy.alpha_menu = pol.at("alpha_menu").get<std::vector<double>>();
    cfg.policy.signal_noise = pol.value("signal_noise", 1.0);
    cfg.policy.thresholds = pol.value("thresholds", std::vector<double>{});
    require(j.contains("seed"), ErrorKind::invalid_argument, "scenario needs a seed");
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.replicates = j.value("replicates", 1);
    cfg.threads = j.value("threads", 0u);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, fmt::format("malformed scenario: {}", e.what()));
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(ErrorKind::data, fmt::format("invalid scenario: {}", e.what()));
  }
  return cfg;
}

nlohmann::json scenario_to_json(const ScenarioConfig& cfg)
{
  nlohmann::json designs = nlohmann::json::array();
  for (const auto& d : cfg.designs)
    designs.push_back(
      { { "m", d.m }, { "t", std::string(to_string(d.failure_type)) }, { "weight", d.weight } });
  nlohmann::json policy{ { "kind", std::string(to_string(cfg.policy.kind)) },
                         { "alpha_menu", cfg.policy.alpha_menu },
                         { "signal_noise", cfg.policy.signal_noise } };
  if (!cfg.policy.thresholds.empty())
    policy["thresholds"] = cfg.policy.thresholds;
  return { { "name", cfg.name },
           { "true_prior", { { "theta", cfg.prior_theta }, { "masses", cfg.prior_masses } } },
           { "n_trials", cfg.n_trials },
           { "designs", designs },
           { "endpoint_correlation", cfg.endpoint_correlation },
           { "policy", policy },
           { "seed", cfg.seed },
           { "replicates", cfg.replicates } };
}

ScenarioConfig load_scenario(const std::string& path)
{
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::data, fmt::format("cannot open scenario '{}'", path));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, fmt::format("'{}' is not valid JSON: {}", path, e.what()));
  }
  return scenario_from_json(j);
}

bool in_failure_region(FailureType t, std::span<const double> theta)
{
  if (t == FailureType::A)
    return std::all_of(theta.begin(), theta.end(), [](double x) { return x <= 0.0; });
  return std::any_of(theta.begin(), theta.end(), [](double x) { return x <= 0.0; });
}

std::vector<SimulatedTrial> simulate_population(const ScenarioConfig& cfg, int replicate)
{
  cfg.validate();
  const Sampler sampler(cfg);
  std::vector<SimulatedTrial> out;
  out.reserve(cfg.n_trials);
  LeanTrial t;
  for (std::size_t i = 0; i < cfg.n_trials; ++i) {
    Rng rng = trial_rng(cfg, replicate, i);
    sampler.draw(rng, t);
    const auto& d = cfg.designs[t.design];
    SimulatedTrial s;
    s.theta = t.theta;
    s.alpha = sampler.menu()[t.level];
    s.signal = t.signal;
    auto& r = s.record;
    r.trial_id = fmt::format("sim-{}-{}", replicate, i);
    r.m = d.m;
    r.failure_type = d.failure_type;
    for (std::size_t j = 0; j < t.z.size(); ++j) {
      EfficacyMeasure e;
      e.endpoint_index = static_cast<int>(j) + 1;
      e.z = t.z[j];
      r.measures.push_back(e);
    }
    RejectionPolicy p;
    p.critical_z = sampler.critical(t.design, t.level);
    p.nominal_alpha = s.alpha;
    r.policy = p;
    r.outcome = t.positive ? Outcome::positive : Outcome::negative;
    out.push_back(std::move(s));
  }
  return out;
}

std::size_t oracle_count_fp(std::span<const SimulatedTrial> trials)
{
  std::size_t n = 0;
  for (const auto& t : trials)
    if (t.record.outcome == Outcome::positive &&
        in_failure_region(t.record.failure_type, t.theta))
      ++n;
  return n;
}

std::size_t ConcordanceReport::failures() const
{
  std::size_t n = 0;
  n += first.applicable && !first.pass;
  n += second.applicable && !second.pass;
  n += third.failures.size();
  n += fourth.failures.size();
  return n;
}

ConcordanceReport check_concordance(std::span<const SimulatedTrial> trials)
{
  // Rebuild the lean form with a one-design-per-(m, t) scenario shell.
  ScenarioConfig shell;
  shell.designs.clear();
  std::map<std::pair<int, int>, std::size_t> design_index;
  Diagnostics diag;
  LeanTrial lean;
  for (const auto& s : trials) {
    const auto key = std::make_pair(s.record.m, s.record.failure_type == FailureType::A ? 0 : 1);
    auto [it, inserted] = design_index.emplace(key, shell.designs.size());
    if (inserted)
      shell.designs.push_back({ s.record.m, s.record.failure_type, 1.0 });
    lean.design = it->second;
    lean.theta = s.theta;
    lean.z.clear();
    for (const auto& e : s.record.measures) {
      require(e.z.has_value(), ErrorKind::invalid_argument, "simulated trials carry exact z");
      lean.z.push_back(*e.z);
    }
    lean.positive = s.record.outcome == Outcome::positive;
    accumulate(diag, shell, lean, s.alpha);
  }
  return summarize(diag);
}

SimulationReport validate_bounds(const ScenarioConfig& cfg,
                                 std::optional<double> rho_for_bound,
                                 const PriorModel* model_for_bound)
{
  cfg.validate();
  const PriorModel truth = cfg.true_prior();
  const PriorModel& bound_model = model_for_bound ? *model_for_bound : truth;
  const double true_rho = rho_from_g(truth);
  const double rho = rho_for_bound.value_or(true_rho);
  require(rho >= 0.0 && rho <= 1.0, ErrorKind::invalid_argument, "rho must lie in [0, 1]");

  const Sampler sampler(cfg);
  const HEvaluator h_eval(bound_model);
  const auto levels = sampler.menu().size();

  struct Replicate
  {
    double fp = 0.0;
    double positives = 0.0;
    double tau = 0.0;
    double omega = 0.0;
    double null_prob_pos_m1 = 0.0;
    std::size_t pos_m1 = 0;
    std::size_t pos_null_m1 = 0;
    std::vector<std::size_t> null_trials;
    std::vector<std::size_t> null_positives;
    Diagnostics diag;
  };
  std::vector<Replicate> reps(static_cast<std::size_t>(cfg.replicates));

  parallel_for(reps.size(), cfg.threads, [&](std::size_t r) {
    Replicate& out = reps[r];
    out.null_trials.assign(levels, 0);
    out.null_positives.assign(levels, 0);
    double sum_delta = 0.0;
    double sum_alpha = 0.0;
    bool all_single_b = true;
    LeanTrial t;
    for (std::size_t i = 0; i < cfg.n_trials; ++i) {
      Rng rng = trial_rng(cfg, static_cast<int>(r), i);
      sampler.draw(rng, t);
      const auto& d = cfg.designs[t.design];
      const double alpha = sampler.menu()[t.level];
      sum_delta += delta(rho, d.m, d.failure_type);
      sum_alpha += alpha;
      all_single_b = all_single_b && d.m == 1 && d.failure_type == FailureType::B;
      const bool null = in_failure_region(d.failure_type, t.theta);
      if (d.m == 1 && null) {
        ++out.null_trials[t.level];
        out.null_positives[t.level] += t.positive ? 1 : 0;
      }
      if (t.positive) {
        out.positives += 1.0;
        out.fp += null ? 1.0 : 0.0;
        double g = 0.0;
        if (d.failure_type == FailureType::A)
          g = h_eval(t.z[0]).null_prob;
        else
          for (double z : t.z)
            g += h_eval(z).null_prob;
        out.omega += g;
        if (d.m == 1) {
          out.null_prob_pos_m1 += g;
          ++out.pos_m1;
          out.pos_null_m1 += null ? 1 : 0;
        }
      }
      accumulate(out.diag, cfg, t, alpha);
    }
    out.tau = tau_from_sums(rho, cfg.n_trials, sum_delta, sum_alpha, all_single_b);
  });

  SimulationReport rep;
  rep.scenario = cfg.name;
  rep.seed = cfg.seed;
  rep.replicates = cfg.replicates;
  rep.n_trials = cfg.n_trials;
  rep.true_rho = true_rho;
  rep.rho_for_bound = rho;
  rep.bound_model_id = bound_model.id();
  rep.bound_model_is_truth = model_for_bound == nullptr || bound_model.id() == truth.id();

  std::vector<double> fp, pos, tau, omega;
  Diagnostics diag;
  double null_prob_pos = 0.0;
  std::size_t pos_m1 = 0;
  std::size_t pos_null_m1 = 0;
  rep.calibration.resize(levels);
  for (std::size_t k = 0; k < levels; ++k)
    rep.calibration[k].alpha = sampler.menu()[k];
  for (const auto& r : reps) {
    fp.push_back(r.fp);
    pos.push_back(r.positives);
    tau.push_back(r.tau);
    omega.push_back(r.omega);
    diag.merge(r.diag);
    null_prob_pos += r.null_prob_pos_m1;
    pos_m1 += r.pos_m1;
    pos_null_m1 += r.pos_null_m1;
    for (std::size_t k = 0; k < levels; ++k) {
      rep.calibration[k].null_trials += r.null_trials[k];
      rep.calibration[k].null_positives += r.null_positives[k];
    }
  }
  rep.realized_fp = estimate(fp);
  rep.positive_count = estimate(pos);
  rep.tau_hat = estimate(tau);
  rep.omega_hat = estimate(omega);
  if (pos_m1 > 0) {
    rep.mean_null_prob_positive = null_prob_pos / static_cast<double>(pos_m1);
    rep.null_fraction_positive = static_cast<double>(pos_null_m1) / static_cast<double>(pos_m1);
  }
  rep.concordance = summarize(diag);

  const double slack = 3.0 * rep.realized_fp.se.value_or(0.0);
  rep.tau_violation = rep.realized_fp.mean > rep.tau_hat.mean + slack;
  rep.omega_violation = rep.realized_fp.mean > rep.omega_hat.mean + slack;
  rep.omega_below_tau = rep.omega_hat.mean <= rep.tau_hat.mean;
  return rep;
}

nlohmann::json report_to_json(const SimulationReport& r)
{
  nlohmann::json cal = nlohmann::json::array();
  for (const auto& c : r.calibration)
    cal.push_back({ { "alpha", c.alpha },
                    { "null_trials", c.null_trials },
                    { "null_positives", c.null_positives } });
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return { { "format", "enfp-simulation-report/1" },
           { "scenario", r.scenario },
           { "seed", r.seed },
           { "replicates", r.replicates },
           { "n_trials", r.n_trials },
           { "true_rho", r.true_rho },
           { "rho_for_bound", r.rho_for_bound },
           { "bound_model_id", r.bound_model_id },
           { "bound_model_is_truth", r.bound_model_is_truth },
           { "realized_fp", estimate_json(r.realized_fp) },
           { "positive_count", estimate_json(r.positive_count) },
           { "tau_hat", estimate_json(r.tau_hat) },
           { "omega_hat", estimate_json(r.omega_hat) },
           { "mean_null_prob_positive", opt(r.mean_null_prob_positive) },
           { "null_fraction_positive", opt(r.null_fraction_positive) },
           { "concordance",
             { { "first", mean_json(r.concordance.first) },
               { "second", mean_json(r.concordance.second) },
               { "third", binned_json(r.concordance.third) },
               { "fourth", binned_json(r.concordance.fourth) },
               { "failures", r.concordance.failures() },
               { "note",
                 "third/fourth conditions on exact z are checked within z bins, an "
                 "approximation of the stated condition" } } },
           { "calibration", cal },
           { "tau_violation", r.tau_violation },
           { "omega_violation", r.omega_violation },
           { "omega_below_tau", r.omega_below_tau } };
}

SimulationReport report_from_json(const nlohmann::json& j)
{
  SimulationReport r;
  try {
    r.scenario = j.at("scenario").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.replicates = j.at("replicates").get<int>();
    r.n_trials = j.at("n_trials").get<std::size_t>();
    r.true_rho = j.at("true_rho").get<double>();
    r.rho_for_bound = j.at("rho_for_bound").get<double>();
    r.bound_model_id = j.at("bound_model_id").get<std::string>();
    r.bound_model_is_truth = j.at("bound_model_is_truth").get<bool>();
    r.realized_fp = estimate_from_json(j.at("realized_fp"));
    r.positive_count = estimate_from_json(j.at("positive_count"));
    r.tau_hat = estimate_from_json(j.at("tau_hat"));
    r.omega_hat = estimate_from_json(j.at("omega_hat"));
    if (!j.at("mean_null_prob_positive").is_null())
      r.mean_null_prob_positive = j.at("mean_null_prob_positive").get<double>();
    if (!j.at("null_fraction_positive").is_null())
      r.null_fraction_positive = j.at("null_fraction_positive").get<double>();
    const auto& c = j.at("concordance");
    r.concordance.first = mean_from_json(c.at("first"));
    r.concordance.second = mean_from_json(c.at("second"));
    r.concordance.third = binned_from_json(c.at("third"));
    r.concordance.fourth = binned_from_json(c.at("fourth"));
    for (const auto& a : j.at("calibration"))
      r.calibration.push_back({ a.at("alpha").get<double>(),
                                a.at("null_trials").get<std::size_t>(),
                                a.at("null_positives").get<std::size_t>() });
    r.tau_violation = j.at("tau_violation").get<bool>();
    r.omega_violation = j.at("omega_violation").get<bool>();
    r.omega_below_tau = j.at("omega_below_tau").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, fmt::format("malformed simulation report: {}", e.what()));
  }
  return r;
}

std::string report_table(const SimulationReport& r)
{
  auto est = [](const McEstimate& e) {
    return e.se ? fmt::format("{:.6g} (se {:.3g})", e.mean, *e.se)
                : fmt::format("{:.6g} (se absent)", e.mean);
  };
  auto verdict = [](bool ok) { return ok ? "pass" : "FAIL"; };
  std::string s;
  s += fmt::format("scenario          {}\n", r.scenario);
  s += fmt::format("trials x reps     {} x {} (seed {})\n", r.n_trials, r.replicates, r.seed);
  s += fmt::format("true rho          {:.6g}\n", r.true_rho);
  s += fmt::format("rho for tau_hat   {:.6g}\n", r.rho_for_bound);
  s += fmt::format("h model           {}{}\n", r.bound_model_id,
                   r.bound_model_is_truth ? " (true prior)" : "");
  s += fmt::format("realized FP       {}\n", est(r.realized_fp));
  s += fmt::format("positive trials   {}\n", est(r.positive_count));
  s += fmt::format("tau_hat           {}  {}\n", est(r.tau_hat),
                   r.tau_violation ? "VIOLATED" : "holds");
  s += fmt::format("omega_hat         {}  {}\n", est(r.omega_hat),
                   r.omega_violation ? "VIOLATED" : "holds");
  s += fmt::format("omega <= tau      {}\n", r.omega_below_tau ? "yes" : "no");
  if (r.mean_null_prob_positive)
    s += fmt::format("m=1 positives     mean 1-h {:.6g}, null fraction {:.6g}\n",
                     *r.mean_null_prob_positive, *r.null_fraction_positive);
  const auto& c = r.concordance;
  for (const auto* m : { &c.first, &c.second }) {
    if (!m->applicable) {
      s += fmt::format("{:<6} concordance not applicable\n", m->name);
      continue;
    }
    s += fmt::format("{:<6} concordance E[a|null] {:.6g} vs E[a|non-null] {:.6g} (se {:.3g})  "
                     "{}\n",
                     m->name, m->null_mean, m->nonnull_mean, m->se, verdict(m->pass));
  }
  for (const auto* b : { &c.third, &c.fourth })
    s += fmt::format("{:<6} concordance {} z-bins checked, {} skipped (one class), "
                     "{} failed  {}\n",
                     b->name, b->bins_checked, b->bins_skipped, b->failures.size(),
                     verdict(b->pass));
  s += "(third/fourth are checked within z bins of width 0.25, an approximation of "
       "conditioning on exact z)\n";
  return s;
}

} // namespace enfp
