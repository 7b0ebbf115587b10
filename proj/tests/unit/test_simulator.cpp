#include "enfp/normal.hpp"
#include "enfp/simulator.hpp"

#include "doctest.h"
#include "test_support.hpp"

#include <cmath>

using namespace enfp;
using enfp::test::kind_of;

namespace {

ScenarioConfig point_scenario(double theta, std::size_t n, std::vector<double> menu = { 0.025 })
{
  ScenarioConfig c;
  c.name = "point";
  c.prior_theta = { theta };
  c.prior_masses = { 1.0 };
  c.n_trials = n;
  c.designs = { DesignShare{ 1, FailureType::B, 1.0 } };
  c.policy.kind = menu.size() == 1 ? PolicyKind::fixed_alpha : PolicyKind::signal_concordant;
  c.policy.alpha_menu = std::move(menu);
  c.seed = 17;
  c.replicates = 1;
  return c;
}

ScenarioConfig mixed_scenario(PolicyKind kind, double rho, std::size_t n, int replicates)
{
  ScenarioConfig c;
  c.name = "mixed";
  const double null_theta[] = { 0.0, -0.5, -1.0 };
  const double null_w[] = { 0.4, 0.3, 0.3 };
  set_mixture_prior(c, 0.1, null_theta, null_w, rho, 2.5, 1.0, 0.1, 6.0);
  c.n_trials = n;
  c.designs = { { 1, FailureType::B, 1.0 },
                { 2, FailureType::A, 1.0 },
                { 2, FailureType::B, 1.0 },
                { 3, FailureType::B, 1.0 } };
  c.policy.kind = kind;
  c.policy.alpha_menu =
    kind == PolicyKind::fixed_alpha ? std::vector<double>{ 0.025 } : std::vector<double>{ 0.01, 0.025, 0.05 };
  c.seed = 5;
  c.replicates = replicates;
  return c;
}

double binomial_se(double p, double n)
{
  return std::sqrt(p * (1.0 - p) / n);
}

SimulatedTrial hand(std::vector<double> theta, FailureType t, bool positive)
{
  SimulatedTrial s;
  s.theta = theta;
  s.record.m = static_cast<int>(theta.size());
  s.record.failure_type = t;
  s.record.outcome = positive ? Outcome::positive : Outcome::negative;
  return s;
}

} // namespace

TEST_SUITE("simulator")
{
  TEST_CASE("null calibration at 10^6 trials")
  {
    const auto r = validate_bounds(point_scenario(0.0, 1000000));
    const double frac = r.positive_count.mean / 1e6;
    CHECK(std::abs(frac - 0.025) <= 3.0 * binomial_se(0.025, 1e6));
    CHECK(r.realized_fp.mean == r.positive_count.mean);
  }

  TEST_CASE("null calibration for every level of a menu")
  {
    const auto r = validate_bounds(point_scenario(0.0, 300000, { 0.01, 0.025, 0.05 }));
    REQUIRE(r.calibration.size() == 3);
    for (const auto& c : r.calibration) {
      CAPTURE(c.alpha);
      const double n = static_cast<double>(c.null_trials);
      const double frac = static_cast<double>(c.null_positives) / n;
      CHECK(std::abs(frac - c.alpha) <= 3.0 * binomial_se(c.alpha, n));
    }
  }

  TEST_CASE("power at theta = 5")
  {
    const auto r = validate_bounds(point_scenario(5.0, 200000));
    const double want = normal_cdf(5.0 - normal_upper_quantile(0.025));
    CHECK(want == doctest::Approx(0.9988).epsilon(1e-4));
    CHECK(std::abs(r.positive_count.mean / 2e5 - want) <= 3.0 * binomial_se(want, 2e5));
    CHECK(r.realized_fp.mean == 0.0);
  }

  TEST_CASE("two independent null endpoints under a union null")
  {
    auto c = point_scenario(0.0, 400000);
    c.designs = { { 2, FailureType::B, 1.0 } };
    c.policy.alpha_menu = { 0.05 };
    const auto r = validate_bounds(c);
    const double frac = r.positive_count.mean / 4e5;
    CHECK(std::abs(frac - 0.0025) <= 3.0 * binomial_se(0.0025, 4e5));
  }

  TEST_CASE("oracle count")
  {
    std::vector<SimulatedTrial> none{ hand({ 1.0 }, FailureType::B, true),
                                      hand({ 0.5, 2.0 }, FailureType::B, true) };
    CHECK(oracle_count_fp(none) == 0);
    std::vector<SimulatedTrial> all{ hand({ 0.0 }, FailureType::B, true),
                                     hand({ -1.0, -0.5 }, FailureType::A, true),
                                     hand({ -1.0 }, FailureType::A, true) };
    CHECK(oracle_count_fp(all) == 3);
    // Type A is null only when every endpoint is; type B when any is.
    std::vector<SimulatedTrial> four{ hand({ -0.2, 1.0 }, FailureType::B, true),
                                      hand({ -0.2, 1.0 }, FailureType::A, true),
                                      hand({ -0.3, -0.1 }, FailureType::A, true),
                                      hand({ -0.5 }, FailureType::B, false) };
    CHECK(oracle_count_fp(four) == 2);
    CHECK(in_failure_region(FailureType::A, std::vector<double>{ 0.0, 0.0 }));
    CHECK_FALSE(in_failure_region(FailureType::A, std::vector<double>{ 0.0, 0.1 }));
    CHECK(in_failure_region(FailureType::B, std::vector<double>{ 0.0, 0.1 }));
  }

  TEST_CASE("population records classify consistently with their truth")
  {
    auto c = mixed_scenario(PolicyKind::signal_concordant, 0.2, 5000, 1);
    const auto pop = simulate_population(c, 0);
    REQUIRE(pop.size() == 5000);
    std::size_t fp = 0;
    for (const auto& s : pop) {
      CHECK(classify_rejection(s.record) == *s.record.outcome);
      fp += *s.record.outcome == Outcome::positive &&
            in_failure_region(s.record.failure_type, s.theta);
    }
    CHECK(oracle_count_fp(pop) == fp);
    CHECK(simulate_population(c, 0).front().record == pop.front().record);
    CHECK_FALSE(simulate_population(c, 1).front().record == pop.front().record);
  }

  TEST_CASE("concordance diagnostics")
  {
    const auto fixed = check_concordance(
      simulate_population(mixed_scenario(PolicyKind::fixed_alpha, 0.2, 100000, 1)));
    CHECK(fixed.first.null_mean == doctest::Approx(fixed.first.nonnull_mean).epsilon(1e-14));
    CHECK(fixed.first.pass);

    const auto conc = check_concordance(
      simulate_population(mixed_scenario(PolicyKind::signal_concordant, 0.2, 100000, 1)));
    CHECK(conc.first.null_mean < conc.first.nonnull_mean);
    CHECK(conc.first.pass);
    CHECK(conc.second.pass);

    const auto adv = check_concordance(
      simulate_population(mixed_scenario(PolicyKind::adversarial, 0.2, 100000, 1)));
    CHECK(adv.first.null_mean > adv.first.nonnull_mean);
    CHECK_FALSE(adv.first.pass);
    CHECK(adv.failures() > 0);
  }

  TEST_CASE("rho = 0 gives no false positives and a zero tau_hat")
  {
    auto c = mixed_scenario(PolicyKind::signal_concordant, 0.0, 20000, 2);
    const auto r = validate_bounds(c);
    CHECK(r.true_rho == 0.0);
    CHECK(r.realized_fp.mean == 0.0);
    CHECK(r.tau_hat.mean == 0.0);
    CHECK_FALSE(r.tau_violation);
  }

  TEST_CASE("determinism across thread counts and runs")
  {
    auto c = mixed_scenario(PolicyKind::signal_concordant, 0.2, 20000, 4);
    c.threads = 1;
    const auto a = report_to_json(validate_bounds(c));
    c.threads = 4;
    const auto b = report_to_json(validate_bounds(c));
    CHECK(a == b);
    CHECK(a == report_to_json(validate_bounds(c)));
  }

  TEST_CASE("one replicate reports no standard error")
  {
    const auto r = validate_bounds(mixed_scenario(PolicyKind::fixed_alpha, 0.2, 5000, 1));
    CHECK_FALSE(r.realized_fp.se.has_value());
    CHECK(report_table(r).find("se absent") != std::string::npos);
    const auto two = validate_bounds(mixed_scenario(PolicyKind::fixed_alpha, 0.2, 5000, 2));
    REQUIRE(two.realized_fp.se.has_value());
    CHECK(*two.realized_fp.se > 0.0);
  }

  TEST_CASE("report and scenario JSON round trips")
  {
    const auto c = mixed_scenario(PolicyKind::signal_concordant, 0.2, 5000, 2);
    const auto r = validate_bounds(c);
    const auto j = report_to_json(r);
    CHECK(report_to_json(report_from_json(nlohmann::json::parse(j.dump()))) == j);

    const auto sj = scenario_to_json(c);
    const auto back = scenario_from_json(nlohmann::json::parse(sj.dump()));
    CHECK(scenario_to_json(back) == sj);
    CHECK(back.prior_masses == c.prior_masses);
  }

  TEST_CASE("invalid scenarios")
  {
    nlohmann::json j = scenario_to_json(point_scenario(0.0, 10));
    j.erase("seed");
    CHECK_THROWS_AS(scenario_from_json(j), Error);
    j = scenario_to_json(point_scenario(0.0, 10));
    j["policy"]["alpha_menu"] = { 1.5 };
    CHECK(kind_of([&] { scenario_from_json(j); }) == ErrorKind::data);
    j = scenario_to_json(point_scenario(0.0, 10));
    j["endpoint_correlation"] = 1.0;
    CHECK(kind_of([&] { scenario_from_json(j); }) == ErrorKind::data);
  }

  TEST_CASE("concordant m = 1 chain: realized <= omega_hat <= tau_hat")
  {
    auto c = mixed_scenario(PolicyKind::signal_concordant, 0.2, 50000, 10);
    c.designs = { { 1, FailureType::B, 1.0 } };
    const auto r = validate_bounds(c);
    REQUIRE(r.realized_fp.se.has_value());
    CHECK(r.realized_fp.mean <= r.omega_hat.mean + 3.0 * *r.realized_fp.se);
    CHECK(r.omega_hat.mean <= r.tau_hat.mean + 3.0 * *r.realized_fp.se);
    CHECK_FALSE(r.tau_violation);
    CHECK_FALSE(r.omega_violation);
    REQUIRE(r.mean_null_prob_positive.has_value());
    const double f = *r.null_fraction_positive;
    const double positives = r.positive_count.mean * r.replicates;
    CHECK(*r.mean_null_prob_positive >= f - 3.0 * binomial_se(f, positives));
  }
}
