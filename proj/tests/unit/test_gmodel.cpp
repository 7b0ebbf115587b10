#include "enfp/gmodel.hpp"
#include "enfp/normal.hpp"
#include "enfp/posterior.hpp"
#include "enfp/spline.hpp"
#include "enfp/trial.hpp"

#include "doctest.h"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace enfp;
using enfp::test::kind_of;

namespace {

ObservationSet exact(std::vector<double> z)
{
  ObservationSet o;
  o.exact_z = std::move(z);
  return o;
}

double mass_within(const PriorModel& m, double centre, double radius)
{
  double s = 0.0;
  for (std::size_t j = 0; j < m.theta.size(); ++j)
    if (std::abs(m.theta[j] - centre) < radius)
      s += m.masses[j];
  return s;
}

bool trace_nondecreasing(const PriorModel& m)
{
  for (std::size_t i = 1; i < m.objective_trace.size(); ++i)
    if (m.objective_trace[i] < m.objective_trace[i - 1])
      return false;
  return true;
}

} // namespace

TEST_SUITE("gmodel")
{
  TEST_CASE("rho_from_g")
  {
    CHECK(rho_from_g(PriorModel::from_masses({ 1.0 }, { 1.0 })) == 0.0);
    CHECK(rho_from_g(PriorModel::from_masses({ -1.0, 0.0, 1.0 }, { 0.3, 0.0, 0.7 })) ==
          doctest::Approx(0.3).epsilon(1e-15));
    // A grid point at exactly zero is null.
    CHECK(rho_from_g(PriorModel::from_masses({ -1.0, 0.0, 1.0 }, { 0.0, 0.4, 0.6 })) ==
          doctest::Approx(0.4).epsilon(1e-15));
  }

  TEST_CASE("log_likelihood examples")
  {
    const auto at0 = PriorModel::from_masses({ 0.0 }, { 1.0 });
    CHECK(log_likelihood(at0, exact({ 0.0 })) ==
          doctest::Approx(-0.91893853320467274178).epsilon(1e-14));
    ObservationSet c;
    c.censored.push_back({ -1.96, 1.96 });
    // log(2 Phi(1.96) - 1); 40-digit reference.
    CHECK(log_likelihood(at0, c) == doctest::Approx(-0.051288863130464222796).epsilon(1e-12));

    std::vector<double> theta, mass;
    for (int j = -40; j <= 40; ++j) {
      theta.push_back(0.1 * j);
      mass.push_back(1.0 / 81.0);
    }
    mass.back() = 1.0 - std::accumulate(mass.begin(), mass.end() - 1, 0.0);
    const auto uni = PriorModel::from_masses(theta, mass);
    CHECK(log_likelihood(uni, exact({ 0.0 })) == log_likelihood(uni, exact({ -0.0 })));
  }

  TEST_CASE("log_likelihood matches a direct sum")
  {
    const auto m = enfp::test::grid_prior(-1.0, 0.5, { { -1.0, 0.2 }, { 0.5, 0.3 }, { 2.0, 0.5 } });
    ObservationSet o = exact({ -0.3, 1.1, 2.7 });
    o.censored.push_back({ -1.0, 0.5 });
    double want = 0.0;
    for (double z : o.exact_z)
      want += std::log(0.2 * normal_pdf(z + 1.0) + 0.3 * normal_pdf(z - 0.5) +
                       0.5 * normal_pdf(z - 2.0));
    auto mass = [](double lo, double hi, double t) { return normal_cdf(hi - t) - normal_cdf(lo - t); };
    want += std::log(0.2 * mass(-1.0, 0.5, -1.0) + 0.3 * mass(-1.0, 0.5, 0.5) +
                     0.5 * mass(-1.0, 0.5, 2.0));
    CHECK(log_likelihood(m, o) == doctest::Approx(want).epsilon(1e-13));
  }

  TEST_CASE("empty or undersized input is rejected")
  {
    CHECK_THROWS_AS(fit_g(ObservationSet{}, FitConfig{}), Error);
    CHECK_THROWS_AS(fit_g(exact({ 1.0, 2.0 }), FitConfig{}), Error);
  }

  TEST_CASE("config validation")
  {
    FitConfig c;
    c.grid_low = 0.5;
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::invalid_argument);
    c = FitConfig{};
    c.grid_step = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
  }

  TEST_CASE("theta grid has an exact zero and uniform spacing")
  {
    const auto g = make_theta_grid(-6.0, 15.0, 0.05);
    CHECK(g.size() == 421);
    CHECK(std::count(g.begin(), g.end(), 0.0) == 1);
    for (std::size_t j = 1; j < g.size(); ++j)
      CHECK(g[j] - g[j - 1] == doctest::Approx(0.05).epsilon(1e-12));
  }

  TEST_CASE("natural spline basis reproduces linear functions")
  {
    std::vector<double> x;
    for (int i = 0; i <= 100; ++i)
      x.push_back(-2.0 + 0.05 * i);
    const Eigen::MatrixXd b = natural_spline_basis(x, 6);
    CHECK(b.cols() == 6);
    Eigen::MatrixXd design(b.rows(), b.cols() + 1);
    design << Eigen::VectorXd::Ones(b.rows()), b;
    Eigen::VectorXd y(b.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i)
      y(i) = 3.0 - 2.0 * x[static_cast<std::size_t>(i)];
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);
    CHECK((design * coef - y).norm() < 1e-9);
  }

  TEST_CASE("point mass at 2 concentrates near 2")
  {
    Rng rng(2024, 1);
    std::vector<double> z(5000);
    for (auto& v : z)
      v = 2.0 + rng.normal();
    const auto m = fit_g(exact(z), enfp::test::recovery_config());
    REQUIRE(m.converged);
    CHECK(mass_within(m, 2.0, 0.5) >= 0.8);
  }

  TEST_CASE("0.1 at zero and 0.9 at 3: median rho over seeds in [0.05, 0.18]")
  {
    std::vector<double> rho;
    for (int s = 0; s < 20; ++s) {
      Rng rng(11, 2, static_cast<std::uint64_t>(s));
      std::vector<double> z(5000);
      for (auto& v : z)
        v = (rng.uniform() < 0.1 ? 0.0 : 3.0) + rng.normal();
      const auto m = fit_g(exact(z), enfp::test::recovery_config());
      REQUIRE(m.converged);
      rho.push_back(rho_from_g(m));
    }
    const double med = percentile(rho, 0.5);
    MESSAGE("median rho_hat " << med);
    CHECK(med >= 0.05);
    CHECK(med <= 0.18);
  }

  TEST_CASE("fit invariants on default settings")
  {
    const auto z = enfp::test::mixture_draws(5, 0, 2000);
    const auto obs = exact(z);
    const auto m = fit_g(obs, FitConfig{});
    REQUIRE(m.converged);
    CHECK(m.gradient_norm < 1e-8);
    CHECK(trace_nondecreasing(m));
    double total = 0.0;
    for (double g : m.masses) {
      CHECK(g >= 0.0);
      total += g;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    CHECK(m.log_likelihood == doctest::Approx(log_likelihood(m, obs)).epsilon(1e-12));

    std::vector<double> uniform(m.theta.size(), 1.0 / static_cast<double>(m.theta.size()));
    uniform.back() = 1.0 - std::accumulate(uniform.begin(), uniform.end() - 1, 0.0);
    CHECK(m.log_likelihood >= log_likelihood(PriorModel::from_masses(m.theta, uniform), obs));
  }

  TEST_CASE("tiny censoring intervals behave like exact values")
  {
    const auto z = enfp::test::mixture_draws(6, 0, 1500);
    const auto a = fit_g(exact(z), FitConfig{});
    ObservationSet b = exact(z);
    for (std::size_t i = 0; i < 100; ++i) {
      const double v = b.exact_z.back();
      b.exact_z.pop_back();
      b.censored.push_back({ v - 1e-4, v + 1e-4 });
    }
    const auto fb = fit_g(b, FitConfig{});
    REQUIRE(a.converged);
    REQUIRE(fb.converged);
    CHECK(std::abs(rho_from_g(a) - rho_from_g(fb)) < 1e-3);
  }

  TEST_CASE("iteration limit reports non-convergence")
  {
    FitConfig cfg;
    cfg.max_iterations = 1;
    const auto m = fit_g(exact(enfp::test::mixture_draws(7, 0, 500)), cfg);
    CHECK_FALSE(m.converged);
    CHECK(m.diagnostic.find("iteration limit") != std::string::npos);
    CHECK(m.iterations == 1);
  }

  TEST_CASE("observations from records")
  {
    TrialRecord r;
    r.trial_id = "a";
    r.m = 2;
    r.failure_type = FailureType::B;
    EfficacyMeasure e1, e2;
    e1.z = 1.5;
    e2.endpoint_index = 2;
    e2.censor_interval = censored_interval(0.05);
    r.measures = { e1, e2 };
    const auto o = ObservationSet::from_records(std::vector<TrialRecord>{ r });
    CHECK(o.exact_z == std::vector<double>{ 1.5 });
    REQUIRE(o.censored.size() == 1);
    CHECK(o.censored[0] == censored_interval(0.05));
  }

  TEST_CASE("bootstrap: two replicates, determinism and bands")
  {
    const auto obs = exact(enfp::test::mixture_draws(8, 0, 800));
    FitConfig cfg;
    cfg.seed = 99;
    CHECK_THROWS_AS(bootstrap(obs, cfg, 1, default_z_grid()), Error);
    const auto grid = make_z_grid(-1.0, 4.0, 0.5);
    const auto two = bootstrap(obs, cfg, 2, grid);
    CHECK(two.replicates == 2);
    CHECK(two.rho.size() + static_cast<std::size_t>(two.failed) == 2);
    CHECK(two.rho_ci_low <= two.rho_ci_high);

    cfg.threads = 1;
    const auto a = bootstrap(obs, cfg, 12, grid);
    cfg.threads = 3;
    const auto b = bootstrap(obs, cfg, 12, grid);
    CHECK(a.rho == b.rho);
    CHECK(a.h_low == b.h_low);
    CHECK(a.h_high == b.h_high);
    CHECK(a.coefficients == b.coefficients);
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(a.h_low[i] <= a.h_high[i]);
  }

  TEST_CASE("model JSON round trip")
  {
    const auto obs = exact(enfp::test::mixture_draws(9, 0, 600));
    FitConfig cfg;
    cfg.seed = 4;
    const auto m = fit_g(obs, cfg);
    const auto boot = bootstrap(obs, cfg, 5, make_z_grid(0.0, 3.0, 1.0));
    std::optional<BootstrapResult> back_boot;
    const auto doc = nlohmann::json::parse(model_to_json(m, &boot).dump());
    const auto back = model_from_json(doc, &back_boot);
    CHECK(back.theta == m.theta);
    CHECK(back.masses == m.masses);
    CHECK(back.coefficients == m.coefficients);
    CHECK(back.id() == m.id());
    CHECK(back.converged == m.converged);
    CHECK(back.log_likelihood == m.log_likelihood);
    REQUIRE(back_boot.has_value());
    CHECK(back_boot->rho == boot.rho);
    CHECK(back_boot->h_low == boot.h_low);
    CHECK(back_boot->coefficients == boot.coefficients);
    CHECK(masses_for_coefficients(back, back_boot->coefficients[0]).size() == m.theta.size());

    auto tampered = doc;
    tampered["masses"][0] = 0.5;
    CHECK(kind_of([&] { model_from_json(tampered); }) == ErrorKind::data);
    auto wrong = doc;
    wrong["format"] = "something-else";
    CHECK(kind_of([&] { model_from_json(wrong); }) == ErrorKind::data);
  }

  TEST_CASE("percentile is type 7")
  {
    CHECK(percentile({ 1.0, 2.0, 3.0, 4.0 }, 0.5) == 2.5);
    CHECK(percentile({ 4.0, 1.0 }, 0.025) == doctest::Approx(1.075));
    CHECK(percentile({ 5.0 }, 0.975) == 5.0);
  }
}

TEST_SUITE("gmodel_coverage")
{
  TEST_CASE("bootstrap rho interval covers the truth in at least 90% of experiments")
  {
    // 50 outer experiments of 1000 draws with 200 replicates each.
    // Rounding N(3, 1) to the 0.05 grid sends draws below 0.025 to theta <= 0.
    const double truth = 0.1 + 0.9 * normal_cdf(0.025 - 3.0);
    int covered = 0;
    const int outer = 50;
    for (int e = 0; e < outer; ++e) {
      const auto obs = exact(enfp::test::mixture_draws(31, static_cast<std::uint64_t>(e), 1000));
      auto cfg = enfp::test::recovery_config();
      cfg.seed = static_cast<std::uint64_t>(e);
      const auto b = bootstrap(obs, cfg, 200, std::vector<double>{ 1.96 });
      covered += b.rho_ci_low <= truth && truth <= b.rho_ci_high;
    }
    MESSAGE("covered " << covered << " of " << outer);
    CHECK(covered >= 45);
  }
}
