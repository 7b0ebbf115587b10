#include "enfp/bounds.hpp"

#include "doctest.h"
#include "test_support.hpp"

#include <numeric>

using namespace enfp;
using enfp::test::kind_of;

namespace {

FreqTrial ft(int m, FailureType t, double alpha, std::string stratum = "")
{
  return FreqTrial{ m, t, alpha, std::move(stratum) };
}

} // namespace

TEST_SUITE("bounds")
{
  TEST_CASE("delta")
  {
    CHECK(delta(0.1, 3, FailureType::A) == 0.1);
    CHECK(delta(0.1, 3, FailureType::B) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(delta(0.1, 1, FailureType::B) == delta(0.1, 1, FailureType::A));
    CHECK(delta(0.6, 3, FailureType::B) > 1.0);
  }

  TEST_CASE("tau_hat_single")
  {
    const std::vector<double> three{ 0.05, 0.025, 0.01 };
    CHECK(tau_hat_single(0.1, three) == doctest::Approx(0.0085).epsilon(1e-14));
    CHECK(tau_hat_single(0.0, three) == 0.0);
    CHECK(tau_hat_single(0.1, std::vector<double>{}) == 0.0);
    const std::vector<double> many(440, 0.025);
    CHECK(tau_hat_single(0.09, many) == doctest::Approx(0.99).epsilon(1e-13));
  }

  TEST_CASE("tau_hat_mixed")
  {
    const std::vector<FreqTrial> a{ ft(1, FailureType::B, 0.05), ft(2, FailureType::A, 0.025) };
    CHECK(tau_hat_mixed(0.1, a) == doctest::Approx(0.0075).epsilon(1e-14));
    const std::vector<FreqTrial> b{ ft(2, FailureType::B, 0.05) };
    CHECK(tau_hat_mixed(0.1, b) == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(tau_hat_mixed(0.1, std::vector<FreqTrial>{}) == 0.0);
  }

  TEST_CASE("single-endpoint reduction is exact")
  {
    Rng rng(40);
    for (int rep = 0; rep < 500; ++rep) {
      const auto n = 1 + rng.below(50);
      std::vector<double> alphas;
      std::vector<FreqTrial> trials;
      for (std::uint64_t i = 0; i < n; ++i) {
        alphas.push_back(0.001 + 0.1 * rng.uniform());
        trials.push_back(ft(1, FailureType::B, alphas.back()));
      }
      const double rho = rng.uniform();
      CHECK(tau_hat_mixed(rho, trials) == tau_hat_single(rho, alphas));
    }
  }

  TEST_CASE("monotone in alpha, rho and type-B m")
  {
    Rng rng(41);
    for (int rep = 0; rep < 300; ++rep) {
      std::vector<FreqTrial> trials;
      for (int i = 0; i < 8; ++i)
        trials.push_back(ft(1 + static_cast<int>(rng.below(3)),
                            rng.uniform() < 0.5 ? FailureType::A : FailureType::B,
                            0.001 + 0.05 * rng.uniform()));
      const double rho = 0.05 + 0.5 * rng.uniform();
      const double base = tau_hat_mixed(rho, trials);
      CHECK(tau_hat_mixed(rho + 0.01, trials) >= base);
      auto up = trials;
      up[rng.below(8)].alpha += 0.01;
      CHECK(tau_hat_mixed(rho, up) >= base);
      auto more = trials;
      const auto k = rng.below(8);
      more[k].failure_type = FailureType::B;
      const double before = tau_hat_mixed(rho, more);
      more[k].m += 1;
      CHECK(tau_hat_mixed(rho, more) >= before);
    }
  }

  TEST_CASE("capacity")
  {
    CHECK(capacity(1.0, 0.09, 0.025) == 444);
    CHECK(capacity(11 * 0.09, 0.09, 0.025) == 440);
    CHECK(capacity(0.99, 0.09, 0.025) == 440);
    CHECK(capacity(1.0, 1.0, 0.5) == 2);
    CHECK(capacity(1.0, 0.09, 0.025, CapacityMode::rounded_total_error) == 440);
    CHECK(total_error(1.0, 0.09) == doctest::Approx(11.111111111111).epsilon(1e-12));
  }

  TEST_CASE("stratified")
  {
    const std::vector<FreqTrial> two{ ft(1, FailureType::B, 0.05, "x"),
                                      ft(1, FailureType::B, 0.05, "y") };
    const auto s = tau_hat_stratified(two, { { "x", 0.05 }, { "y", 0.2 } });
    CHECK(s.per_stratum.at("x") == doctest::Approx(0.0025).epsilon(1e-14));
    CHECK(s.per_stratum.at("y") == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(s.total == doctest::Approx(0.0125).epsilon(1e-14));

    const std::vector<FreqTrial> one{ ft(1, FailureType::B, 0.05, "x"),
                                      ft(2, FailureType::A, 0.025, "x") };
    CHECK(tau_hat_stratified(one, { { "x", 0.1 } }).total == tau_hat_mixed(0.1, one));

    CHECK(kind_of([&] { tau_hat_stratified(two, { { "x", 0.1 } }); }) ==
          ErrorKind::missing_stratum);
  }

  TEST_CASE("frequentist inputs from records")
  {
    TrialRecord r;
    r.trial_id = "r";
    r.m = 2;
    r.failure_type = FailureType::A;
    EfficacyMeasure e1, e2;
    e1.z = 1.0;
    e2.endpoint_index = 2;
    e2.z = 3.0;
    r.measures = { e1, e2 };
    RejectionPolicy p;
    p.nominal_alpha = 0.025;
    r.policy = p;
    auto f = freq_trial_from_record(r);
    CHECK(f.alpha == 0.025);
    CHECK(f.m == 2);
    // Recovered from Bonferroni critical values when nominal_alpha is absent.
    r.policy->nominal_alpha.reset();
    r.policy->mode = PolicyMode::h_threshold;
    r.policy->h_floor = 0.9;
    r.policy->critical_z = critical_values(0.025, 2, FailureType::A);
    f = freq_trial_from_record(r);
    CHECK(f.alpha == doctest::Approx(0.025).epsilon(1e-12));
  }
}
