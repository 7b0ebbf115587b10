#include "enfp/error.hpp"
#include "enfp/normal.hpp"
#include "enfp/rng.hpp"
#include "enfp/trial.hpp"

#include "doctest.h"
#include "test_support.hpp"

#include <cmath>

using namespace enfp;
using enfp::test::kind_of;

namespace {

TrialRecord make_trial(std::vector<double> z, FailureType t, std::vector<double> crit)
{
  TrialRecord r;
  r.trial_id = "T";
  r.m = static_cast<int>(z.size());
  r.failure_type = t;
  for (std::size_t j = 0; j < z.size(); ++j) {
    EfficacyMeasure e;
    e.endpoint_index = static_cast<int>(j) + 1;
    e.z = z[j];
    r.measures.push_back(e);
  }
  RejectionPolicy p;
  // Lax enough that any explicit critical value used here is admissible.
  p.nominal_alpha = 0.999;
  p.critical_z = std::move(crit);
  r.policy = p;
  return r;
}

} // namespace

TEST_SUITE("trial")
{
  TEST_CASE("standardize")
  {
    CHECK(standardize(0.5, 0.0, 0.25) == 2.0);
    CHECK(standardize(0.7, 0.7, 3.0) == 0.0);
    CHECK(standardize(1.3, 0.3, 0.5) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(kind_of([] { standardize(1.0, 0.0, 0.0); }) == ErrorKind::invalid_scale);
    CHECK(kind_of([] { standardize(1.0, 0.0, -1.0); }) == ErrorKind::invalid_scale);
  }

  TEST_CASE("p_to_z")
  {
    CHECK(p_to_z(0.05, true) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(p_to_z(0.1, true) == doctest::Approx(1.644854).epsilon(1e-6));
    CHECK(p_to_z(0.05, false) == doctest::Approx(-1.959964).epsilon(1e-6));
    CHECK(p_to_z(1.0, true) == 0.0);
    CHECK(p_to_z(1.0, false) == 0.0);
    CHECK(kind_of([] { p_to_z(0.0, true); }) == ErrorKind::domain);
    CHECK(kind_of([] { p_to_z(1.5, true); }) == ErrorKind::domain);
  }

  TEST_CASE("p/z round trip over [1e-12, 1]")
  {
    Rng rng(3);
    for (int i = 0; i < 20000; ++i) {
      const double p = std::pow(10.0, -12.0 * rng.uniform());
      const bool fav = rng.uniform() < 0.5;
      CHECK(z_to_p(p_to_z(p, fav)) == doctest::Approx(p).epsilon(1e-10));
    }
  }

  TEST_CASE("classification examples")
  {
    CHECK(classify_rejection(make_trial({ 2.1 }, FailureType::B, { 1.96 })) == Outcome::positive);
    CHECK(classify_rejection(make_trial({ 2.5, 1.0 }, FailureType::B, { 1.96, 1.96 })) ==
          Outcome::negative);
    const double c = critical_z(0.025, 2, FailureType::A);
    CHECK(c == doctest::Approx(2.2414027276049453536).epsilon(1e-12));
    CHECK(classify_rejection(make_trial({ 2.5, 1.0 }, FailureType::A, { c, c })) ==
          Outcome::positive);
    CHECK(classify_rejection(make_trial({ 2.5, 1.0 }, FailureType::A, { 2.24, 2.24 })) ==
          Outcome::positive);
  }

  TEST_CASE("rejection is strict at the critical value")
  {
    CHECK(classify_rejection(make_trial({ 1.96 }, FailureType::B, { 1.96 })) == Outcome::negative);
  }

  TEST_CASE("single-endpoint classification ignores the failure type")
  {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
      const double z = -3.0 + 8.0 * rng.uniform();
      const double crit = 1.0 + 2.0 * rng.uniform();
      CHECK(classify_rejection(make_trial({ z }, FailureType::A, { crit })) ==
            classify_rejection(make_trial({ z }, FailureType::B, { crit })));
    }
  }

  TEST_CASE("type B: lowering one critical value never turns positive into negative")
  {
    Rng rng(6);
    for (int i = 0; i < 2000; ++i) {
      const int m = 1 + static_cast<int>(rng.below(4));
      std::vector<double> z(m), crit(m);
      for (int j = 0; j < m; ++j) {
        z[j] = -1.0 + 5.0 * rng.uniform();
        crit[j] = 1.0 + 2.0 * rng.uniform();
      }
      const auto before = classify_rejection(make_trial(z, FailureType::B, crit));
      crit[rng.below(m)] -= 2.0 * rng.uniform();
      const auto after = classify_rejection(make_trial(z, FailureType::B, crit));
      if (before == Outcome::positive)
        CHECK(after == Outcome::positive);
    }
  }

  TEST_CASE("criticals from the trial-level alpha")
  {
    CHECK(critical_z(0.025, 1, FailureType::B) == doctest::Approx(1.9599639845400542118));
    CHECK(critical_z(0.05, 2, FailureType::B) == doctest::Approx(1.644853626951472688));
    CHECK(critical_z(0.025, 2, FailureType::A) == doctest::Approx(2.2414027276049453536));
    TrialRecord r = make_trial({ 2.0, 2.0 }, FailureType::A, {});
    r.policy->nominal_alpha = 0.025;
    const auto filled = with_criticals(r);
    REQUIRE(filled.policy->critical_z.size() == 2);
    CHECK(filled.policy->critical_z[1] == doctest::Approx(2.2414027276049453536));
    CHECK(classify_rejection(r) == Outcome::negative);
  }

  TEST_CASE("censored endpoints")
  {
    TrialRecord r = make_trial({ 0.0 }, FailureType::B, { 1.96 });
    r.measures[0].z.reset();
    r.measures[0].censor_interval = censored_interval(0.05);
    CHECK(kind_of([&] { classify_rejection(r); }) == ErrorKind::cannot_classify);
    // |z| < 1.96 lies wholly at or below a 1.96 critical value.
    CHECK(classify_with_intervals(r) == Outcome::negative);
    r.policy->critical_z = { 1.0 };
    CHECK(kind_of([&] { classify_with_intervals(r); }) == ErrorKind::cannot_classify);

    TrialRecord a = make_trial({ 3.0, 0.0 }, FailureType::A, { 2.24, 2.24 });
    a.measures[1].z.reset();
    a.measures[1].censor_interval = censored_interval(0.05);
    CHECK(classify_with_intervals(a) == Outcome::positive);
  }

  TEST_CASE("censored interval")
  {
    const auto iv = censored_interval(0.05);
    CHECK(iv.high == doctest::Approx(1.9599639845400542118).epsilon(1e-14));
    CHECK(iv.low == -iv.high);
  }

  TEST_CASE("record invariants")
  {
    TrialRecord r = make_trial({ 1.0, 2.0 }, FailureType::B, { 1.96, 1.96 });
    CHECK_NOTHROW(r.validate());
    r.m = 3;
    CHECK_THROWS_AS(r.validate(), Error);
    r.m = 2;
    r.measures[1].endpoint_index = 3;
    CHECK_THROWS_AS(r.validate(), Error);
    r.measures[1].endpoint_index = 2;
    // Critical values may be stricter than the declared level, not laxer.
    r.policy->nominal_alpha = 0.025;
    r.policy->critical_z = { 2.5, 2.5 };
    CHECK_NOTHROW(r.validate());
    r.policy->critical_z = { 1.5, 2.5 };
    CHECK_THROWS_AS(r.validate(), Error);
  }
}
