#include "enfp/bayes.hpp"
#include "enfp/posterior.hpp"

#include "doctest.h"
#include "test_support.hpp"

using namespace enfp;
using enfp::test::kind_of;

namespace {

PositiveTrialResult pos(int m, FailureType t, std::vector<double> z, std::vector<double> h,
                        std::string stratum = "")
{
  PositiveTrialResult r;
  r.trial_id = "p";
  r.m = m;
  r.failure_type = t;
  r.z_values = std::move(z);
  r.h_values = std::move(h);
  r.stratum = std::move(stratum);
  return r;
}

TrialRecord record(std::vector<double> z, FailureType t, double alpha)
{
  TrialRecord r;
  r.trial_id = "rec";
  r.m = static_cast<int>(z.size());
  r.failure_type = t;
  for (std::size_t j = 0; j < z.size(); ++j) {
    EfficacyMeasure e;
    e.endpoint_index = static_cast<int>(j) + 1;
    e.z = z[j];
    r.measures.push_back(e);
  }
  RejectionPolicy p;
  p.nominal_alpha = alpha;
  r.policy = p;
  return r;
}

} // namespace

TEST_SUITE("bayes")
{
  TEST_CASE("trial contributions")
  {
    CHECK(trial_contribution(pos(1, FailureType::B, { 2.5 }, { 0.99 })) ==
          doctest::Approx(0.01).epsilon(1e-12));
    CHECK(trial_contribution(pos(2, FailureType::B, { 2.5, 2.1 }, { 0.99, 0.95 })) ==
          doctest::Approx(0.06).epsilon(1e-12));
    const auto a = pos(2, FailureType::A, { 2.5, 2.1 }, { 0.99, 0.95 });
    CHECK(trial_contribution(a) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(trial_contribution(a, EndpointSelection::tightest) == doctest::Approx(0.01).epsilon(1e-12));
    const auto a2 = pos(2, FailureType::A, { 2.1, 2.5 }, { 0.95, 0.99 });
    CHECK(trial_contribution(a2) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(trial_contribution(a2, EndpointSelection::tightest) == doctest::Approx(0.01).epsilon(1e-12));
  }

  TEST_CASE("omega_hat")
  {
    const std::vector<PositiveTrialResult> two{ pos(1, FailureType::B, { 2.0 }, { 0.99 }),
                                                pos(1, FailureType::B, { 2.0 }, { 0.95 }) };
    CHECK(omega_hat(two) == doctest::Approx(0.06).epsilon(1e-12));
    CHECK(omega_hat(std::vector<PositiveTrialResult>{}) == 0.0);
    const std::vector<PositiveTrialResult> mixed{
      pos(1, FailureType::B, { 2.0 }, { 0.98 }),
      pos(2, FailureType::B, { 2.0, 2.0 }, { 0.99, 0.97 }),
    };
    CHECK(omega_hat(mixed) == doctest::Approx(0.06).epsilon(1e-12));
  }

  TEST_CASE("recompute path uses the model")
  {
    const auto tp = enfp::test::two_point();
    const auto p = pos(2, FailureType::B, { 2.0, 0.0 }, { 0.0, 0.0 });
    CHECK(trial_contribution(p, tp) ==
          doctest::Approx((1.0 - h_probability(tp, 2.0)) + 0.5).epsilon(1e-12));
  }

  TEST_CASE("positive results from records")
  {
    const auto tp = enfp::test::two_point();
    const auto r = make_positive_result(record({ 2.5 }, FailureType::B, 0.025), tp);
    CHECK(r.h_values.size() == 1);
    CHECK(r.h_values[0] == h_probability(tp, 2.5));
    CHECK(kind_of([&] { make_positive_result(record({ 1.0 }, FailureType::B, 0.025), tp); }) ==
          ErrorKind::invalid_argument);
  }

  TEST_CASE("negative trials never change omega_hat")
  {
    const auto tp = enfp::test::two_point();
    std::vector<PositiveTrialResult> positives;
    const std::vector<TrialRecord> records{ record({ 2.5 }, FailureType::B, 0.025),
                                            record({ 0.5 }, FailureType::B, 0.025),
                                            record({ 3.1, 0.2 }, FailureType::A, 0.025),
                                            record({ 3.1, 0.2 }, FailureType::B, 0.025) };
    double with_all = 0.0;
    for (const auto& r : records) {
      if (classify_rejection(r) == Outcome::positive) {
        positives.push_back(make_positive_result(r, tp));
        with_all = omega_hat(positives);
      }
    }
    CHECK(positives.size() == 2);
    CHECK(with_all == doctest::Approx(omega_hat(positives)));
  }

  TEST_CASE("bounds on omega_hat")
  {
    Rng rng(50);
    std::vector<PositiveTrialResult> ps;
    int total_m = 0;
    for (int i = 0; i < 100; ++i) {
      const int m = 1 + static_cast<int>(rng.below(3));
      std::vector<double> z(m), h(m);
      for (int j = 0; j < m; ++j) {
        z[j] = rng.uniform() * 4;
        h[j] = rng.uniform();
      }
      ps.push_back(pos(m, rng.uniform() < 0.5 ? FailureType::A : FailureType::B, z, h));
      total_m += m;
    }
    const double w = omega_hat(ps);
    CHECK(w >= 0.0);
    CHECK(w <= total_m);
  }

  TEST_CASE("stratified")
  {
    const auto tp = enfp::test::two_point();
    const auto other = enfp::test::two_point(0.2);
    const std::vector<PositiveTrialResult> ps{ pos(1, FailureType::B, { 2.0 }, { 0.0 }, "a"),
                                               pos(1, FailureType::B, { 1.5 }, { 0.0 }, "b") };
    const auto s = omega_hat_stratified(ps, { { "a", tp }, { "b", other }, { "c", tp } });
    CHECK(s.per_stratum.at("a") == doctest::Approx(1.0 - h_probability(tp, 2.0)));
    CHECK(s.per_stratum.at("b") == doctest::Approx(1.0 - h_probability(other, 1.5)));
    CHECK(s.per_stratum.at("c") == 0.0);
    CHECK(s.total == doctest::Approx(s.per_stratum.at("a") + s.per_stratum.at("b")));

    std::vector<PositiveTrialResult> single = ps;
    for (auto& p : single)
      p.stratum = "a";
    CHECK(omega_hat_stratified(single, { { "a", tp } }).total ==
          doctest::Approx(omega_hat(single, tp)));
    CHECK(kind_of([&] { omega_hat_stratified(ps, { { "a", tp } }); }) ==
          ErrorKind::missing_stratum);
  }
}
