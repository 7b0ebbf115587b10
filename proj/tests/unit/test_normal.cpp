#include "enfp/normal.hpp"
#include "enfp/rng.hpp"

#include "doctest.h"

#include <cmath>
#include <limits>

using namespace enfp;

namespace {

// Phi(x) = 1/2 + phi(x) * sum_n x^(2n+1) / (1*3*...*(2n+1)), summed in long
// double until the terms vanish. Adequate for |x| <= 7.
long double series_cdf(long double x)
{
  long double term = x;
  long double sum = x;
  for (int n = 1; n < 2000; ++n) {
    term *= x * x / (2 * n + 1);
    sum += term;
    if (std::fabs(term) < 1e-30L * std::fabs(sum))
      break;
  }
  const long double pdf = std::exp(-x * x / 2) / std::sqrt(2 * 3.141592653589793238462643383279L);
  return 0.5L + pdf * sum;
}

} // namespace

TEST_SUITE("normal")
{
  TEST_CASE("cdf matches the power-series oracle to 1e-12 absolute")
  {
    for (double x = -7.0; x <= 7.0; x += 0.01) {
      const double oracle = static_cast<double>(series_cdf(x));
      CHECK(std::abs(normal_cdf(x) - oracle) < 1e-12);
      CHECK(std::abs(normal_sf(x) - (1.0 - oracle)) < 1e-12);
    }
  }

  TEST_CASE("tail values agree with 40-digit references")
  {
    struct Ref
    {
      double x;
      double cdf;
    };
    const Ref refs[] = {
      { -38.0, 2.8854283600687843084e-316 }, { -20.0, 2.7536241186062336951e-89 },
      { -10.0, 7.619853024160526066e-24 },   { -5.0, 2.8665157187919391167e-7 },
      { -1.5, 0.066807201268858066004 },     { 0.5, 0.69146246127401310364 },
      { 3.0, 0.99865010196836990547 },
    };
    for (const auto& r : refs) {
      CAPTURE(r.x);
      CHECK(normal_cdf(r.x) == doctest::Approx(r.cdf).epsilon(1e-14));
      CHECK(normal_sf(-r.x) == doctest::Approx(r.cdf).epsilon(1e-14));
    }
  }

  TEST_CASE("quantile agrees with 40-digit references")
  {
    struct Ref
    {
      double p;
      double z;
    };
    const Ref refs[] = {
      { 1e-300, -37.047096299361199237 }, { 1e-20, -9.2623400897984075796 },
      { 1e-10, -6.3613409024040561991 },  { 0.0125, -2.2414027276049453536 },
      { 0.025, -1.9599639845400542118 },  { 0.05, -1.644853626951472688 },
      { 0.3, -0.52440051270804081597 },   { 0.975, 1.9599639845400538556 },
      { 0.9999999, 5.1993375822906610937 },
    };
    for (const auto& r : refs) {
      CAPTURE(r.p);
      CHECK(normal_quantile(r.p) == doctest::Approx(r.z).epsilon(1e-14));
    }
    CHECK(normal_quantile(0.5) == 0.0);
  }

  TEST_CASE("quantile inverts the cdf")
  {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
      // Upper tail through the survival function, where the cdf rounds to 1.
      const double x = -8.0 + 8.0 * rng.uniform();
      CHECK(normal_quantile(normal_cdf(x)) == doctest::Approx(x).epsilon(1e-12));
      CHECK(normal_upper_quantile(normal_sf(-x)) == doctest::Approx(-x).epsilon(1e-12));
    }
  }

  TEST_CASE("upper quantile and interval mass")
  {
    CHECK(normal_upper_quantile(0.025) == doctest::Approx(1.9599639845400542118).epsilon(1e-14));
    CHECK(normal_interval(-1.96, 1.96) ==
          doctest::Approx(static_cast<double>(2 * series_cdf(1.96L) - 1)).epsilon(1e-14));
    CHECK(normal_interval(30.0, 31.0) > 0.0);
    CHECK(normal_interval(1.0, 1.0) == 0.0);
  }

  TEST_CASE("pdf and log pdf")
  {
    CHECK(normal_pdf(0.0) == doctest::Approx(0.39894228040143267794).epsilon(1e-15));
    CHECK(normal_log_pdf(0.0) == doctest::Approx(-0.91893853320467274178).epsilon(1e-15));
    CHECK(normal_log_pdf(50.0) == doctest::Approx(-0.91893853320467274178 - 1250.0));
  }

  TEST_CASE("quantile limits")
  {
    CHECK(normal_quantile(0.0) == -std::numeric_limits<double>::infinity());
    CHECK(normal_quantile(1.0) == std::numeric_limits<double>::infinity());
    CHECK(std::isnan(normal_quantile(-0.1)));
  }
}
