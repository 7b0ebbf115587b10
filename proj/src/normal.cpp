#include "enfp/normal.hpp"

#include <cmath>
#include <limits>

namespace enfp {

namespace {

constexpr double sqrt1_2 = 0.70710678118654752440;

// exp(-y*y) with the argument split so the rounding error of y*y does not
// get amplified (Cody's trick: y = ysq + del, ysq a multiple of 1/16).
double exp_neg_square(double y)
{
  const double ysq = std::trunc(y * 16.0) / 16.0;
  const double del = (y - ysq) * (y + ysq);
  return std::exp(-ysq * ysq) * std::exp(-del);
}

} // namespace

double erfc_cody(double x)
{
  static constexpr double a[5] = { 3.1611237438705656,
                                   113.864154151050156,
                                   377.485237685302021,
                                   3209.37758913846947,
                                   .185777706184603153 };
  static constexpr double b[4] = { 23.6012909523441209,
                                   244.024637934444173,
                                   1282.61652607737228,
                                   2844.23683343917062 };
  static constexpr double c[9] = { .564188496988670089, 8.88314979438837594,
                                   66.1191906371416295, 298.635138197400131,
                                   881.95222124176909,  1712.04761263407058,
                                   2051.07837782607147, 1230.33935479799725,
                                   2.15311535474403846e-8 };
  static constexpr double d[8] = { 15.7449261107098347, 117.693950891312499,
                                   537.181101862009858, 1621.38957456669019,
                                   3290.79923573345963, 4362.61909014324716,
                                   3439.36767414372164, 1230.33935480374942 };
  static constexpr double p[6] = { .305326634961232344,  .360344899949804439,
                                   .125781726111229246,  .0160837851487422766,
                                   6.58749161529837803e-4, .0163153871373020978 };
  static constexpr double q[5] = { 2.56852019228982242,
                                   1.87295284992346047,
                                   .527905102951428412,
                                   .0605183413124413191,
                                   .00233520497626869185 };
  constexpr double sqrpi = 0.56418958354775628695;
  constexpr double xsmall = 1.11e-16;
  constexpr double xbig = 26.543;

  if (std::isnan(x))
    return x;

  const double y = std::fabs(x);
  double result;

  if (y <= 0.46875) {
    const double ysq = y > xsmall ? y * y : 0.0;
    double xnum = a[4] * ysq;
    double xden = ysq;
    for (int i = 0; i < 3; ++i) {
      xnum = (xnum + a[i]) * ysq;
      xden = (xden + b[i]) * ysq;
    }
    return 1.0 - x * (xnum + a[3]) / (xden + b[3]);
  } else if (y <= 4.0) {
    double xnum = c[8] * y;
    double xden = y;
    for (int i = 0; i < 7; ++i) {
      xnum = (xnum + c[i]) * y;
      xden = (xden + d[i]) * y;
    }
    result = (xnum + c[7]) / (xden + d[7]);
    result *= exp_neg_square(y);
  } else if (y >= xbig) {
    result = 0.0;
  } else {
    const double ysq = 1.0 / (y * y);
    double xnum = p[5] * ysq;
    double xden = ysq;
    for (int i = 0; i < 4; ++i) {
      xnum = (xnum + p[i]) * ysq;
      xden = (xden + q[i]) * ysq;
    }
    result = ysq * (xnum + p[4]) / (xden + q[4]);
    result = (sqrpi - result) / y;
    result *= exp_neg_square(y);
  }

  return x < 0.0 ? 2.0 - result : result;
}

double normal_pdf(double x)
{
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double normal_log_pdf(double x)
{
  return -0.5 * x * x - log_sqrt_2pi;
}

double normal_cdf(double x)
{
  return 0.5 * erfc_cody(-x * sqrt1_2);
}

double normal_sf(double x)
{
  return 0.5 * erfc_cody(x * sqrt1_2);
}

double normal_interval(double a, double b)
{
  if (!(a < b))
    return 0.0;
  if (a >= 0.0)
    return normal_sf(a) - normal_sf(b);
  if (b <= 0.0)
    return normal_cdf(b) - normal_cdf(a);
  return 1.0 - normal_cdf(a) - normal_sf(b);
}

double normal_quantile(double u)
{
  // Algorithm AS241, Appl. Statist. (1988) vol. 37, no. 3.
  constexpr double split1 = 0.425;
  constexpr double split2 = 5.0;
  constexpr double const1 = 0.180625;
  constexpr double const2 = 1.6;

  constexpr double a0 = 3.3871328727963666080e0;
  constexpr double a1 = 1.3314166789178437745e+2;
  constexpr double a2 = 1.9715909503065514427e+3;
  constexpr double a3 = 1.3731693765509461125e+4;
  constexpr double a4 = 4.5921953931549871457e+4;
  constexpr double a5 = 6.7265770927008700853e+4;
  constexpr double a6 = 3.3430575583588128105e+4;
  constexpr double a7 = 2.5090809287301226727e+3;
  constexpr double b1 = 4.2313330701600911252e+1;
  constexpr double b2 = 6.8718700749205790830e+2;
  constexpr double b3 = 5.3941960214247511077e+3;
  constexpr double b4 = 2.1213794301586595867e+4;
  constexpr double b5 = 3.9307895800092710610e+4;
  constexpr double b6 = 2.8729085735721942674e+4;
  constexpr double b7 = 5.2264952788528545610e+3;

  constexpr double c0 = 1.42343711074968357734e0;
  constexpr double c1 = 4.63033784615654529590e0;
  constexpr double c2 = 5.76949722146069140550e0;
  constexpr double c3 = 3.64784832476320460504e0;
  constexpr double c4 = 1.27045825245236838258e0;
  constexpr double c5 = 2.41780725177450611770e-1;
  constexpr double c6 = 2.27238449892691845833e-2;
  constexpr double c7 = 7.74545014278341407640e-4;
  constexpr double d1 = 2.05319162663775882187e0;
  constexpr double d2 = 1.67638483018380384940e0;
  constexpr double d3 = 6.89767334985100004550e-1;
  constexpr double d4 = 1.48103976427480074590e-1;
  constexpr double d5 = 1.51986665636164571966e-2;
  constexpr double d6 = 5.47593808499534494600e-4;
  constexpr double d7 = 1.05075007164441684324e-9;

  constexpr double e0 = 6.65790464350110377720e0;
  constexpr double e1 = 5.46378491116411436990e0;
  constexpr double e2 = 1.78482653991729133580e0;
  constexpr double e3 = 2.96560571828504891230e-1;
  constexpr double e4 = 2.65321895265761230930e-2;
  constexpr double e5 = 1.24266094738807843860e-3;
  constexpr double e6 = 2.71155556874348757815e-5;
  constexpr double e7 = 2.01033439929228813265e-7;
  constexpr double f1 = 5.99832206555887937690e-1;
  constexpr double f2 = 1.36929880922735805310e-1;
  constexpr double f3 = 1.48753612908506148525e-2;
  constexpr double f4 = 7.86869131145613259100e-4;
  constexpr double f5 = 1.84631831751005468180e-5;
  constexpr double f6 = 1.42151175831644588870e-7;
  constexpr double f7 = 2.04426310338993978564e-15;

  if (std::isnan(u) || u < 0.0 || u > 1.0)
    return std::numeric_limits<double>::quiet_NaN();
  if (u == 0.0)
    return -std::numeric_limits<double>::infinity();
  if (u == 1.0)
    return std::numeric_limits<double>::infinity();

  const double q = u - 0.5;
  if (std::fabs(q) <= split1) {
    const double r = const1 - q * q;
    return q *
           (((((((a7 * r + a6) * r + a5) * r + a4) * r + a3) * r + a2) * r +
             a1) *
              r +
            a0) /
           (((((((b7 * r + b6) * r + b5) * r + b4) * r + b3) * r + b2) * r +
             b1) *
              r +
            1.0);
  }

  double r = q < 0.0 ? u : 1.0 - u;
  r = std::sqrt(-std::log(r));
  double ret;
  if (r <= split2) {
    r -= const2;
    ret = (((((((c7 * r + c6) * r + c5) * r + c4) * r + c3) * r + c2) * r +
            c1) *
             r +
           c0) /
          (((((((d7 * r + d6) * r + d5) * r + d4) * r + d3) * r + d2) * r +
            d1) *
             r +
           1.0);
  } else {
    r -= split2;
    ret = (((((((e7 * r + e6) * r + e5) * r + e4) * r + e3) * r + e2) * r +
            e1) *
             r +
           e0) /
          (((((((f7 * r + f6) * r + f5) * r + f4) * r + f3) * r + f2) * r +
            f1) *
             r +
           1.0);
  }
  return q < 0.0 ? -ret : ret;
}

double normal_upper_quantile(double q)
{
  // For q <= 1/2 the lower-tail branch with u = q is exact in its argument.
  if (q <= 0.5)
    return -normal_quantile(q);
  return normal_quantile(1.0 - q);
}

} // namespace enfp
