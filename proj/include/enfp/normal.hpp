#pragma once

// Standard normal density, distribution and quantile functions.
//
// normal_cdf/normal_sf go through Cody's rational Chebyshev approximation of
// erfc (Math. Comp. 1969), accurate to roughly 1e-16 relative over the whole
// real line. normal_quantile is Wichura's AS241 (PPND16), about 1 part in
// 1e16.

namespace enfp {

inline constexpr double inv_sqrt_2pi = 0.39894228040143267794;
inline constexpr double log_sqrt_2pi = 0.91893853320467274178;

double normal_pdf(double x);
double normal_log_pdf(double x);

// Pr[Z <= x] and Pr[Z > x]; each is accurate in its own small tail.
double normal_cdf(double x);
double normal_sf(double x);

// Pr[a < Z <= b] for a <= b, evaluated in whichever tail avoids cancellation.
double normal_interval(double a, double b);

// Lower-tail quantile. Returns -inf / +inf at p = 0 / 1 and NaN outside [0,1].
double normal_quantile(double p);

// Upper-tail quantile, z with Pr[Z > z] = q, without forming 1 - q.
double normal_upper_quantile(double q);

double erfc_cody(double x);

} // namespace enfp
