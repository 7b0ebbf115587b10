#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace enfp {

// Values (or the deriv-th derivative) of all B-splines of the given order
// defined on `knots` (boundary knots repeated), evaluated at x.
// Returns knots.size() - order values.
std::vector<double> bspline_values(std::span<const double> knots,
                                   int order,
                                   double x,
                                   int deriv = 0);

// Natural cubic spline basis without intercept, df columns: interior knots
// at equally spaced quantiles of x, boundary knots at its range, second
// derivative constrained to zero at both boundaries. Same construction as
// R's splines::ns(x, df).
Eigen::MatrixXd natural_spline_basis(std::span<const double> x, int df);

} // namespace enfp
