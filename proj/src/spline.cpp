#include "enfp/spline.hpp"

#include "enfp/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace enfp {

namespace {

double safe_ratio(double num, double den)
{
  return den > 0.0 ? num / den : 0.0;
}

// Type-7 sample quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double prob)
{
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace

std::vector<double> bspline_values(std::span<const double> knots,
                                   int order,
                                   double x,
                                   int deriv)
{
  const auto nk = knots.size();
  require(order >= 1 && nk > static_cast<std::size_t>(order),
          ErrorKind::invalid_argument,
          "need more knots than the spline order");
  require(deriv >= 0 && deriv < order,
          ErrorKind::invalid_argument,
          "derivative order must lie in [0, order)");

  // Order-1 indicators; the right boundary belongs to the last non-empty span.
  std::vector<double> b(nk - 1, 0.0);
  std::size_t span = nk;
  for (std::size_t i = 0; i + 1 < nk; ++i)
    if (knots[i] <= x && x < knots[i + 1]) {
      span = i;
      break;
    }
  if (span == nk && x == knots[nk - 1]) {
    for (std::size_t i = nk - 1; i-- > 0;)
      if (knots[i] < knots[i + 1]) {
        span = i;
        break;
      }
  }
  if (span < nk)
    b[span] = 1.0;

  const int value_order = order - deriv;
  for (int r = 2; r <= value_order; ++r) {
    std::vector<double> next(nk - r, 0.0);
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] = safe_ratio(x - knots[i], knots[i + r - 1] - knots[i]) * b[i] +
                safe_ratio(knots[i + r] - x, knots[i + r] - knots[i + 1]) * b[i + 1];
    }
    b = std::move(next);
  }
  for (int r = value_order + 1; r <= order; ++r) {
    std::vector<double> next(nk - r, 0.0);
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] = (r - 1) * (safe_ratio(b[i], knots[i + r - 1] - knots[i]) -
                           safe_ratio(b[i + 1], knots[i + r] - knots[i + 1]));
    }
    b = std::move(next);
  }
  return b;
}

Eigen::MatrixXd natural_spline_basis(std::span<const double> x, int df)
{
  require(df >= 1, ErrorKind::invalid_argument, "basis df must be >= 1");
  require(x.size() >= 2, ErrorKind::invalid_argument, "need at least two points");

  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  require(lo < hi, ErrorKind::invalid_argument, "points must not all coincide");

  const int n_interior = df - 1;
  std::vector<double> knots(4, lo);
  for (int k = 1; k <= n_interior; ++k)
    knots.push_back(quantile_sorted(sorted, static_cast<double>(k) / (n_interior + 1)));
  knots.insert(knots.end(), 4, hi);

  // Full cubic B-spline basis minus the first column (no intercept).
  const int n_basis = static_cast<int>(knots.size()) - 4 - 1;
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(x.size()), n_basis);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto v = bspline_values(knots, 4, x[i]);
    for (int j = 0; j < n_basis; ++j)
      basis(static_cast<Eigen::Index>(i), j) = v[j + 1];
  }

  Eigen::MatrixXd constraint(n_basis, 2);
  for (int side = 0; side < 2; ++side) {
    const auto v = bspline_values(knots, 4, side == 0 ? lo : hi, 2);
    for (int j = 0; j < n_basis; ++j)
      constraint(j, side) = v[j + 1];
  }

  // Columns 3.. of Q span the null space of the boundary constraints.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(constraint);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n_basis, n_basis);
  return basis * q.rightCols(n_basis - 2);
}

} // namespace enfp
