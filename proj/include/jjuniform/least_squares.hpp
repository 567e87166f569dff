#pragma once

// Small dense least-squares fits (straight lines and low-order polynomials)
// on a centred and scaled Vandermonde matrix.

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace jju::lsq {

inline std::size_t distinct_count(std::span<const double> xs) {
  return std::set<double>(xs.begin(), xs.end()).size();
}

/// Mean that returns the common value exactly when all inputs are equal.
inline double shifted_mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double ref = v.front();
  double acc = 0.0;
  for (double x : v) acc += x - ref;
  return ref + acc / static_cast<double>(v.size());
}

/// Population standard deviation about `mean`.
inline double population_stddev(std::span<const double> v, double mean) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

inline double sample_stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = shifted_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

/// Polynomial least squares: coefficients c[0] + c[1] x + ... + c[deg] x^deg.
/// Throws Underdetermined with fewer than deg + 1 distinct abscissae.
inline std::vector<double> polyfit(std::span<const double> xs, std::span<const double> ys,
                                   int degree) {
  const std::size_t n = xs.size();
  const std::size_t k = static_cast<std::size_t>(degree) + 1;
  if (ys.size() != n) throw DataError("polyfit: x and y sizes differ");
  if (distinct_count(xs) < k)
    throw Underdetermined("fit of degree " + std::to_string(degree) + " needs at least " +
                          std::to_string(k) + " distinct abscissae");

  // Centre and scale x so the Vandermonde columns are O(1).
  double lo = *std::min_element(xs.begin(), xs.end());
  double hi = *std::max_element(xs.begin(), xs.end());
  const double shift = 0.5 * (lo + hi);
  const double scale = 0.5 * (hi - lo);

  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (xs[i] - shift) / scale;
    double p = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p;
      p *= t;
    }
    b(static_cast<Eigen::Index>(i)) = ys[i];
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < static_cast<Eigen::Index>(k))
    throw Underdetermined("polyfit: rank-deficient design matrix");
  const Eigen::VectorXd c = qr.solve(b);

  // Back to the raw basis: expand sum c_j ((x - shift)/scale)^j.
  std::vector<double> out(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const double cj = c(static_cast<Eigen::Index>(j)) / std::pow(scale, static_cast<double>(j));
    // (x - shift)^j = sum_m C(j,m) x^m (-shift)^(j-m)
    double binom = 1.0;
    for (std::size_t m = 0; m <= j; ++m) {
      if (m > 0) binom = binom * static_cast<double>(j - m + 1) / static_cast<double>(m);
      out[m] += cj * binom * std::pow(-shift, static_cast<double>(j - m));
    }
  }
  return out;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double operator()(double x) const { return intercept + slope * x; }
};

inline LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  const auto c = polyfit(xs, ys, 1);
  return {c[1], c[0]};
}

} // namespace jju::lsq
