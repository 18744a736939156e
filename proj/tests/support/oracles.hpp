#pragma once

// Independent reference implementations for the test suites. Nothing here
// calls into the library's evaluation paths: closed forms and textbook
// definitions only.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

inline double chebyshev(int n, double x) { return std::cos(n * std::acos(x)); }

// Explicit sum H_n(x) = n! sum_m (-1)^m (2x)^{n-2m} / (m! (n-2m)!).
inline double hermite(int n, double x) {
  double sum = 0.0;
  for (int m = 0; 2 * m <= n; ++m) {
    const double term = std::pow(-1.0, m) * std::pow(2.0 * x, n - 2 * m) /
                        (std::tgamma(m + 1.0) * std::tgamma(n - 2 * m + 1.0));
    sum += term;
  }
  return std::tgamma(n + 1.0) * sum;
}

// Generalised binomial coefficient C(r, k) for real r.
inline double binom(double r, int k) {
  double out = 1.0;
  for (int i = 0; i < k; ++i) out *= (r - i) / (k - i);
  return out;
}

// 2^-n sum_k C(n+a, k) C(n+b, n-k) (x-1)^{n-k} (x+1)^k
inline double jacobi(int n, double a, double b, double x) {
  double sum = 0.0;
  for (int k = 0; k <= n; ++k)
    sum += binom(n + a, k) * binom(n + b, n - k) * std::pow(x - 1.0, n - k) * std::pow(x + 1.0, k);
  return sum / std::pow(2.0, n);
}

inline double taylor(int n, double a, double x) { return std::pow(x - a, n); }

// Cox-de Boor straight from the recursive definition.
inline double bspline(int i, int p, double x, const std::vector<double>& t) {
  if (p == 0) return (t[i] <= x && x < t[i + 1]) ? 1.0 : 0.0;
  double left = 0.0, right = 0.0;
  if (t[i + p] != t[i]) left = (x - t[i]) / (t[i + p] - t[i]) * bspline(i, p - 1, x, t);
  if (t[i + p + 1] != t[i + 1])
    right = (t[i + p + 1] - x) / (t[i + p + 1] - t[i + 1]) * bspline(i + 1, p - 1, x, t);
  return left + right;
}

// Feature vector [splines..., rbfs..., x * sigmoid(x)] for a uniform grid of
// n_grid points on [lo, hi] extended by `degree` knots on each side.
inline std::vector<double> bsrbf(double lo, double hi, int n_grid, int degree, double eps,
                                 double x) {
  const double h = (hi - lo) / (n_grid - 1);
  std::vector<double> knots;
  for (int i = -degree; i < n_grid + degree; ++i) knots.push_back(lo + i * h);
  std::vector<double> out;
  for (int i = 0; i < n_grid + degree - 1; ++i) out.push_back(bspline(i, degree, x, knots));
  for (int j = 0; j < n_grid; ++j) {
    const double r = x - (lo + j * h);
    out.push_back(std::exp(-eps * r * r));
  }
  out.push_back(x / (1.0 + std::exp(-x)));
  return out;
}

inline double mexican_hat(double a, double b, double x) {
  const double c = 2.0 / (std::sqrt(3.0) * std::pow(std::numbers::pi, 0.25));
  const double u = (x - b) / a;
  return c * (1.0 - u * u) * std::exp(-u * u / 2.0) / std::sqrt(a);
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// |a - b| relative to max(1, |b|).
inline double mixed_error(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::abs(b));
}

inline double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace oracle
