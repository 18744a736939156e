#pragma once

// Univariate basis families for KAN edge functions. Every edge function is a
// linear combination of the features produced here, so a KAN layer is linear in
// its learnable coefficients.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kanfit {

enum class BasisFamily { Taylor, Chebyshev, Hermite, Jacobi, BSplineRBF, Wavelet };

/// Short CLI/config name: taylor, cheby, hermite, jacobi, bsrbf, wavelet.
std::string_view family_name(BasisFamily family) noexcept;

/// Accepts the short names plus a few long aliases ("chebyshev", "bspline-rbf", ...).
/// Throws ParameterError listing the valid names.
BasisFamily parse_family(std::string_view name);

/// Comma separated list of the accepted short names.
std::string valid_family_names();

struct BasisSpec {
  BasisFamily family = BasisFamily::Chebyshev;
  int degree = 3;
  double expansion_point = 0.0;  // Taylor centre
  double jacobi_alpha = 1.0;
  double jacobi_beta = 1.0;
  double grid_min = -1.0;
  double grid_max = 1.0;
  int n_spline = 5;       // grid points on [grid_min, grid_max]
  int spline_degree = 3;
  double rbf_epsilon = 4.0;  // Gaussian width in exp(-eps * r^2)
  bool squash = true;        // pass inputs through tanh before evaluation

  /// Family defaults: degree 2 for Taylor, 3 for the other polynomials; squash on
  /// for polynomial families only; BSRBF epsilon from the spacing rule.
  static BasisSpec defaults(BasisFamily family);

  /// Throws ParameterError on a violated invariant.
  void validate() const;

  /// Number of features per edge. Polynomials: degree + 1. BSRBF:
  /// (n_spline + spline_degree - 1) splines + n_spline RBFs + 1 base activation.
  /// Wavelet: 1 (the edge carries its own scale and translation).
  std::size_t size() const noexcept;

  friend bool operator==(const BasisSpec&, const BasisSpec&) = default;
};

/// eps = 1 / spacing^2 where spacing = (grid_max - grid_min) / (n_spline - 1).
double default_rbf_epsilon(double grid_min, double grid_max, int n_spline);

struct BasisEval {
  std::vector<double> values;
  std::vector<double> derivs;  // d/dx of each entry of values
};

struct Squashed {
  double y;
  double dy_dx;
};

/// tanh squash used to bring unbounded activations into (-1, 1).
Squashed squash(double x) noexcept;

BasisEval chebyshev_basis(int degree, double x);
BasisEval hermite_basis(int degree, double x);
BasisEval jacobi_basis(int degree, double alpha, double beta, double x);
BasisEval taylor_basis(int degree, double a, double x);
BasisEval bsrbf_basis(const BasisSpec& spec, double x);

// In-place variants used on hot paths. Both spans must have length degree + 1
// (or spec.size() for BSRBF). No allocation.
void chebyshev_basis(int degree, double x, std::span<double> values, std::span<double> derivs);
void hermite_basis(int degree, double x, std::span<double> values, std::span<double> derivs);
void jacobi_basis(int degree, double alpha, double beta, double x, std::span<double> values,
                  std::span<double> derivs);
void taylor_basis(int degree, double a, double x, std::span<double> values,
                  std::span<double> derivs);
void bsrbf_basis(const BasisSpec& spec, double x, std::span<double> values,
                 std::span<double> derivs);

/// Mexican hat normalisation constant 2 / (sqrt(3) * pi^(1/4)).
inline constexpr double kMexicanHatConstant = 0.86732507058407751832;

struct WaveletEval {
  double value;
  double d_dx;
  double d_da;
  double d_db;
};

/// psi_{a,b}(x) = a^{-1/2} * C (1 - u^2) exp(-u^2 / 2), u = (x - b) / a.
/// Throws ParameterError if a <= 0.
WaveletEval wavelet_eval(double a, double b, double x);

/// Dispatch on spec.family, without squashing. For Wavelet this evaluates the
/// mother wavelet with a = 1, b = 0.
BasisEval evaluate_basis(const BasisSpec& spec, double x);
void evaluate_basis(const BasisSpec& spec, double x, std::span<double> values,
                    std::span<double> derivs);

}  // namespace kanfit
