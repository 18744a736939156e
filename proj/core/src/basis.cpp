#include "kanfit/basis.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "kanfit/errors.hpp"

namespace kanfit {

namespace {

constexpr double kDomainTolerance = 1e-9;

struct FamilyName {
  BasisFamily family;
  std::string_view name;
};

constexpr std::array<FamilyName, 6> kFamilyNames{{
    {BasisFamily::Taylor, "taylor"},
    {BasisFamily::Chebyshev, "cheby"},
    {BasisFamily::Hermite, "hermite"},
    {BasisFamily::Jacobi, "jacobi"},
    {BasisFamily::BSplineRBF, "bsrbf"},
    {BasisFamily::Wavelet, "wavelet"},
}};

void check_unit_interval(double x, const char* who) {
  if (!(std::abs(x) <= 1.0 + kDomainTolerance)) {
    std::ostringstream msg;
    msg << who << ": x = " << x << " outside [-1, 1]";
    throw DomainError(msg.str());
  }
}

void check_degree(int degree, const char* who) {
  if (degree < 0) throw ParameterError(std::string(who) + ": degree must be non-negative");
}

void check_spans(std::size_t n, std::span<double> values, std::span<double> derivs,
                 const char* who) {
  if (values.size() != n || derivs.size() != n)
    throw ShapeError(std::string(who) + ": output spans must have length " + std::to_string(n));
}

BasisEval make_eval(std::size_t n) { return BasisEval{std::vector<double>(n), std::vector<double>(n)}; }

// Three-term Jacobi recurrence, values only.
void jacobi_values(int degree, double alpha, double beta, double x, std::span<double> out) {
  out[0] = 1.0;
  if (degree == 0) return;
  out[1] = (alpha + 1.0) + (alpha + beta + 2.0) * (x - 1.0) / 2.0;
  const double ab = alpha + beta;
  for (int n = 2; n <= degree; ++n) {
    const double c = 2.0 * n + ab;
    const double a1 = 2.0 * n * (n + ab) * (c - 2.0);
    const double a2 = (c - 1.0) * (c * (c - 2.0) * x + alpha * alpha - beta * beta);
    const double a3 = 2.0 * (n + alpha - 1.0) * (n + beta - 1.0) * c;
    out[n] = (a2 * out[n - 1] - a3 * out[n - 2]) / a1;
  }
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::string_view family_name(BasisFamily family) noexcept {
  for (const auto& f : kFamilyNames)
    if (f.family == family) return f.name;
  return "unknown";
}

std::string valid_family_names() {
  std::string out;
  for (const auto& f : kFamilyNames) {
    if (!out.empty()) out += ", ";
    out += f.name;
  }
  return out;
}

BasisFamily parse_family(std::string_view name) {
  for (const auto& f : kFamilyNames)
    if (f.name == name) return f.family;
  if (name == "chebyshev") return BasisFamily::Chebyshev;
  if (name == "bspline-rbf" || name == "bspline_rbf") return BasisFamily::BSplineRBF;
  if (name == "wav" || name == "mexican-hat") return BasisFamily::Wavelet;
  throw ParameterError("unknown basis family '" + std::string(name) +
                       "' (valid: " + valid_family_names() + ")");
}

double default_rbf_epsilon(double grid_min, double grid_max, int n_spline) {
  const double spacing = (grid_max - grid_min) / static_cast<double>(n_spline - 1);
  return 1.0 / (spacing * spacing);
}

BasisSpec BasisSpec::defaults(BasisFamily family) {
  BasisSpec spec;
  spec.family = family;
  spec.degree = family == BasisFamily::Taylor ? 2 : 3;
  spec.squash = family != BasisFamily::BSplineRBF && family != BasisFamily::Wavelet;
  spec.rbf_epsilon = default_rbf_epsilon(spec.grid_min, spec.grid_max, spec.n_spline);
  return spec;
}

void BasisSpec::validate() const {
  if (degree < 0) throw ParameterError("basis: degree must be >= 0");
  if (family == BasisFamily::Jacobi && !(jacobi_alpha > -1.0 && jacobi_beta > -1.0))
    throw ParameterError("basis: jacobi alpha and beta must be > -1");
  if (family == BasisFamily::BSplineRBF) {
    if (!(grid_min < grid_max)) throw ParameterError("basis: grid_min must be < grid_max");
    if (spline_degree < 1) throw ParameterError("basis: spline_degree must be >= 1");
    if (n_spline < spline_degree + 1)
      throw ParameterError("basis: n_spline must be >= spline_degree + 1");
    if (!(rbf_epsilon > 0.0)) throw ParameterError("basis: rbf_epsilon must be > 0");
  }
  if (!std::isfinite(expansion_point)) throw ParameterError("basis: expansion_point must be finite");
}

std::size_t BasisSpec::size() const noexcept {
  switch (family) {
    case BasisFamily::BSplineRBF:
      return static_cast<std::size_t>(2 * n_spline + spline_degree - 1 + 1);
    case BasisFamily::Wavelet:
      return 1;
    default:
      return static_cast<std::size_t>(degree) + 1;
  }
}

Squashed squash(double x) noexcept {
  const double y = std::tanh(x);
  return {y, 1.0 - y * y};
}

void chebyshev_basis(int degree, double x, std::span<double> values, std::span<double> derivs) {
  check_degree(degree, "chebyshev_basis");
  check_unit_interval(x, "chebyshev_basis");
  check_spans(static_cast<std::size_t>(degree) + 1, values, derivs, "chebyshev_basis");
  // T_n' = n U_{n-1}; U follows the same recurrence with U_0 = 1, U_1 = 2x.
  values[0] = 1.0;
  derivs[0] = 0.0;
  if (degree == 0) return;
  values[1] = x;
  derivs[1] = 1.0;
  double u_prev = 1.0;     // U_0
  double u_curr = 2.0 * x;  // U_1
  for (int n = 2; n <= degree; ++n) {
    values[n] = 2.0 * x * values[n - 1] - values[n - 2];
    derivs[n] = n * u_curr;
    const double u_next = 2.0 * x * u_curr - u_prev;
    u_prev = u_curr;
    u_curr = u_next;
  }
}

void hermite_basis(int degree, double x, std::span<double> values, std::span<double> derivs) {
  check_degree(degree, "hermite_basis");
  check_spans(static_cast<std::size_t>(degree) + 1, values, derivs, "hermite_basis");
  values[0] = 1.0;
  derivs[0] = 0.0;
  if (degree == 0) return;
  values[1] = 2.0 * x;
  derivs[1] = 2.0;
  for (int n = 1; n < degree; ++n) {
    values[n + 1] = 2.0 * x * values[n] - 2.0 * n * values[n - 1];
    derivs[n + 1] = 2.0 * (n + 1) * values[n];
  }
}

void jacobi_basis(int degree, double alpha, double beta, double x, std::span<double> values,
                  std::span<double> derivs) {
  check_degree(degree, "jacobi_basis");
  if (!(alpha > -1.0 && beta > -1.0))
    throw ParameterError("jacobi_basis: alpha and beta must be > -1");
  check_unit_interval(x, "jacobi_basis");
  check_spans(static_cast<std::size_t>(degree) + 1, values, derivs, "jacobi_basis");
  jacobi_values(degree, alpha, beta, x, values);
  derivs[0] = 0.0;
  if (degree == 0) return;
  // d/dx P_n^{(a,b)} = (n + a + b + 1) / 2 * P_{n-1}^{(a+1,b+1)}; reuse derivs as scratch.
  jacobi_values(degree - 1, alpha + 1.0, beta + 1.0, x, derivs.subspan(1));
  for (int n = 1; n <= degree; ++n) derivs[n] *= (n + alpha + beta + 1.0) / 2.0;
}

void taylor_basis(int degree, double a, double x, std::span<double> values,
                  std::span<double> derivs) {
  check_degree(degree, "taylor_basis");
  check_spans(static_cast<std::size_t>(degree) + 1, values, derivs, "taylor_basis");
  const double d = x - a;
  values[0] = 1.0;
  derivs[0] = 0.0;
  for (int n = 1; n <= degree; ++n) {
    values[n] = values[n - 1] * d;
    derivs[n] = n * values[n - 1];
  }
}

void bsrbf_basis(const BasisSpec& spec, double x, std::span<double> values,
                 std::span<double> derivs) {
  check_spans(spec.size(), values, derivs, "bsrbf_basis");
  const int k = spec.spline_degree;
  const int n_grid = spec.n_spline;
  const double h = (spec.grid_max - spec.grid_min) / static_cast<double>(n_grid - 1);
  const int n_knots = n_grid + 2 * k;
  const int n_bs = n_grid + k - 1;
  auto knot = [&](int i) { return spec.grid_min + (i - k) * h; };

  // Triangular Cox-de Boor table; after the loop `cur` holds degree k and
  // `prev` degree k - 1 (needed for the derivative).
  thread_local std::vector<double> cur, prev;
  cur.assign(static_cast<std::size_t>(n_knots - 1), 0.0);
  for (int i = 0; i < n_knots - 1; ++i) cur[i] = (knot(i) <= x && x < knot(i + 1)) ? 1.0 : 0.0;
  for (int p = 1; p <= k; ++p) {
    prev = cur;
    const int count = n_knots - 1 - p;
    cur.assign(static_cast<std::size_t>(count), 0.0);
    const double denom = p * h;
    for (int i = 0; i < count; ++i)
      cur[i] = (x - knot(i)) / denom * prev[i] + (knot(i + p + 1) - x) / denom * prev[i + 1];
  }
  const double dk = k / (k * h);
  for (int i = 0; i < n_bs; ++i) {
    values[i] = cur[i];
    derivs[i] = dk * (prev[i] - prev[i + 1]);
  }

  const double eps = spec.rbf_epsilon;
  for (int j = 0; j < n_grid; ++j) {
    const double r = x - (spec.grid_min + j * h);
    const double g = std::exp(-eps * r * r);
    values[n_bs + j] = g;
    derivs[n_bs + j] = -2.0 * eps * r * g;
  }

  const double s = sigmoid(x);
  const std::size_t base = values.size() - 1;
  values[base] = x * s;
  derivs[base] = s * (1.0 + x * (1.0 - s));
}

BasisEval chebyshev_basis(int degree, double x) {
  check_degree(degree, "chebyshev_basis");
  auto out = make_eval(static_cast<std::size_t>(degree) + 1);
  chebyshev_basis(degree, x, out.values, out.derivs);
  return out;
}

BasisEval hermite_basis(int degree, double x) {
  check_degree(degree, "hermite_basis");
  auto out = make_eval(static_cast<std::size_t>(degree) + 1);
  hermite_basis(degree, x, out.values, out.derivs);
  return out;
}

BasisEval jacobi_basis(int degree, double alpha, double beta, double x) {
  check_degree(degree, "jacobi_basis");
  auto out = make_eval(static_cast<std::size_t>(degree) + 1);
  jacobi_basis(degree, alpha, beta, x, out.values, out.derivs);
  return out;
}

BasisEval taylor_basis(int degree, double a, double x) {
  check_degree(degree, "taylor_basis");
  auto out = make_eval(static_cast<std::size_t>(degree) + 1);
  taylor_basis(degree, a, x, out.values, out.derivs);
  return out;
}

BasisEval bsrbf_basis(const BasisSpec& spec, double x) {
  spec.validate();
  auto out = make_eval(spec.size());
  bsrbf_basis(spec, x, out.values, out.derivs);
  return out;
}

WaveletEval wavelet_eval(double a, double b, double x) {
  if (!(a > 0.0)) throw ParameterError("wavelet_eval: scale a must be > 0");
  const double u = (x - b) / a;
  const double g = std::exp(-0.5 * u * u);
  const double psi = kMexicanHatConstant * (1.0 - u * u) * g;
  const double dpsi_du = kMexicanHatConstant * u * (u * u - 3.0) * g;
  const double inv_sqrt_a = 1.0 / std::sqrt(a);
  WaveletEval out;
  out.value = inv_sqrt_a * psi;
  out.d_dx = inv_sqrt_a * dpsi_du / a;
  out.d_db = -out.d_dx;
  out.d_da = -0.5 * out.value / a - inv_sqrt_a * dpsi_du * u / a;
  return out;
}

void evaluate_basis(const BasisSpec& spec, double x, std::span<double> values,
                    std::span<double> derivs) {
  switch (spec.family) {
    case BasisFamily::Taylor:
      return taylor_basis(spec.degree, spec.expansion_point, x, values, derivs);
    case BasisFamily::Chebyshev:
      return chebyshev_basis(spec.degree, x, values, derivs);
    case BasisFamily::Hermite:
      return hermite_basis(spec.degree, x, values, derivs);
    case BasisFamily::Jacobi:
      return jacobi_basis(spec.degree, spec.jacobi_alpha, spec.jacobi_beta, x, values, derivs);
    case BasisFamily::BSplineRBF:
      return bsrbf_basis(spec, x, values, derivs);
    case BasisFamily::Wavelet: {
      check_spans(1, values, derivs, "evaluate_basis");
      const auto w = wavelet_eval(1.0, 0.0, x);
      values[0] = w.value;
      derivs[0] = w.d_dx;
      return;
    }
  }
}

BasisEval evaluate_basis(const BasisSpec& spec, double x) {
  spec.validate();
  auto out = make_eval(spec.size());
  evaluate_basis(spec, x, out.values, out.derivs);
  return out;
}

}  // namespace kanfit
