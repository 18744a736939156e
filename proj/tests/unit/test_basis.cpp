#include <cmath>
#include <random>

#include "doctest.h"
#include "kanfit/basis.hpp"
#include "kanfit/errors.hpp"
#include "oracles.hpp"

using namespace kanfit;
using doctest::Approx;

namespace {

BasisSpec family_spec(BasisFamily f, int degree) {
  BasisSpec s = BasisSpec::defaults(f);
  s.degree = degree;
  return s;
}

// Families with a closed interval domain get points in [-1, 1]; the rest a
// wider range.
double random_point(BasisFamily f, std::mt19937_64& rng) {
  const double r = (f == BasisFamily::Chebyshev || f == BasisFamily::Jacobi) ? 1.0 : 2.0;
  return std::uniform_real_distribution<double>(-r, r)(rng);
}

}  // namespace

TEST_SUITE("basis") {

TEST_CASE("squash") {
  auto s0 = squash(0.0);
  CHECK(s0.y == 0.0);
  CHECK(s0.dy_dx == 1.0);
  auto s20 = squash(20.0);
  CHECK(std::abs(s20.y - 1.0) < 1e-12);
  CHECK(std::abs(s20.dy_dx) < 1e-12);
  auto s = squash(0.5);
  CHECK(s.y == Approx(0.46211715726000976).epsilon(1e-15));
  CHECK(s.dy_dx == Approx(0.78644773296592741).epsilon(1e-15));
}

TEST_CASE("chebyshev values") {
  auto e1 = chebyshev_basis(1, 0.7);
  CHECK(e1.values == std::vector<double>{1.0, 0.7});
  CHECK(chebyshev_basis(2, 0.5).values[2] == Approx(-0.5).epsilon(1e-15));
  CHECK(chebyshev_basis(3, 0.5).values[3] == Approx(-1.0).epsilon(1e-15));
  CHECK_THROWS_AS(chebyshev_basis(3, 1.1), DomainError);
  CHECK_NOTHROW(chebyshev_basis(3, 1.0 + 1e-10));
}

TEST_CASE("chebyshev bounded on [-1, 1]") {
  for (int i = 0; i <= 2000; ++i) {
    const double x = -1.0 + i * 0.001;
    for (double v : chebyshev_basis(10, x).values) REQUIRE(std::abs(v) <= 1.0 + 1e-12);
  }
}

TEST_CASE("hermite values and parity") {
  for (double x : {-1.3, 0.0, 0.25, 2.0}) {
    auto e = hermite_basis(1, x);
    CHECK(e.values[0] == 1.0);
    CHECK(e.values[1] == Approx(2.0 * x));
  }
  CHECK(hermite_basis(2, 1.0).values[2] == Approx(2.0).epsilon(1e-15));
  CHECK(hermite_basis(3, -0.4).values[3] == Approx(-hermite_basis(3, 0.4).values[3]));
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const double x = std::uniform_real_distribution<double>(-3, 3)(rng);
    const auto pos = hermite_basis(8, x).values;
    const auto neg = hermite_basis(8, -x).values;
    for (int n = 0; n <= 8; ++n) {
      const double sign = n % 2 ? -1.0 : 1.0;
      REQUIRE(oracle::relative_error(neg[n], sign * pos[n]) < 1e-10);
    }
  }
}

TEST_CASE("jacobi values, symmetry and errors") {
  CHECK(jacobi_basis(0, 1.0, 1.0, 0.3).values == std::vector<double>{1.0});
  CHECK(jacobi_basis(2, 0.0, 0.0, 0.5).values[2] == Approx(-0.125).epsilon(1e-15));
  CHECK(jacobi_basis(1, 1.0, 1.0, 0.3).values[1] == Approx(0.6).epsilon(1e-15));
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const double x = std::uniform_real_distribution<double>(-1, 1)(rng);
    const double a = std::uniform_real_distribution<double>(-0.9, 3)(rng);
    const double b = std::uniform_real_distribution<double>(-0.9, 3)(rng);
    const auto lhs = jacobi_basis(6, a, b, -x).values;
    const auto rhs = jacobi_basis(6, b, a, x).values;
    for (int n = 0; n <= 6; ++n) {
      const double sign = n % 2 ? -1.0 : 1.0;
      REQUIRE(oracle::mixed_error(lhs[n], sign * rhs[n]) < 1e-10);
    }
  }
  CHECK_THROWS_AS(jacobi_basis(2, -1.0, 0.0, 0.1), ParameterError);
  CHECK_THROWS_AS(jacobi_basis(2, 0.0, -1.5, 0.1), ParameterError);
  CHECK_THROWS_AS(jacobi_basis(2, 0.0, 0.0, -1.01), DomainError);
}

TEST_CASE("taylor values") {
  CHECK(taylor_basis(2, 0.0, 0.5).values == std::vector<double>{1.0, 0.5, 0.25});
  auto c = taylor_basis(2, 0.0, 0.0);
  CHECK(c.values == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(c.derivs == std::vector<double>{0.0, 1.0, 0.0});
  CHECK(taylor_basis(3, 1.0, 1.5).values == std::vector<double>{1.0, 0.5, 0.25, 0.125});
}

TEST_CASE("bsrbf feature vector") {
  BasisSpec s = BasisSpec::defaults(BasisFamily::BSplineRBF);
  s.rbf_epsilon = 1.0;
  const auto e = bsrbf_basis(s, 0.0);
  // Frozen from the recursive Cox-de Boor oracle.
  const std::vector<double> expected{0.0,
                                     0.0,
                                     0.16666666666666666,
                                     0.6666666666666666,
                                     0.16666666666666666,
                                     0.0,
                                     0.0,
                                     0.36787944117144233,
                                     0.7788007830714049,
                                     1.0,
                                     0.7788007830714049,
                                     0.36787944117144233,
                                     0.0};
  REQUIRE(e.values.size() == expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k)
    CHECK(e.values[k] == Approx(expected[k]).epsilon(1e-14));
  // RBF feature at its own centre.
  const auto at_center = bsrbf_basis(s, 0.5);
  CHECK(at_center.values[7 + 3] == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("bsrbf partition of unity and out-of-grid support") {
  const BasisSpec s = BasisSpec::defaults(BasisFamily::BSplineRBF);
  const std::size_t n_splines = s.n_spline + s.spline_degree - 1;
  for (int i = 1; i < 1000; ++i) {
    const double x = -1.0 + i * 0.002;
    const auto v = bsrbf_basis(s, x).values;
    double sum = 0.0;
    for (std::size_t k = 0; k < n_splines; ++k) sum += v[k];
    REQUIRE(std::abs(sum - 1.0) < 1e-10);
  }
  const auto far = bsrbf_basis(s, 10.0).values;
  for (std::size_t k = 0; k < n_splines; ++k) CHECK(far[k] == 0.0);
}

TEST_CASE("basis sizes") {
  for (int d = 0; d <= 6; ++d) {
    for (auto f : {BasisFamily::Taylor, BasisFamily::Chebyshev, BasisFamily::Hermite,
                   BasisFamily::Jacobi}) {
      const auto s = family_spec(f, d);
      CHECK(s.size() == static_cast<std::size_t>(d + 1));
      CHECK(evaluate_basis(s, 0.3).values.size() == s.size());
    }
  }
  BasisSpec b = BasisSpec::defaults(BasisFamily::BSplineRBF);
  for (int k = 1; k <= 4; ++k) {
    for (int n = k + 1; n <= 8; ++n) {
      b.n_spline = n;
      b.spline_degree = k;
      b.rbf_epsilon = default_rbf_epsilon(b.grid_min, b.grid_max, n);
      CHECK(b.size() == static_cast<std::size_t>(2 * n + k - 1 + 1));
      const auto e = bsrbf_basis(b, 0.1);
      CHECK(e.values.size() == b.size());
      CHECK(e.derivs.size() == b.size());
    }
  }
  CHECK(BasisSpec::defaults(BasisFamily::Wavelet).size() == 1);
}

TEST_CASE("family defaults") {
  CHECK(BasisSpec::defaults(BasisFamily::Taylor).degree == 2);
  CHECK(BasisSpec::defaults(BasisFamily::Chebyshev).degree == 3);
  CHECK(BasisSpec::defaults(BasisFamily::Hermite).degree == 3);
  CHECK(BasisSpec::defaults(BasisFamily::Jacobi).degree == 3);
  CHECK(BasisSpec::defaults(BasisFamily::Chebyshev).squash);
  CHECK_FALSE(BasisSpec::defaults(BasisFamily::Wavelet).squash);
  CHECK_FALSE(BasisSpec::defaults(BasisFamily::BSplineRBF).squash);
  CHECK(BasisSpec::defaults(BasisFamily::BSplineRBF).rbf_epsilon == 4.0);
  CHECK(default_rbf_epsilon(-1.0, 1.0, 5) == 4.0);
}

TEST_CASE("basis settings validation") {
  BasisSpec s = BasisSpec::defaults(BasisFamily::Jacobi);
  s.jacobi_alpha = -1.0;
  CHECK_THROWS_AS(s.validate(), ParameterError);
  s = BasisSpec::defaults(BasisFamily::Chebyshev);
  s.degree = -1;
  CHECK_THROWS_AS(s.validate(), ParameterError);
  s = BasisSpec::defaults(BasisFamily::BSplineRBF);
  s.rbf_epsilon = 0.0;
  CHECK_THROWS_AS(s.validate(), ParameterError);
  s = BasisSpec::defaults(BasisFamily::BSplineRBF);
  s.grid_min = 1.0;
  CHECK_THROWS_AS(s.validate(), ParameterError);
}

TEST_CASE("family names") {
  for (auto f : {BasisFamily::Taylor, BasisFamily::Chebyshev, BasisFamily::Hermite,
                 BasisFamily::Jacobi, BasisFamily::BSplineRBF, BasisFamily::Wavelet})
    CHECK(parse_family(family_name(f)) == f);
  CHECK(parse_family("chebyshev") == BasisFamily::Chebyshev);
  CHECK_THROWS_AS(parse_family("legendre"), ParameterError);
}

TEST_CASE("wavelet") {
  const double c = 2.0 / (std::sqrt(3.0) * std::pow(std::numbers::pi, 0.25));
  CHECK(kMexicanHatConstant == Approx(c).epsilon(1e-15));
  CHECK(wavelet_eval(1.0, 0.0, 0.0).value == Approx(0.8673250705840775).epsilon(1e-15));
  CHECK(std::abs(wavelet_eval(1.0, 0.0, 1.0).value) < 1e-15);
  CHECK(std::abs(wavelet_eval(1.0, 0.0, -1.0).value) < 1e-15);
  for (double d : {0.1, 0.7, 2.5}) CHECK(wavelet_eval(1.7, 0.3, 0.3 + d).value == wavelet_eval(1.7, 0.3, 0.3 - d).value);
  CHECK_THROWS_AS(wavelet_eval(0.0, 0.0, 0.0), ParameterError);
  CHECK_THROWS_AS(wavelet_eval(-1.0, 0.0, 0.0), ParameterError);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int t = 0; t < 100; ++t) {
    const double a = std::exp(u(rng) / 2), b = u(rng), x = u(rng);
    const auto w = wavelet_eval(a, b, x);
    REQUIRE(oracle::mixed_error(w.value, oracle::mexican_hat(a, b, x)) < 1e-12);
    const double h = 1e-6;
    auto fx = [&](double v) { return oracle::mexican_hat(a, b, v); };
    auto fa = [&](double v) { return oracle::mexican_hat(v, b, x); };
    auto fb = [&](double v) { return oracle::mexican_hat(a, v, x); };
    REQUIRE(oracle::mixed_error(w.d_dx, oracle::central_difference(fx, x, h)) < 1e-7);
    REQUIRE(oracle::mixed_error(w.d_da, oracle::central_difference(fa, a, h)) < 1e-7);
    REQUIRE(oracle::mixed_error(w.d_db, oracle::central_difference(fb, b, h)) < 1e-7);
  }
}

TEST_CASE("values match oracles for random points") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 200; ++t) {
    const double xc = random_point(BasisFamily::Chebyshev, rng);
    const double xh = random_point(BasisFamily::Hermite, rng);
    const auto cheb = chebyshev_basis(6, xc).values;
    const auto herm = hermite_basis(6, xh).values;
    const auto jac = jacobi_basis(6, 1.0, 1.0, xc).values;
    const auto tay = taylor_basis(6, 0.0, xh).values;
    for (int n = 0; n <= 6; ++n) {
      REQUIRE(oracle::mixed_error(cheb[n], oracle::chebyshev(n, xc)) < 1e-10);
      REQUIRE(oracle::mixed_error(herm[n], oracle::hermite(n, xh)) < 1e-10);
      REQUIRE(oracle::mixed_error(jac[n], oracle::jacobi(n, 1.0, 1.0, xc)) < 1e-10);
      REQUIRE(oracle::mixed_error(tay[n], oracle::taylor(n, 0.0, xh)) < 1e-10);
    }
    const BasisSpec b = BasisSpec::defaults(BasisFamily::BSplineRBF);
    const auto got = bsrbf_basis(b, xh).values;
    const auto want = oracle::bsrbf(b.grid_min, b.grid_max, b.n_spline, b.spline_degree,
                                    b.rbf_epsilon, xh);
    REQUIRE(got.size() == want.size());
    for (std::size_t k = 0; k < got.size(); ++k) REQUIRE(oracle::mixed_error(got[k], want[k]) < 1e-10);
  }
}

TEST_CASE("derivatives match central differences") {
  std::mt19937_64 rng(99);
  const double h = 1e-6;
  for (auto f : {BasisFamily::Taylor, BasisFamily::Chebyshev, BasisFamily::Hermite,
                 BasisFamily::Jacobi, BasisFamily::BSplineRBF}) {
    for (int d = 0; d <= 6; ++d) {
      auto s = family_spec(f, d);
      for (int t = 0; t < 100; ++t) {
        double x = random_point(f, rng);
        if (f == BasisFamily::Chebyshev || f == BasisFamily::Jacobi) x *= 0.999;
        const auto e = evaluate_basis(s, x);
        for (std::size_t k = 0; k < e.values.size(); ++k) {
          auto g = [&](double v) { return evaluate_basis(s, v).values[k]; };
          const double fd = oracle::central_difference(g, x, h);
          const bool ok = oracle::relative_error(e.derivs[k], fd) < 1e-5 ||
                          std::abs(e.derivs[k] - fd) < 1e-7;
          REQUIRE_MESSAGE(ok, family_name(f), " degree ", d, " k ", k, " x ", x);
        }
      }
    }
  }
}

TEST_CASE("in-place and allocating forms agree") {
  std::vector<double> v(7), d(7);
  chebyshev_basis(6, 0.3, v, d);
  CHECK(v == chebyshev_basis(6, 0.3).values);
  CHECK(d == chebyshev_basis(6, 0.3).derivs);
  hermite_basis(6, -1.2, v, d);
  CHECK(v == hermite_basis(6, -1.2).values);
}

}  // TEST_SUITE
