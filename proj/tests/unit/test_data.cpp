#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "doctest.h"
#include "kanfit/data.hpp"
#include "kanfit/errors.hpp"
#include "kanfit/text.hpp"

using namespace kanfit;
using doctest::Approx;

namespace fs = std::filesystem;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_feature_csv(in, "t.csv");
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("kanfit_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("csv with and without header") {
  const auto a = parse("f1,f2,score\n1,2,3\n4,5,6\n7,8,9\n");
  CHECK(a.rows() == 3);
  CHECK(a.cols() == 2);
  CHECK(a.scores == std::vector<double>{3, 6, 9});
  CHECK(a.feature_names == std::vector<std::string>{"f1", "f2"});
  CHECK(a.features(2, 1) == 8.0);

  const auto b = parse("1,2,3\n4,5,6\n");
  CHECK(b.rows() == 2);
  CHECK(b.feature_names.empty());
  CHECK(b.features(1, 0) == 4.0);
}

TEST_CASE("csv errors carry line and column") {
  CHECK(error_of("1,2,3\n4,5,x\n").find("line 2, column 3") != std::string::npos);
  CHECK(error_of("a,b,s\n1,2,3\n4,5\n").find("line 3") != std::string::npos);
  CHECK(error_of("").find("no data rows") != std::string::npos);
  CHECK(error_of("a,b,s\n").find("no data rows") != std::string::npos);
  CHECK(error_of("1,2,nan\n").find("line 1, column 3") != std::string::npos);
  CHECK_THROWS_AS(load_feature_csv("/nonexistent/nowhere.csv"), Error);
}

TEST_CASE("csv round trip at full precision") {
  Dataset ds = gen_synthetic(SyntheticKind::Friedman, 40, 6, 0.3, 12);
  ds.score_range = ScoreRange{-100.0, 100.0};
  ds.name = "friedman-test";
  const auto dir = scratch_dir("csv");
  save_feature_csv(ds, dir / "d.csv");
  CHECK(fs::exists(dir / "d.csv.meta"));
  const auto back = load_feature_csv(dir / "d.csv");
  CHECK(back.features == ds.features);
  CHECK(back.scores == ds.scores);
  CHECK(back.score_range == ds.score_range);
  CHECK(back.name == ds.name);

  write_file_atomic(dir / "d.csv.meta", "score_low = 0\nbogus = 1\n");
  CHECK_THROWS_AS(load_feature_csv(dir / "d.csv"), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("dataset validation") {
  Dataset ds = parse("1,2,3\n4,5,6\n");
  CHECK_NOTHROW(ds.validate());
  ds.score_range = ScoreRange{0.0, 5.0};
  CHECK_THROWS_AS(ds.validate(), ParameterError);
  ds.score_range = ScoreRange{0.0, 10.0};
  CHECK_NOTHROW(ds.validate());
  ds.scores.pop_back();
  CHECK_THROWS_AS(ds.validate(), ShapeError);
}

TEST_CASE("split sizes follow the floor rule") {
  auto sizes = [](std::size_t n) {
    const auto s = split_dataset(n, {}, 1);
    return std::array<std::size_t, 3>{s.train.size(), s.val.size(), s.test.size()};
  };
  CHECK(sizes(100) == std::array<std::size_t, 3>{70, 15, 15});
  CHECK(sizes(586) == std::array<std::size_t, 3>{410, 87, 89});
  CHECK_THROWS_AS(split_dataset(3, {}, 1), ParameterError);
  CHECK_THROWS_AS(split_dataset(100, SplitRatios{0.9, 0.2}, 1), ParameterError);
}

TEST_CASE("split partition property") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> pick_n(7, 3000);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = pick_n(rng);
    const std::uint64_t seed = rng();
    const auto s = split_dataset(n, {}, seed);
    REQUIRE(s.train.size() == static_cast<std::size_t>(std::floor(0.70 * n + 1e-9)));
    REQUIRE(s.val.size() == static_cast<std::size_t>(std::floor(0.15 * n + 1e-9)));
    REQUIRE(s.train.size() + s.val.size() + s.test.size() == n);
    std::vector<char> seen(n, 0);
    for (const auto* part : {&s.train, &s.val, &s.test})
      for (auto i : *part) {
        REQUIRE(i < n);
        REQUIRE(seen[i] == 0);
        seen[i] = 1;
      }
  }
  const auto a = split_dataset(500, {}, 9), b = split_dataset(500, {}, 9);
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);
  CHECK(split_dataset(500, {}, 10).train != a.train);
}

TEST_CASE("standardizer uses train statistics only") {
  const Dataset ds = gen_synthetic(SyntheticKind::Product, 200, 3, 0.0, 4);
  const auto s = split_dataset(ds.rows(), {}, 4);
  const auto st = fit_standardizer(ds, s.train);
  const auto prepared = st.apply(ds);
  for (std::size_t c = 0; c < ds.cols(); ++c) {
    double mean = 0.0, var = 0.0;
    for (auto r : s.train) mean += prepared.features(r, c);
    mean /= s.train.size();
    for (auto r : s.train) var += std::pow(prepared.features(r, c) - mean, 2);
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(std::sqrt(var / s.train.size()) - 1.0) < 1e-10);
  }
  // A validation row is transformed with the train mean/sd, not its own.
  const auto r = s.val[0];
  CHECK(prepared.features(r, 0) == Approx((ds.features(r, 0) - st.mean[0]) / st.stddev[0]));
}

TEST_CASE("constant features and score mapping") {
  Dataset ds = parse("1,7,0\n2,7,2.5\n3,7,5\n4,7,1\n");
  ds.score_range = ScoreRange{0.0, 5.0};
  const std::vector<std::size_t> all{0, 1, 2, 3};
  const auto st = fit_standardizer(ds, all);
  CHECK(st.stddev[1] == 0.0);
  const auto p = st.apply(ds);
  for (std::size_t r = 0; r < 4; ++r) CHECK(p.features(r, 1) == 0.0);
  CHECK(st.normalize_score(2.5) == 0.5);

  // Without a declared range the train min/max is used.
  ds.score_range.reset();
  const auto st2 = fit_standardizer(ds, std::vector<std::size_t>{1, 2});
  CHECK(st2.scores == ScoreRange{2.5, 5.0});

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int t = 0; t < 1000; ++t) {
    const double y = u(rng);
    CHECK(std::abs(st.denormalize_score(st.normalize_score(y)) - y) < 1e-12);
  }

  const auto off = fit_standardizer(ds, all, false);
  const auto q = off.apply(ds);
  CHECK(q.features == ds.features);
}

TEST_CASE("synthetic generators") {
  CHECK(friedman_target(std::vector<double>(5, 0.5)) == Approx(14.571067811865476).epsilon(1e-15));
  const auto p = gen_synthetic(SyntheticKind::Product, 300, 2, 0.0, 3);
  for (std::size_t r = 0; r < p.rows(); ++r) {
    CHECK(p.scores[r] == p.features(r, 0) * p.features(r, 1));
    CHECK(std::abs(p.features(r, 0)) <= 1.0);
  }
  const auto f = gen_synthetic(SyntheticKind::Friedman, 100, 5, 0.0, 3);
  for (std::size_t r = 0; r < f.rows(); ++r) {
    CHECK(f.features(r, 2) >= 0.0);
    CHECK(f.features(r, 2) <= 1.0);
    CHECK(f.scores[r] == Approx(friedman_target(f.features.row(r))).epsilon(1e-14));
  }
  CHECK_THROWS_AS(gen_synthetic(SyntheticKind::Friedman, 10, 3, 0.0, 1), ParameterError);
  CHECK_THROWS_AS(gen_synthetic(SyntheticKind::Product, 0, 3, 0.0, 1), ParameterError);
  CHECK_THROWS_AS(gen_synthetic(SyntheticKind::Product, 10, 3, -1.0, 1), ParameterError);

  for (auto k : {SyntheticKind::Product, SyntheticKind::Friedman, SyntheticKind::RandKan,
                 SyntheticKind::Monotone}) {
    const auto a = gen_synthetic(k, 50, 6, 0.1, 77);
    CHECK(a == gen_synthetic(k, 50, 6, 0.1, 77));
    CHECK_FALSE(a == gen_synthetic(k, 50, 6, 0.1, 78));
    CHECK(parse_synthetic_kind(synthetic_kind_name(k)) == k);
  }
}

TEST_CASE("monotone target is an increasing function of a projection") {
  const auto m = gen_synthetic(SyntheticKind::Monotone, 400, 4, 0.0, 6);
  // Invert g(t) = t + tanh(2t) / 2 by bisection, then t must be exactly linear
  // in the features.
  auto g = [](double t) { return t + 0.5 * std::tanh(2.0 * t); };
  Eigen::MatrixXd X(m.rows(), m.cols());
  Eigen::VectorXd t(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double lo = -20.0, hi = 20.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) < m.scores[r] ? lo : hi) = mid;
    }
    t(r) = 0.5 * (lo + hi);
    for (std::size_t c = 0; c < m.cols(); ++c) X(r, c) = m.features(r, c);
  }
  const Eigen::VectorXd w = X.colPivHouseholderQr().solve(t);
  CHECK((X * w - t).cwiseAbs().maxCoeff() < 1e-9);
  // Projection scaled to unit variance under U[-1, 1] features.
  CHECK(w.squaredNorm() / 3.0 == Approx(1.0).epsilon(1e-9));
}

}  // TEST_SUITE
