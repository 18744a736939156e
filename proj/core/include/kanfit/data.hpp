#pragma once

// Feature-matrix datasets: one row per image, m feature columns followed by the
// subjective score.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kanfit/matrix.hpp"

namespace kanfit {

struct ScoreRange {
  double low;
  double high;
  friend bool operator==(const ScoreRange&, const ScoreRange&) = default;
};

struct Dataset {
  Matrix features;                       // n x m
  std::vector<double> scores;            // n
  std::vector<std::string> feature_names;  // empty or m
  std::optional<ScoreRange> score_range;
  std::string name;

  std::size_t rows() const noexcept { return features.rows(); }
  std::size_t cols() const noexcept { return features.cols(); }

  /// Throws ShapeError / ParameterError on a violated invariant.
  void validate() const;

  Dataset subset(std::span<const std::size_t> rows) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// CSV contract: comma separated, optional header row (detected by any
/// non-numeric cell in the first row), last column is the score. Errors carry
/// the 1-based file line and column.
Dataset parse_feature_csv(std::istream& in, std::string_view source = "<stream>");

/// Loads `path`, plus the optional sidecar `<path>.meta` (keys: score_low,
/// score_high, name).
Dataset load_feature_csv(const std::filesystem::path& path);

/// Header row + full-precision values. The sidecar is written when the dataset
/// declares a score range or a name.
std::string format_feature_csv(const Dataset& ds);
void save_feature_csv(const Dataset& ds, const std::filesystem::path& path);

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;  // test takes the remainder
  friend bool operator==(const SplitRatios&, const SplitRatios&) = default;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Seeded uniform shuffle of 0..n-1; |train| = floor(train * n),
/// |val| = floor(val * n), test = remainder. Throws ParameterError when a part
/// would be empty or the ratios are invalid.
SplitIndices split_dataset(std::size_t n, SplitRatios ratios, std::uint64_t seed);

/// Train-split z-scoring of features and linear mapping of scores to [0, 1].
struct Standardizer {
  bool standardize_features = true;
  std::vector<double> mean;  // m
  std::vector<double> stddev;  // m; 0 marks a constant feature (mapped to 0)
  ScoreRange scores{0.0, 1.0};

  Dataset apply(const Dataset& ds) const;
  void transform_row(std::span<const double> in, std::span<double> out) const;
  double normalize_score(double y) const noexcept;
  double denormalize_score(double t) const noexcept;

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

/// Statistics come from `train_idx` only. The score range is the dataset's
/// declared range, or the train-split min/max when none is declared.
Standardizer fit_standardizer(const Dataset& ds, std::span<const std::size_t> train_idx,
                              bool standardize_features = true);

enum class SyntheticKind { Product, Friedman, RandKan, Monotone };

std::string_view synthetic_kind_name(SyntheticKind kind) noexcept;
SyntheticKind parse_synthetic_kind(std::string_view name);

/// Desk-scale stand-ins for the subjective-score databases.
///   product:  prod x_i,                x ~ U[-1,1]^dim
///   friedman: 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5, x ~ U[0,1]^dim, dim >= 5
///   randkan:  output of a frozen random Chebyshev KAN [dim, 4, 1]
///   monotone: strictly increasing g(t) of a random unit projection t
/// Gaussian noise with sd noise_sd is added to the targets.
Dataset gen_synthetic(SyntheticKind kind, std::size_t n, std::size_t dim, double noise_sd,
                      std::uint64_t seed);

/// The friedman target without noise.
double friedman_target(std::span<const double> x);

}  // namespace kanfit
