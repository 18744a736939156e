#pragma once

// Correlation metrics used in image quality assessment: SRCC, raw PLCC and PLCC
// after a five-parameter logistic remapping of the predicted scores.

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace kanfit {

/// Ascending ranks starting at 1; ties share the mean of their positions.
/// Throws MetricError on non-finite entries or empty input.
std::vector<double> ranks_with_ties(std::span<const double> v);

/// Pearson correlation. Throws MetricError if n < 2, lengths differ or either
/// side has zero variance.
double plcc(std::span<const double> a, std::span<const double> b);

/// Spearman correlation: Pearson correlation of tie-averaged ranks.
double srcc(std::span<const double> a, std::span<const double> b);

/// f(s) = q1 (1/2 - 1/(1 + exp(q2 (s - q3)))) + q4 s + q5
struct LogisticParams {
  std::array<double, 5> q{0.0, 1.0, 0.0, 1.0, 0.0};

  double operator()(double s) const noexcept;
  /// df/dq1 .. df/dq5 at s.
  std::array<double, 5> gradient(double s) const noexcept;

  friend bool operator==(const LogisticParams&, const LogisticParams&) = default;
};

std::vector<double> apply_logistic(const LogisticParams& p, std::span<const double> s);

struct LogisticFit {
  LogisticParams params;
  double sse = 0.0;         // sum (y - f(s))^2 at params
  double affine_sse = 0.0;  // SSE of the ordinary least-squares line y ~ s
  bool degenerate = false;
};

/// Multi-start Levenberg-Marquardt fit of the logistic mapping. Starts include
/// the least-squares line embedded with q1 = 0, so sse <= affine_sse always.
/// Throws MetricError if n < 5, lengths differ or s is constant.
LogisticFit fit_logistic5(std::span<const double> s, std::span<const double> y);

struct MappedPlcc {
  double plcc = 0.0;
  LogisticParams params;
  bool degenerate = false;
};

/// PLCC between y and the fitted f(s). The mapping is oriented so the result is
/// non-negative. On a degenerate fit, falls back to |plcc(s, y)| with the flag set.
MappedPlcc mapped_plcc(std::span<const double> s, std::span<const double> y);

struct EvalReport {
  double plcc_mapped = 0.0;
  double plcc_raw = 0.0;
  double srcc = 0.0;
  LogisticParams logistic;
  std::size_t n = 0;
  bool fit_degenerate = false;

  /// `key = value` lines, values at round-trip precision.
  std::string to_kv() const;
  /// Reads the keys written by to_kv; other keys are ignored. Throws ParseError
  /// if a required key is missing or malformed.
  static EvalReport from_kv(const std::map<std::string, std::string>& kv);

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Mapped PLCC, raw PLCC and SRCC between predictions and subjective scores.
/// Undefined correlations (constant predictions) give a report with all
/// correlations 0 and fit_degenerate set instead of throwing. n < 5 throws.
EvalReport evaluate_scores(std::span<const double> predicted, std::span<const double> subjective);

}  // namespace kanfit
