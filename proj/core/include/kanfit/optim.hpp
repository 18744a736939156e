#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "kanfit/matrix.hpp"

namespace kanfit {

struct LossResult {
  double loss;
  std::vector<double> grad;  // d loss / d pred
};

/// Mean squared error (1/n) sum (pred - target)^2 and its gradient (2/n)(pred - target).
LossResult mse_loss(std::span<const double> pred, std::span<const double> target);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
};

/// Bias-corrected Adam moments for a flat parameter vector.
class AdamState {
 public:
  explicit AdamState(std::size_t n_params, AdamOptions options = {});

  /// One update in place. Throws ShapeError on a size mismatch and
  /// ParameterError on a non-finite gradient or non-positive learning rate;
  /// parameters and state are left untouched when it throws.
  void step(std::span<double> params, std::span<const double> grads, double lr);

  long step_count() const noexcept { return step_count_; }
  const AdamOptions& options() const noexcept { return options_; }
  std::span<const double> first_moment() const noexcept { return m_; }
  std::span<const double> second_moment() const noexcept { return v_; }

 private:
  AdamOptions options_;
  long step_count_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

inline void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
                      double lr) {
  state.step(params, grads, lr);
}

struct LmOptions {
  int max_iters = 200;
  double lambda_init = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 10.0;
  double ftol = 1e-12;        // stop when a step would improve SSE by < ftol * SSE (not taken)
  double gtol = 0.0;          // stop when max |J^T r| <= gtol
  double lambda_max = 1e16;   // rejected steps beyond this end the search

  void validate() const;
};

struct LmResult {
  std::vector<double> params;
  double sse = 0.0;
  int iterations = 0;        // linear solves attempted
  int accepted_steps = 0;
  bool degenerate = false;   // damped normal equations could not be solved
  std::vector<double> sse_log;  // SSE at the start and after every accepted step
};

using ResidualFn = std::function<std::vector<double>(std::span<const double>)>;
using JacobianFn = std::function<Matrix(std::span<const double>)>;

/// Damped Gauss-Newton with Marquardt diagonal scaling. Only steps that strictly
/// lower the SSE are accepted, so the result never has a larger SSE than `init`.
LmResult levenberg_marquardt(const ResidualFn& residual_fn, const JacobianFn& jacobian_fn,
                             std::span<const double> init, const LmOptions& options = {});

}  // namespace kanfit
