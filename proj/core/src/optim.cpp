#include "kanfit/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "kanfit/errors.hpp"

namespace kanfit {

LossResult mse_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size())
    throw ShapeError("mse_loss: prediction and target lengths differ");
  if (pred.empty()) throw ShapeError("mse_loss: empty input");
  const double n = static_cast<double>(pred.size());
  LossResult out{0.0, std::vector<double>(pred.size())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    out.loss += d * d;
    out.grad[i] = 2.0 * d / n;
  }
  out.loss /= n;
  return out;
}

AdamState::AdamState(std::size_t n_params, AdamOptions options)
    : options_(options), m_(n_params, 0.0), v_(n_params, 0.0) {
  if (!(options_.beta1 >= 0.0 && options_.beta1 < 1.0 && options_.beta2 >= 0.0 &&
        options_.beta2 < 1.0 && options_.eps_hat > 0.0))
    throw ParameterError("Adam: require 0 <= beta1, beta2 < 1 and eps_hat > 0");
}

void AdamState::step(std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw ShapeError("Adam: expected " + std::to_string(m_.size()) + " parameters and gradients");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ParameterError("Adam: learning rate must be > 0");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i]))
      throw ParameterError("Adam: non-finite gradient at index " + std::to_string(i));

  ++step_count_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + options_.eps_hat);
  }
}

void LmOptions::validate() const {
  if (max_iters < 0) throw ParameterError("LM: max_iters must be >= 0");
  if (!(lambda_init > 0.0)) throw ParameterError("LM: lambda_init must be > 0");
  if (!(lambda_up > 1.0) || !(lambda_down > 1.0))
    throw ParameterError("LM: lambda_up and lambda_down must be > 1");
  if (!(ftol > 0.0)) throw ParameterError("LM: ftol must be > 0");
  if (!(gtol >= 0.0)) throw ParameterError("LM: gtol must be >= 0");
}

namespace {

double sum_squares(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

bool all_finite(const std::vector<double>& r) {
  return std::all_of(r.begin(), r.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

LmResult levenberg_marquardt(const ResidualFn& residual_fn, const JacobianFn& jacobian_fn,
                             std::span<const double> init, const LmOptions& options) {
  options.validate();
  const auto n_params = static_cast<Eigen::Index>(init.size());

  LmResult out;
  out.params.assign(init.begin(), init.end());
  std::vector<double> r = residual_fn(out.params);
  if (!all_finite(r)) throw ParameterError("LM: residuals at the initial point are not finite");
  out.sse = sum_squares(r);
  out.sse_log.push_back(out.sse);

  auto load_jacobian = [&](std::span<const double> p) {
    const Matrix j = jacobian_fn(p);
    if (j.rows() != r.size() || j.cols() != init.size())
      throw ShapeError("LM: Jacobian shape does not match residuals x parameters");
    Eigen::MatrixXd jm(static_cast<Eigen::Index>(j.rows()), n_params);
    for (std::size_t a = 0; a < j.rows(); ++a)
      for (std::size_t b = 0; b < j.cols(); ++b)
        jm(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = j(a, b);
    return jm;
  };

  Eigen::MatrixXd jac = load_jacobian(out.params);
  double lambda = options.lambda_init;
  std::vector<double> trial(out.params.size());

  while (out.iterations < options.max_iters && out.sse > 0.0) {
    const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(r.size()));
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * rv;
    const double gmax = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
    if (!std::isfinite(gmax)) {
      out.degenerate = true;
      break;
    }
    if (gmax <= options.gtol) break;

    // Marquardt scaling with a floor so a zero column cannot make the system singular.
    Eigen::VectorXd diag = jtj.diagonal();
    const double floor = 1e-15 * std::max(1.0, diag.maxCoeff());
    for (Eigen::Index i = 0; i < diag.size(); ++i) diag[i] = std::max(diag[i], floor);

    bool accepted = false;
    bool stop = false;
    while (out.iterations < options.max_iters) {
      ++out.iterations;
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * diag;
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      Eigen::VectorXd delta;
      bool solved = ldlt.info() == Eigen::Success && ldlt.isPositive();
      if (solved) {
        delta = ldlt.solve(-grad);
        solved = delta.allFinite();
      }
      if (solved) {
        for (std::size_t i = 0; i < trial.size(); ++i)
          trial[i] = out.params[i] + delta[static_cast<Eigen::Index>(i)];
        std::vector<double> r_trial = residual_fn(trial);
        const double sse_trial = all_finite(r_trial) ? sum_squares(r_trial) : out.sse;
        if (sse_trial < out.sse) {
          // A gain below ftol is rounding noise at a minimum: converge in place.
          if ((out.sse - sse_trial) < options.ftol * out.sse) {
            stop = true;
            break;
          }
          out.params = trial;
          r = std::move(r_trial);
          out.sse = sse_trial;
          out.sse_log.push_back(out.sse);
          ++out.accepted_steps;
          lambda = std::max(lambda / options.lambda_down, 1e-300);
          accepted = true;
          break;
        }
      }
      lambda *= options.lambda_up;
      if (lambda > options.lambda_max) {
        // Every damping level failed; a solver failure is a degenerate fit,
        // merely non-improving steps mean we are at a local minimum.
        out.degenerate = !solved;
        stop = true;
        break;
      }
    }
    if (stop || !accepted) break;
    jac = load_jacobian(out.params);
  }
  return out;
}

}  // namespace kanfit
