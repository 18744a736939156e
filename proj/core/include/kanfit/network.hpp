#pragma once

// KAN and dense layers composed into a scalar regressor, with a hand-derived
// reverse pass.
//
// All learnable parameters live in one flat vector owned by the Network. Each
// layer owns a contiguous block of it:
//
//   KanEdge:  coefficients [n_out][n_in][n_basis]
//             + Wavelet:    log_scale [n_out][n_in], shift [n_out][n_in]
//             + BSplineRBF: base_weight [n_out][n_in], spline_weight [n_out][n_in]
//   Dense:    weights [n_out][n_in], bias [n_out]
//
// Gradients use the same layout, so optimisers work on flat spans.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kanfit/basis.hpp"
#include "kanfit/matrix.hpp"

namespace kanfit {

enum class LayerKind { KanEdge, Dense };
enum class Activation { Identity, ReLU };

struct LayerSpec {
  LayerKind kind = LayerKind::KanEdge;
  int n_in = 1;
  int n_out = 1;
  BasisSpec basis;                           // KanEdge only
  Activation activation = Activation::Identity;  // Dense only

  static LayerSpec kan(int n_in, int n_out, const BasisSpec& basis) {
    return {LayerKind::KanEdge, n_in, n_out, basis, Activation::Identity};
  }
  static LayerSpec dense(int n_in, int n_out, Activation act) {
    return {LayerKind::Dense, n_in, n_out, {}, act};
  }

  std::size_t n_basis() const noexcept { return kind == LayerKind::KanEdge ? basis.size() : 0; }
  std::size_t n_edges() const noexcept { return static_cast<std::size_t>(n_in) * n_out; }
  std::size_t parameter_count() const noexcept;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Per-layer values saved by a forward pass.
struct LayerCache {
  std::vector<double> input;      // n_in
  std::vector<double> squashed;   // n_in, basis argument after optional tanh
  std::vector<double> squash_dx;  // n_in
  // Non-wavelet KAN: [n_in][n_basis]. Wavelet: [n_out][n_in] edge values, with
  // d/dx, d/da, d/db in the derivative arrays below.
  std::vector<double> values;
  std::vector<double> derivs;
  std::vector<double> d_da;
  std::vector<double> d_db;
  std::vector<double> pre_activation;  // Dense: n_out
  std::vector<double> output;          // n_out

  friend bool operator==(const LayerCache&, const LayerCache&) = default;
};

struct Tape {
  std::vector<LayerCache> layers;
  double prediction = 0.0;

  friend bool operator==(const Tape&, const Tape&) = default;
};

struct Gradients {
  std::vector<double> flat;  // same layout as Network::parameters()
};

class Network {
 public:
  Network() = default;

  /// Zero-initialised parameters. Throws ShapeError if the layer chain is broken
  /// or the last layer is not a single Identity output.
  explicit Network(std::vector<LayerSpec> specs);

  /// Seeded random initialisation: KAN coefficients normal with sd 1/(n_in * n_basis),
  /// dense weights He-scaled, biases 0, wavelet scale 1 (log 0) and shift 0,
  /// BSRBF w_b = w_s = 1.
  static Network init(std::vector<LayerSpec> specs, std::uint64_t seed);

  const std::vector<LayerSpec>& specs() const noexcept { return specs_; }
  std::size_t layer_count() const noexcept { return specs_.size(); }
  int n_inputs() const noexcept { return specs_.empty() ? 0 : specs_.front().n_in; }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  std::span<double> layer_parameters(std::size_t layer) noexcept;
  std::span<const double> layer_parameters(std::size_t layer) const noexcept;
  std::size_t layer_offset(std::size_t layer) const noexcept { return offsets_[layer]; }

  /// KAN coefficient block of a layer, [n_out][n_in][n_basis].
  std::span<double> coefficients(std::size_t layer);
  double& coefficient(std::size_t layer, int out, int in, std::size_t k);

  // Per-edge auxiliaries, [n_out][n_in].
  std::span<double> wavelet_log_scale(std::size_t layer);
  std::span<double> wavelet_shift(std::size_t layer);
  std::span<double> base_weight(std::size_t layer);
  std::span<double> spline_weight(std::size_t layer);

  std::span<double> dense_weights(std::size_t layer);
  std::span<double> dense_bias(std::size_t layer);

  friend bool operator==(const Network&, const Network&) = default;

 private:
  std::span<double> block(std::size_t layer, std::size_t offset, std::size_t size);

  std::vector<LayerSpec> specs_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

/// Throws ShapeError on a broken chain, a non-scalar output, an Activation on a
/// KAN layer or a ReLU on the last layer; ParameterError on a bad basis.
void validate_specs(std::span<const LayerSpec> specs);

/// Forward through one KAN layer. `params` is the layer's parameter block.
std::vector<double> kan_layer_forward(const LayerSpec& spec, std::span<const double> params,
                                      std::span<const double> x, LayerCache& cache);

struct ForwardResult {
  double prediction;
  Tape tape;
};

ForwardResult forward(const Network& net, std::span<const double> x);

/// Allocation-reusing variant for training loops.
double forward(const Network& net, std::span<const double> x, Tape& tape);

/// Reverse pass for d(upstream * prediction)/d(params).
Gradients backward(const Network& net, const Tape& tape, double upstream);

/// Accumulates (+=) the reverse pass into `grad`, which must have
/// net.parameter_count() entries.
void backward_accumulate(const Network& net, const Tape& tape, double upstream,
                         std::span<double> grad);

/// Row-wise forward; order preserving. Throws ShapeError on a width mismatch.
std::vector<double> predict_batch(const Network& net, const Matrix& x);

}  // namespace kanfit
