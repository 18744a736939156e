#include "kanfit/network.hpp"

#include <cmath>
#include <random>
#include <string>

#include "kanfit/errors.hpp"

namespace kanfit {

namespace {

bool is_wavelet(const LayerSpec& s) {
  return s.kind == LayerKind::KanEdge && s.basis.family == BasisFamily::Wavelet;
}
bool is_bsrbf(const LayerSpec& s) {
  return s.kind == LayerKind::KanEdge && s.basis.family == BasisFamily::BSplineRBF;
}

std::size_t coefficient_count(const LayerSpec& s) { return s.n_edges() * s.n_basis(); }

std::string layer_label(std::size_t i) { return "layer " + std::to_string(i); }

// Shared reverse step through one layer: accumulates into `grad` (the layer's
// block) and writes d(loss)/d(input) into g_in.
void layer_backward(const LayerSpec& spec, std::span<const double> params, const LayerCache& cache,
                    std::span<const double> g_out, std::span<double> grad,
                    std::vector<double>& g_in) {
  const std::size_t n_in = static_cast<std::size_t>(spec.n_in);
  const std::size_t n_out = static_cast<std::size_t>(spec.n_out);
  g_in.assign(n_in, 0.0);

  if (spec.kind == LayerKind::Dense) {
    const auto weights = params.subspan(0, n_in * n_out);
    for (std::size_t j = 0; j < n_out; ++j) {
      double g = g_out[j];
      if (spec.activation == Activation::ReLU && !(cache.pre_activation[j] > 0.0)) g = 0.0;
      if (g == 0.0) continue;
      const std::size_t row = j * n_in;
      for (std::size_t i = 0; i < n_in; ++i) {
        grad[row + i] += g * cache.input[i];
        g_in[i] += g * weights[row + i];
      }
      grad[n_in * n_out + j] += g;
    }
    return;
  }

  const std::size_t nb = spec.n_basis();
  const std::size_t edges = spec.n_edges();
  const auto coeff = params.subspan(0, edges * nb);

  if (is_wavelet(spec)) {
    const auto log_a = params.subspan(edges, edges);
    for (std::size_t j = 0; j < n_out; ++j) {
      const double g = g_out[j];
      for (std::size_t i = 0; i < n_in; ++i) {
        const std::size_t e = j * n_in + i;
        const double c = coeff[e];
        grad[e] += g * cache.values[e];
        grad[edges + e] += g * c * cache.d_da[e] * std::exp(log_a[e]);
        grad[2 * edges + e] += g * c * cache.d_db[e];
        g_in[i] += g * c * cache.derivs[e];
      }
    }
  } else if (is_bsrbf(spec)) {
    const auto w_base = params.subspan(edges * nb, edges);
    const auto w_spline = params.subspan(edges * nb + edges, edges);
    const std::size_t last = nb - 1;
    for (std::size_t j = 0; j < n_out; ++j) {
      const double g = g_out[j];
      for (std::size_t i = 0; i < n_in; ++i) {
        const std::size_t e = j * n_in + i;
        const double* c = coeff.data() + e * nb;
        const double* v = cache.values.data() + i * nb;
        const double* d = cache.derivs.data() + i * nb;
        double sum = 0.0, dsum = 0.0;
        for (std::size_t k = 0; k < last; ++k) {
          sum += c[k] * v[k];
          dsum += c[k] * d[k];
          grad[e * nb + k] += g * w_spline[e] * v[k];
        }
        grad[e * nb + last] += g * w_base[e] * v[last];
        grad[edges * nb + e] += g * c[last] * v[last];
        grad[edges * nb + edges + e] += g * sum;
        g_in[i] += g * (w_spline[e] * dsum + w_base[e] * c[last] * d[last]);
      }
    }
  } else {
    for (std::size_t j = 0; j < n_out; ++j) {
      const double g = g_out[j];
      for (std::size_t i = 0; i < n_in; ++i) {
        const std::size_t e = j * n_in + i;
        const double* c = coeff.data() + e * nb;
        const double* v = cache.values.data() + i * nb;
        const double* d = cache.derivs.data() + i * nb;
        double dsum = 0.0;
        for (std::size_t k = 0; k < nb; ++k) {
          grad[e * nb + k] += g * v[k];
          dsum += c[k] * d[k];
        }
        g_in[i] += g * dsum;
      }
    }
  }
  for (std::size_t i = 0; i < n_in; ++i) g_in[i] *= cache.squash_dx[i];
}

std::vector<double> dense_forward(const LayerSpec& spec, std::span<const double> params,
                                  std::span<const double> x, LayerCache& cache) {
  const std::size_t n_in = static_cast<std::size_t>(spec.n_in);
  const std::size_t n_out = static_cast<std::size_t>(spec.n_out);
  cache.input.assign(x.begin(), x.end());
  cache.pre_activation.assign(n_out, 0.0);
  cache.output.assign(n_out, 0.0);
  for (std::size_t j = 0; j < n_out; ++j) {
    double acc = params[n_in * n_out + j];
    for (std::size_t i = 0; i < n_in; ++i) acc += params[j * n_in + i] * x[i];
    cache.pre_activation[j] = acc;
    cache.output[j] = spec.activation == Activation::ReLU ? (acc > 0.0 ? acc : 0.0) : acc;
  }
  return cache.output;
}

std::vector<double> layer_forward(const LayerSpec& spec, std::span<const double> params,
                                  std::span<const double> x, LayerCache& cache) {
  if (spec.kind == LayerKind::Dense) return dense_forward(spec, params, x, cache);
  return kan_layer_forward(spec, params, x, cache);
}

}  // namespace

std::size_t LayerSpec::parameter_count() const noexcept {
  if (kind == LayerKind::Dense) return n_edges() + static_cast<std::size_t>(n_out);
  std::size_t count = coefficient_count(*this);
  if (basis.family == BasisFamily::Wavelet || basis.family == BasisFamily::BSplineRBF)
    count += 2 * n_edges();
  return count;
}

void validate_specs(std::span<const LayerSpec> specs) {
  if (specs.empty()) throw ShapeError("network needs at least one layer");
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const auto& s = specs[l];
    if (s.n_in < 1 || s.n_out < 1)
      throw ShapeError(layer_label(l) + ": n_in and n_out must be >= 1");
    if (s.kind == LayerKind::KanEdge) {
      if (s.activation != Activation::Identity)
        throw ShapeError(layer_label(l) + ": KAN layers take no node activation");
      s.basis.validate();
    }
    if (l + 1 < specs.size() && s.n_out != specs[l + 1].n_in)
      throw ShapeError(layer_label(l) + " has n_out = " + std::to_string(s.n_out) + " but " +
                       layer_label(l + 1) + " has n_in = " + std::to_string(specs[l + 1].n_in));
  }
  const auto& last = specs.back();
  if (last.n_out != 1) throw ShapeError("last layer must have n_out = 1");
  if (last.kind == LayerKind::Dense && last.activation != Activation::Identity)
    throw ShapeError("last layer must use the identity activation");
}

Network::Network(std::vector<LayerSpec> specs) : specs_(std::move(specs)) {
  validate_specs(specs_);
  std::size_t total = 0;
  for (const auto& s : specs_) {
    offsets_.push_back(total);
    total += s.parameter_count();
  }
  params_.assign(total, 0.0);
  for (std::size_t l = 0; l < specs_.size(); ++l) {
    if (is_bsrbf(specs_[l])) {
      for (auto& w : base_weight(l)) w = 1.0;
      for (auto& w : spline_weight(l)) w = 1.0;
    }
  }
}

Network Network::init(std::vector<LayerSpec> specs, std::uint64_t seed) {
  Network net(std::move(specs));
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto& s = net.specs_[l];
    if (s.kind == LayerKind::KanEdge) {
      const double scale = 1.0 / (static_cast<double>(s.n_in) * s.n_basis());
      std::normal_distribution<double> dist(0.0, scale);
      for (auto& c : net.coefficients(l)) c = dist(rng);
    } else {
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / s.n_in));
      for (auto& w : net.dense_weights(l)) w = dist(rng);
    }
  }
  return net;
}

std::span<double> Network::layer_parameters(std::size_t layer) noexcept {
  return std::span<double>(params_).subspan(offsets_[layer], specs_[layer].parameter_count());
}

std::span<const double> Network::layer_parameters(std::size_t layer) const noexcept {
  return std::span<const double>(params_).subspan(offsets_[layer],
                                                  specs_[layer].parameter_count());
}

std::span<double> Network::block(std::size_t layer, std::size_t offset, std::size_t size) {
  if (layer >= specs_.size()) throw ShapeError("layer index out of range");
  return layer_parameters(layer).subspan(offset, size);
}

std::span<double> Network::coefficients(std::size_t layer) {
  if (layer >= specs_.size() || specs_[layer].kind != LayerKind::KanEdge)
    throw ShapeError(layer_label(layer) + " is not a KAN layer");
  return block(layer, 0, coefficient_count(specs_[layer]));
}

double& Network::coefficient(std::size_t layer, int out, int in, std::size_t k) {
  const auto& s = specs_.at(layer);
  const std::size_t e = static_cast<std::size_t>(out) * s.n_in + static_cast<std::size_t>(in);
  return coefficients(layer)[e * s.n_basis() + k];
}

std::span<double> Network::wavelet_log_scale(std::size_t layer) {
  if (layer >= specs_.size() || !is_wavelet(specs_[layer]))
    throw ShapeError(layer_label(layer) + " is not a wavelet KAN layer");
  const auto& s = specs_[layer];
  return block(layer, coefficient_count(s), s.n_edges());
}

std::span<double> Network::wavelet_shift(std::size_t layer) {
  if (layer >= specs_.size() || !is_wavelet(specs_[layer]))
    throw ShapeError(layer_label(layer) + " is not a wavelet KAN layer");
  const auto& s = specs_[layer];
  return block(layer, coefficient_count(s) + s.n_edges(), s.n_edges());
}

std::span<double> Network::base_weight(std::size_t layer) {
  if (layer >= specs_.size() || !is_bsrbf(specs_[layer]))
    throw ShapeError(layer_label(layer) + " is not a BSRBF KAN layer");
  const auto& s = specs_[layer];
  return block(layer, coefficient_count(s), s.n_edges());
}

std::span<double> Network::spline_weight(std::size_t layer) {
  if (layer >= specs_.size() || !is_bsrbf(specs_[layer]))
    throw ShapeError(layer_label(layer) + " is not a BSRBF KAN layer");
  const auto& s = specs_[layer];
  return block(layer, coefficient_count(s) + s.n_edges(), s.n_edges());
}

std::span<double> Network::dense_weights(std::size_t layer) {
  if (layer >= specs_.size() || specs_[layer].kind != LayerKind::Dense)
    throw ShapeError(layer_label(layer) + " is not a dense layer");
  return block(layer, 0, specs_[layer].n_edges());
}

std::span<double> Network::dense_bias(std::size_t layer) {
  if (layer >= specs_.size() || specs_[layer].kind != LayerKind::Dense)
    throw ShapeError(layer_label(layer) + " is not a dense layer");
  const auto& s = specs_[layer];
  return block(layer, s.n_edges(), static_cast<std::size_t>(s.n_out));
}

std::vector<double> kan_layer_forward(const LayerSpec& spec, std::span<const double> params,
                                      std::span<const double> x, LayerCache& cache) {
  if (spec.kind != LayerKind::KanEdge) throw ShapeError("kan_layer_forward: not a KAN layer");
  const std::size_t n_in = static_cast<std::size_t>(spec.n_in);
  const std::size_t n_out = static_cast<std::size_t>(spec.n_out);
  if (x.size() != n_in)
    throw ShapeError("kan_layer_forward: expected " + std::to_string(n_in) + " inputs, got " +
                     std::to_string(x.size()));
  if (params.size() != spec.parameter_count())
    throw ShapeError("kan_layer_forward: parameter block size mismatch");

  cache.input.assign(x.begin(), x.end());
  cache.squashed.resize(n_in);
  cache.squash_dx.resize(n_in);
  for (std::size_t i = 0; i < n_in; ++i) {
    if (!std::isfinite(x[i]))
      throw DomainError("kan_layer_forward: non-finite input at index " + std::to_string(i));
    if (spec.basis.squash) {
      const auto sq = squash(x[i]);
      cache.squashed[i] = sq.y;
      cache.squash_dx[i] = sq.dy_dx;
    } else {
      cache.squashed[i] = x[i];
      cache.squash_dx[i] = 1.0;
    }
  }

  const std::size_t nb = spec.n_basis();
  const std::size_t edges = spec.n_edges();
  const auto coeff = params.subspan(0, edges * nb);
  cache.output.assign(n_out, 0.0);

  if (is_wavelet(spec)) {
    const auto log_a = params.subspan(edges, edges);
    const auto shift = params.subspan(2 * edges, edges);
    cache.values.resize(edges);
    cache.derivs.resize(edges);
    cache.d_da.resize(edges);
    cache.d_db.resize(edges);
    for (std::size_t j = 0; j < n_out; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n_in; ++i) {
        const std::size_t e = j * n_in + i;
        const auto w = wavelet_eval(std::exp(log_a[e]), shift[e], cache.squashed[i]);
        cache.values[e] = w.value;
        cache.derivs[e] = w.d_dx;
        cache.d_da[e] = w.d_da;
        cache.d_db[e] = w.d_db;
        acc += coeff[e] * w.value;
      }
      cache.output[j] = acc;
    }
    return cache.output;
  }

  cache.values.resize(n_in * nb);
  cache.derivs.resize(n_in * nb);
  for (std::size_t i = 0; i < n_in; ++i) {
    evaluate_basis(spec.basis, cache.squashed[i],
                   std::span<double>(cache.values).subspan(i * nb, nb),
                   std::span<double>(cache.derivs).subspan(i * nb, nb));
  }

  if (is_bsrbf(spec)) {
    const auto w_base = params.subspan(edges * nb, edges);
    const auto w_spline = params.subspan(edges * nb + edges, edges);
    const std::size_t last = nb - 1;
    for (std::size_t j = 0; j < n_out; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n_in; ++i) {
        const std::size_t e = j * n_in + i;
        const double* c = coeff.data() + e * nb;
        const double* v = cache.values.data() + i * nb;
        double sum = 0.0;
        for (std::size_t k = 0; k < last; ++k) sum += c[k] * v[k];
        acc += w_base[e] * c[last] * v[last] + w_spline[e] * sum;
      }
      cache.output[j] = acc;
    }
    return cache.output;
  }

  for (std::size_t j = 0; j < n_out; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n_in; ++i) {
      const double* c = coeff.data() + (j * n_in + i) * nb;
      const double* v = cache.values.data() + i * nb;
      for (std::size_t k = 0; k < nb; ++k) acc += c[k] * v[k];
    }
    cache.output[j] = acc;
  }
  return cache.output;
}

double forward(const Network& net, std::span<const double> x, Tape& tape) {
  if (static_cast<int>(x.size()) != net.n_inputs())
    throw ShapeError("forward: expected " + std::to_string(net.n_inputs()) + " inputs, got " +
                     std::to_string(x.size()));
  const auto& specs = net.specs();
  tape.layers.resize(specs.size());
  std::vector<double> current(x.begin(), x.end());
  for (std::size_t l = 0; l < specs.size(); ++l)
    current = layer_forward(specs[l], net.layer_parameters(l), current, tape.layers[l]);
  tape.prediction = current[0];
  if (!std::isfinite(tape.prediction)) throw DomainError("forward: non-finite prediction");
  return tape.prediction;
}

ForwardResult forward(const Network& net, std::span<const double> x) {
  ForwardResult out{0.0, {}};
  out.prediction = forward(net, x, out.tape);
  return out;
}

void backward_accumulate(const Network& net, const Tape& tape, double upstream,
                         std::span<double> grad) {
  const auto& specs = net.specs();
  if (grad.size() != net.parameter_count())
    throw ShapeError("backward: gradient buffer has the wrong size");
  if (tape.layers.size() != specs.size()) throw ShapeError("backward: tape/network layer count mismatch");
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const auto& c = tape.layers[l];
    if (c.input.size() != static_cast<std::size_t>(specs[l].n_in) ||
        c.output.size() != static_cast<std::size_t>(specs[l].n_out))
      throw ShapeError("backward: tape does not match " + layer_label(l));
  }

  std::vector<double> g_out{upstream};
  std::vector<double> g_in;
  for (std::size_t l = specs.size(); l-- > 0;) {
    const auto block = grad.subspan(net.layer_offset(l), specs[l].parameter_count());
    layer_backward(specs[l], net.layer_parameters(l), tape.layers[l], g_out, block, g_in);
    g_out.swap(g_in);
  }
}

Gradients backward(const Network& net, const Tape& tape, double upstream) {
  Gradients g{std::vector<double>(net.parameter_count(), 0.0)};
  backward_accumulate(net, tape, upstream, g.flat);
  return g;
}

std::vector<double> predict_batch(const Network& net, const Matrix& x) {
  std::vector<double> out;
  out.reserve(x.rows());
  if (x.rows() == 0) return out;
  if (static_cast<int>(x.cols()) != net.n_inputs())
    throw ShapeError("predict_batch: matrix has " + std::to_string(x.cols()) +
                     " columns, network expects " + std::to_string(net.n_inputs()));
  Tape tape;
  for (std::size_t r = 0; r < x.rows(); ++r) out.push_back(forward(net, x.row(r), tape));
  return out;
}

}  // namespace kanfit
