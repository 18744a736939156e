#include <cmath>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "kanfit/basis.hpp"
#include "kanfit/metrics.hpp"
#include "kanfit/network.hpp"
#include "kanfit/train.hpp"

using namespace kanfit;

namespace {

std::vector<double> uniform(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void BM_Basis(benchmark::State& state) {
  const auto family = static_cast<BasisFamily>(state.range(0));
  BasisSpec spec = BasisSpec::defaults(family);
  const auto xs = uniform(1024, 1, -0.99, 0.99);
  std::vector<double> values(spec.size()), derivs(spec.size());
  std::size_t i = 0;
  for (auto _ : state) {
    evaluate_basis(spec, xs[i++ & 1023], values, derivs);
    benchmark::DoNotOptimize(values.data());
    benchmark::DoNotOptimize(derivs.data());
  }
  state.SetLabel(std::string(family_name(family)));
}
BENCHMARK(BM_Basis)->DenseRange(0, 5);

void BM_ForwardBackward(benchmark::State& state) {
  const auto kind = static_cast<ModelKind>(state.range(0));
  const auto net = Network::init(build_layer_specs(TrainConfig::for_model(kind)), 1);
  const auto x = uniform(15, 2);
  std::vector<double> grad(net.parameter_count());
  Tape tape;
  for (auto _ : state) {
    const double y = forward(net, x, tape);
    backward_accumulate(net, tape, y, grad);
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetLabel(std::string(model_kind_name(kind)));
}
BENCHMARK(BM_ForwardBackward)->DenseRange(0, 6);

void BM_FitLogistic5(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto s = uniform(n, 3);
  const auto noise = uniform(n, 4, -0.05, 0.05);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-3.0 * s[i])) + noise[i];
  for (auto _ : state) benchmark::DoNotOptimize(fit_logistic5(s, y).sse);
}
BENCHMARK(BM_FitLogistic5)->Arg(50)->Arg(500)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
