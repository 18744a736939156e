#include "kanfit/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <ostream>
#include <thread>

#include "kanfit/errors.hpp"
#include "kanfit/text.hpp"

namespace kanfit {

namespace {

struct KindName {
  ModelKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {ModelKind::TaylorKAN, "TaylorKAN"}, {ModelKind::ChebyKAN, "ChebyKAN"},
    {ModelKind::HermiteKAN, "HermiteKAN"}, {ModelKind::JacobiKAN, "JacobiKAN"},
    {ModelKind::BSRBFKAN, "BSRBFKAN"}, {ModelKind::WavKAN, "WavKAN"},
    {ModelKind::MLP, "MLP"},
};

}  // namespace

std::string_view model_kind_name(ModelKind kind) noexcept {
  for (const auto& k : kKindNames)
    if (k.kind == kind) return k.name;
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (const auto& k : kKindNames)
    if (k.name == name) return k.kind;
  std::string valid;
  for (const auto& k : kKindNames) valid += (valid.empty() ? "" : ", ") + std::string(k.name);
  throw ParameterError("unknown model kind '" + std::string(name) + "' (valid: " + valid + ")");
}

std::vector<ModelKind> all_model_kinds() {
  std::vector<ModelKind> out;
  for (const auto& k : kKindNames) out.push_back(k.kind);
  return out;
}

BasisFamily family_for(ModelKind kind) {
  switch (kind) {
    case ModelKind::TaylorKAN: return BasisFamily::Taylor;
    case ModelKind::ChebyKAN: return BasisFamily::Chebyshev;
    case ModelKind::HermiteKAN: return BasisFamily::Hermite;
    case ModelKind::JacobiKAN: return BasisFamily::Jacobi;
    case ModelKind::BSRBFKAN: return BasisFamily::BSplineRBF;
    case ModelKind::WavKAN: return BasisFamily::Wavelet;
    case ModelKind::MLP: break;
  }
  throw ParameterError("MLP has no basis family");
}

TrainConfig TrainConfig::for_model(ModelKind kind) {
  TrainConfig cfg;
  cfg.model_kind = kind;
  if (kind != ModelKind::MLP) cfg.basis = BasisSpec::defaults(family_for(kind));
  return cfg;
}

void TrainConfig::validate(std::size_t n_features) const {
  if (layer_widths.size() < 2) throw ShapeError("layer_widths needs at least input and output");
  for (int w : layer_widths)
    if (w < 1) throw ShapeError("layer_widths entries must be >= 1");
  if (layer_widths.back() != 1) throw ShapeError("layer_widths must end with 1 (scalar score)");
  if (n_features != 0 && static_cast<std::size_t>(layer_widths.front()) != n_features)
    throw ShapeError("layer_widths starts with " + std::to_string(layer_widths.front()) +
                     " but the dataset has " + std::to_string(n_features) + " features");
  if (max_epochs < 1) throw ParameterError("max_epochs must be >= 1");
  if (patience < 1) throw ParameterError("patience must be >= 1");
  if (lr_grid.empty()) throw ParameterError("lr_grid must not be empty");
  for (double lr : lr_grid)
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ParameterError("lr_grid entries must be > 0");
  if (model_kind != ModelKind::MLP) {
    if (basis.family != family_for(model_kind))
      throw ParameterError(std::string(model_kind_name(model_kind)) + " needs the " +
                           std::string(family_name(family_for(model_kind))) + " basis");
    basis.validate();
  }
}

std::vector<LayerSpec> build_layer_specs(const TrainConfig& cfg) {
  std::vector<LayerSpec> specs;
  for (std::size_t l = 0; l + 1 < cfg.layer_widths.size(); ++l) {
    const int n_in = cfg.layer_widths[l];
    const int n_out = cfg.layer_widths[l + 1];
    if (cfg.model_kind == ModelKind::MLP) {
      const bool last = l + 2 == cfg.layer_widths.size();
      specs.push_back(LayerSpec::dense(n_in, n_out, last ? Activation::Identity : Activation::ReLU));
    } else {
      specs.push_back(LayerSpec::kan(n_in, n_out, cfg.basis));
    }
  }
  return specs;
}

double TrainHistory::epochs_per_second() const noexcept {
  return total_seconds > 0.0 ? epochs_run / total_seconds : 0.0;
}

void TrainHistory::write_csv(std::ostream& out) const {
  out << "epoch,train_loss,val_loss,seconds\n";
  for (std::size_t e = 0; e < val_loss.size(); ++e)
    out << (e + 1) << ',' << format_double(train_loss[e]) << ',' << format_double(val_loss[e])
        << ',' << format_double(seconds[e]) << '\n';
}

EpochLoopOutcome run_epoch_loop(int max_epochs, int patience,
                                const std::function<void(int)>& train_step,
                                const std::function<double(int)>& validate,
                                const std::function<void(int)>& on_improve) {
  if (max_epochs < 1 || patience < 1) throw ParameterError("max_epochs and patience must be >= 1");
  EpochLoopOutcome out;
  out.best_val_loss = std::numeric_limits<double>::infinity();
  int since_improvement = 0;
  for (int epoch = 1; epoch <= max_epochs; ++epoch) {
    train_step(epoch);
    const double val = validate(epoch);
    out.epochs_run = epoch;
    if (val < out.best_val_loss) {
      out.best_val_loss = val;
      out.best_epoch = epoch;
      since_improvement = 0;
      on_improve(epoch);
    } else if (++since_improvement >= patience) {
      break;
    }
  }
  return out;
}

double mse_on(const Network& net, const Dataset& ds, std::span<const std::size_t> rows) {
  if (rows.empty()) throw ShapeError("mse_on: no rows");
  Tape tape;
  double sum = 0.0;
  for (auto r : rows) {
    const double d = forward(net, ds.features.row(r), tape) - ds.scores[r];
    sum += d * d;
  }
  return sum / static_cast<double>(rows.size());
}

TrainResult train_model(const TrainConfig& cfg, const Dataset& prepared, const SplitIndices& splits,
                        double lr) {
  cfg.validate(prepared.cols());
  if (splits.train.empty() || splits.val.empty())
    throw ParameterError("train_model: train and validation splits must be non-empty");

  TrainResult result{Network::init(build_layer_specs(cfg), cfg.seed), {}};
  Network& net = result.network;
  TrainHistory& hist = result.history;
  AdamState adam(net.parameter_count(), cfg.adam);
  std::vector<double> grad(net.parameter_count());
  std::vector<double> best_params(net.parameters().begin(), net.parameters().end());
  Tape tape;
  const double inv_n = 1.0 / static_cast<double>(splits.train.size());

  using clock = std::chrono::steady_clock;
  auto epoch_start = clock::now();

  const auto train_step = [&](int epoch) {
    epoch_start = clock::now();
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    try {
      for (auto r : splits.train) {
        const double d = forward(net, prepared.features.row(r), tape) - prepared.scores[r];
        loss += d * d;
        backward_accumulate(net, tape, 2.0 * d * inv_n, grad);
      }
    } catch (const DomainError& e) {
      throw DivergenceError(epoch, e.what());
    }
    loss *= inv_n;
    if (!std::isfinite(loss)) throw DivergenceError(epoch, "non-finite training loss");
    try {
      adam.step(net.parameters(), grad, lr);
    } catch (const ParameterError& e) {
      throw DivergenceError(epoch, e.what());
    }
    for (double p : net.parameters())
      if (!std::isfinite(p)) throw DivergenceError(epoch, "non-finite parameter after update");
    hist.train_loss.push_back(loss);
  };

  const auto validate = [&](int epoch) {
    double val = 0.0;
    try {
      val = mse_on(net, prepared, splits.val);
    } catch (const DomainError& e) {
      throw DivergenceError(epoch, e.what());
    }
    if (!std::isfinite(val)) throw DivergenceError(epoch, "non-finite validation loss");
    hist.val_loss.push_back(val);
    const double secs = std::chrono::duration<double>(clock::now() - epoch_start).count();
    hist.seconds.push_back(secs);
    hist.total_seconds += secs;
    return val;
  };

  const auto on_improve = [&](int) {
    std::copy(net.parameters().begin(), net.parameters().end(), best_params.begin());
  };

  const auto outcome = run_epoch_loop(cfg.max_epochs, cfg.patience, train_step, validate, on_improve);
  std::copy(best_params.begin(), best_params.end(), net.parameters().begin());
  hist.epochs_run = outcome.epochs_run;
  hist.best_epoch = outcome.best_epoch;
  hist.best_val_loss = outcome.best_val_loss;
  return result;
}

EvalReport evaluate(const Network& net, const Dataset& prepared, std::span<const std::size_t> rows,
                    const Standardizer& standardizer) {
  std::vector<double> pred;
  std::vector<double> truth;
  pred.reserve(rows.size());
  truth.reserve(rows.size());
  Tape tape;
  for (auto r : rows) {
    pred.push_back(standardizer.denormalize_score(forward(net, prepared.features.row(r), tape)));
    truth.push_back(standardizer.denormalize_score(prepared.scores[r]));
  }
  return evaluate_scores(pred, truth);
}

unsigned sweep_threads(const TrainConfig& cfg, std::size_t jobs) {
  unsigned n = cfg.threads;
  if (n == 0) {
    if (const char* env = std::getenv("KANFIT_THREADS")) {
      try {
        n = static_cast<unsigned>(std::max<long long>(1, parse_int(env, "KANFIT_THREADS")));
      } catch (const ParseError&) {
        n = 0;
      }
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

SweepResult lr_sweep(const TrainConfig& cfg, const Dataset& raw, const SplitIndices& splits) {
  cfg.validate(raw.cols());
  SweepResult out;
  out.standardizer = fit_standardizer(raw, splits.train, cfg.standardize);
  const Dataset prepared = out.standardizer.apply(raw);

  const std::size_t jobs = cfg.lr_grid.size();
  out.runs.resize(jobs);
  std::vector<Network> nets(jobs);
  std::vector<std::exception_ptr> failures(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs; i = next++) {
      SweepRun& run = out.runs[i];
      run.lr = cfg.lr_grid[i];
      try {
        auto trained = train_model(cfg, prepared, splits, run.lr);
        run.val_report = evaluate(trained.network, prepared, splits.val, out.standardizer);
        run.selection_score = run.val_report.plcc_mapped + run.val_report.srcc;
        run.history = std::move(trained.history);
        nets[i] = std::move(trained.network);
        run.ok = true;
      } catch (const DivergenceError& e) {
        run.diagnostic = e.what();
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const unsigned n_threads = sweep_threads(cfg, jobs);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  bool found = false;
  for (std::size_t i = 0; i < jobs; ++i) {
    if (!out.runs[i].ok) continue;
    if (!found || out.runs[i].selection_score > out.runs[out.best_index].selection_score) {
      out.best_index = i;
      found = true;
    }
  }
  if (!found) {
    std::string msg = "every learning rate diverged:";
    for (const auto& r : out.runs) msg += "\n  lr " + format_double(r.lr) + ": " + r.diagnostic;
    throw Error(msg);
  }
  out.best_lr = out.runs[out.best_index].lr;
  out.network = std::move(nets[out.best_index]);
  out.test_report = evaluate(out.network, prepared, splits.test, out.standardizer);
  return out;
}

}  // namespace kanfit
