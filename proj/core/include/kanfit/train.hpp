#pragma once

// Training protocol: full-batch Adam on the train split, validation-loss early
// stopping with best-weight restoration, and a learning-rate sweep selected by
// mapped PLCC + SRCC on the validation split.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kanfit/data.hpp"
#include "kanfit/metrics.hpp"
#include "kanfit/network.hpp"
#include "kanfit/optim.hpp"

namespace kanfit {

enum class ModelKind { TaylorKAN, ChebyKAN, HermiteKAN, JacobiKAN, BSRBFKAN, WavKAN, MLP };

std::string_view model_kind_name(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view name);
std::vector<ModelKind> all_model_kinds();

/// Basis family behind a KAN kind. Throws ParameterError for MLP.
BasisFamily family_for(ModelKind kind);

struct TrainConfig {
  std::vector<int> layer_widths{15, 26, 18, 12, 1};
  ModelKind model_kind = ModelKind::TaylorKAN;
  BasisSpec basis = BasisSpec::defaults(BasisFamily::Taylor);
  std::vector<double> lr_grid{1e-2, 5e-3, 1e-3, 5e-4, 1e-4};
  int max_epochs = 500;
  int patience = 20;
  std::uint64_t seed = 0;
  SplitRatios split;
  bool standardize = true;
  unsigned threads = 0;  // sweep workers; 0 = KANFIT_THREADS or hardware concurrency
  AdamOptions adam;

  /// Defaults with the basis family matching `kind`.
  static TrainConfig for_model(ModelKind kind);

  /// Throws ParameterError / ShapeError. Pass n_features = 0 to skip the
  /// input-width check.
  void validate(std::size_t n_features = 0) const;
};

std::vector<LayerSpec> build_layer_specs(const TrainConfig& cfg);

struct TrainHistory {
  std::vector<double> train_loss;  // full-batch MSE before each epoch's update
  std::vector<double> val_loss;    // after the update
  std::vector<double> seconds;     // wall time per epoch
  int epochs_run = 0;
  int best_epoch = 0;              // 1-based
  double best_val_loss = 0.0;
  double total_seconds = 0.0;

  /// Epochs per wall-clock second of the training loop.
  double epochs_per_second() const noexcept;
  /// CSV with columns epoch,train_loss,val_loss,seconds.
  void write_csv(std::ostream& out) const;
};

struct EpochLoopOutcome {
  int epochs_run = 0;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

/// The early-stopping loop shared by every model kind. For epoch = 1..max_epochs
/// runs `train_step(epoch)` then `validate(epoch)`; a strictly lower validation
/// loss calls `on_improve(epoch)`. Stops after `patience` consecutive epochs
/// without improvement.
EpochLoopOutcome run_epoch_loop(int max_epochs, int patience,
                                const std::function<void(int)>& train_step,
                                const std::function<double(int)>& validate,
                                const std::function<void(int)>& on_improve);

struct TrainResult {
  Network network;  // parameters from the best epoch
  TrainHistory history;
};

/// Mean squared error of the network over the given rows.
double mse_on(const Network& net, const Dataset& ds, std::span<const std::size_t> rows);

/// Trains on an already standardised dataset (see Standardizer::apply). Throws
/// DivergenceError carrying the epoch when the loss or parameters go non-finite.
TrainResult train_model(const TrainConfig& cfg, const Dataset& prepared, const SplitIndices& splits,
                        double lr);

/// Metrics on the selected rows of a standardised dataset, with predictions and
/// targets mapped back to the original score range first.
EvalReport evaluate(const Network& net, const Dataset& prepared, std::span<const std::size_t> rows,
                    const Standardizer& standardizer);

struct SweepRun {
  double lr = 0.0;
  bool ok = false;
  std::string diagnostic;  // set when the run diverged
  TrainHistory history;
  EvalReport val_report;
  double selection_score = 0.0;  // val plcc_mapped + srcc
};

struct SweepResult {
  Network network;
  double best_lr = 0.0;
  std::size_t best_index = 0;
  Standardizer standardizer;
  std::vector<SweepRun> runs;  // in lr_grid order
  EvalReport test_report;
};

/// One training run per learning rate (same seed, same splits). The winner has
/// the highest validation mapped PLCC + SRCC; ties keep the earlier grid entry.
/// Throws Error listing every diagnostic when all runs diverge.
SweepResult lr_sweep(const TrainConfig& cfg, const Dataset& raw, const SplitIndices& splits);

/// Worker count for a sweep: cfg.threads, else $KANFIT_THREADS, else hardware.
unsigned sweep_threads(const TrainConfig& cfg, std::size_t jobs);

}  // namespace kanfit
