#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "srlstm/data.hpp"
#include "srlstm/model.hpp"
#include "srlstm/params.hpp"

namespace srlstm {

class TrainingError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class LossHorizon { full, prediction };

struct TrainConfig {
  std::size_t epochs = 300;
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;
  std::size_t observed = kObserved;
  std::size_t predicted = kPredicted;
  double grad_clip = 1.0;
  std::uint64_t seed = 1;
  LossHorizon loss_horizon = LossHorizon::full;
  /// Multiplies the learning rate by this factor every `lr_decay_every`
  /// epochs; 1.0 keeps it constant.
  double lr_decay_factor = 1.0;
  std::size_t lr_decay_every = 0;
  /// Caps batches per epoch; 0 means all.
  std::size_t limit_batches = 0;
  bool random_rotation = true;
  double validation_fraction = 0.15;
  /// Train refinement iterations beyond the first one layer at a time with
  /// earlier parameters frozen.
  bool staged = true;

  std::size_t first_loss_step() const {
    return loss_horizon == LossHorizon::full ? 1 : observed;
  }
};

/// Mean squared Euclidean error over entries whose mask is set.
double l2_loss(std::span<const Point> predictions, std::span<const Point> truth,
               const std::vector<bool>& mask);

/// Teacher-forced loss and gradients for one batch. Gradients are added to
/// the model's store, scaled so they belong to the batch mean loss.
double batch_loss_and_gradients(SrLstmModel& model, const MiniBatch& batch, const TrainConfig& config);

/// Teacher-forced loss of one batch without gradients.
double batch_loss(SrLstmModel& model, const MiniBatch& batch, const TrainConfig& config);

/// One pass over `batches`: loss, backward, clipping and an Adam step per
/// batch. Rotation angles are drawn from `rng` when enabled. Returns the
/// mean batch loss.
double train_epoch(SrLstmModel& model, const std::vector<MiniBatch>& batches,
                   const TrainConfig& config, AdamState& adam, std::mt19937_64& rng);

struct RolloutResult {
  std::vector<std::size_t> targets;
  /// Per target: scene-frame predictions for the predicted steps.
  std::vector<std::vector<Point>> predicted;
  std::vector<std::vector<Point>> truth;
  /// Mean squared model-frame error per output step (index = predicted step).
  std::vector<double> step_losses;
};

struct RolloutOptions {
  std::size_t observed = kObserved;
  /// Feed ground truth at every step instead of the model's own outputs.
  bool ground_truth_inputs = false;
  RefinementTrace* trace = nullptr;
  std::vector<Tensor2>* hidden = nullptr;
};

RolloutResult rollout(SrLstmModel& model, const PedestrianWindow& window,
                      const RolloutOptions& options = {});

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_mad = 0.0;
  double val_fad = 0.0;
};

struct FitResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_mad = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Trains all trainable parameters for config.epochs epochs and restores the
/// parameters of the epoch with the lowest multi-step validation MAD. With no
/// validation windows the last epoch is kept.
FitResult fit(SrLstmModel& model, const std::vector<PedestrianWindow>& train,
              const std::vector<PedestrianWindow>& validation, const TrainConfig& config,
              const EpochCallback& on_epoch = {});

/// Freezes the trained model, appends one refinement layer and trains only it.
FitResult staged_train(SrLstmModel& model, const std::vector<PedestrianWindow>& train,
                       const std::vector<PedestrianWindow>& validation, const TrainConfig& config,
                       const EpochCallback& on_epoch = {});

/// Builds and trains a model for `config`: all parameters with at most one
/// refinement iteration, then (when staged) one additional layer at a time.
SrLstmModel train_model(const ModelConfig& config, const std::vector<PedestrianWindow>& train,
                        const std::vector<PedestrianWindow>& validation, const TrainConfig& train_config,
                        const EpochCallback& on_epoch = {}, std::vector<FitResult>* stages = nullptr);

/// Splits each scene's windows so the final fraction (in time order) validates.
void split_validation(const std::vector<PedestrianWindow>& windows, double fraction,
                      std::vector<PedestrianWindow>& train, std::vector<PedestrianWindow>& validation);

}  // namespace srlstm
