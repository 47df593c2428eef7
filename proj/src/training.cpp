#include "srlstm/training.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "srlstm/metrics.hpp"

namespace srlstm {

double l2_loss(std::span<const Point> predictions, std::span<const Point> truth,
               const std::vector<bool>& mask) {
  if (predictions.size() != truth.size() || mask.size() != truth.size()) {
    throw DimensionError("l2_loss: predictions, ground truth and mask must align");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double dx = predictions[i].x - truth[i].x;
    const double dy = predictions[i].y - truth[i].y;
    sum += dx * dx + dy * dy;
    ++count;
  }
  if (count == 0) throw MetricError("l2_loss: empty mask");
  return sum / double(count);
}

namespace {

std::size_t loss_count(const PedestrianWindow& w, std::size_t first_step) {
  std::size_t n = 0;
  for (std::size_t t = 0; t + 1 < w.steps; ++t) {
    if (t + 1 < first_step) continue;
    for (std::size_t p = 0; p < w.peds(); ++p) {
      if (w.is_present(t, p) && w.is_target(p) && w.is_present(t + 1, p)) ++n;
    }
  }
  return n;
}

std::size_t batch_count(const MiniBatch& batch, const TrainConfig& config) {
  std::size_t n = 0;
  for (const auto& w : batch.windows) n += loss_count(w, config.first_loss_step());
  if (n == 0) throw MetricError("batch has no target pedestrian steps");
  return n;
}

}  // namespace

double batch_loss_and_gradients(SrLstmModel& model, const MiniBatch& batch,
                                const TrainConfig& config) {
  const double total = double(batch_count(batch, config));
  double loss = 0.0;
  for (const auto& w : batch.windows) {
    Tape tape;
    SequenceOutput out = run_sequence(tape, model, w, {TeachingMode::single_step, config.observed});
    LossTerm term = sequence_loss(tape, w, out, config.first_loss_step());
    if (term.count == 0) continue;
    loss += tape.value(term.sum)[0];
    tape.backward(term.sum, 1.0 / total);
  }
  return loss / total;
}

double batch_loss(SrLstmModel& model, const MiniBatch& batch, const TrainConfig& config) {
  const double total = double(batch_count(batch, config));
  double loss = 0.0;
  for (const auto& w : batch.windows) {
    Tape tape(false);
    SequenceOutput out = run_sequence(tape, model, w, {TeachingMode::single_step, config.observed});
    LossTerm term = sequence_loss(tape, w, out, config.first_loss_step());
    if (term.count != 0) loss += tape.value(term.sum)[0];
  }
  return loss / total;
}

double train_epoch(SrLstmModel& model, const std::vector<MiniBatch>& batches,
                   const TrainConfig& config, AdamState& adam, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * std::numbers::pi);
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    if (config.limit_batches != 0 && used >= config.limit_batches) break;
    model.params.zero_grad();
    double loss = 0.0;
    if (config.random_rotation) {
      MiniBatch rotated = batches[b];
      random_rotate(rotated, angle_dist(rng));
      loss = batch_loss_and_gradients(model, rotated, config);
    } else {
      loss = batch_loss_and_gradients(model, batches[b], config);
    }
    if (!std::isfinite(loss)) {
      throw TrainingError("non-finite loss in batch " + std::to_string(b));
    }
    clip_grad_norm(model.params, config.grad_clip);
    try {
      adam_step(model.params, adam);
    } catch (const NumericError& e) {
      throw TrainingError("batch " + std::to_string(b) + ": " + e.what());
    }
    total += loss;
    ++used;
  }
  return used == 0 ? 0.0 : total / double(used);
}

RolloutResult rollout(SrLstmModel& model, const PedestrianWindow& w, const RolloutOptions& options) {
  Tape tape(false);
  SequenceOptions seq;
  seq.mode = options.ground_truth_inputs ? TeachingMode::single_step : TeachingMode::multi_step;
  seq.observed = options.observed;
  seq.trace = options.trace;
  seq.keep_hidden = options.hidden != nullptr;
  SequenceOutput out = run_sequence(tape, model, w, seq);
  if (options.hidden) *options.hidden = out.hidden;

  RolloutResult result;
  const std::size_t peds = w.peds();
  for (std::size_t p = 0; p < peds; ++p) {
    if (!w.is_target(p)) continue;
    result.targets.push_back(p);
    Trajectory pred, truth;
    for (std::size_t t = options.observed; t < w.steps; ++t) {
      pred.push_back(out.predicted_scene[w.at(t, p)]);
      truth.push_back(w.scene_xy[w.at(t, p)]);
    }
    result.predicted.push_back(std::move(pred));
    result.truth.push_back(std::move(truth));
  }

  result.step_losses.assign(w.steps, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t t = 1; t < w.steps; ++t) {
    std::vector<Point> pred, truth;
    for (std::size_t p : result.targets) {
      pred.push_back(out.predicted_model[w.at(t, p)]);
      truth.push_back(w.model_xy[w.at(t, p)]);
    }
    if (!pred.empty()) result.step_losses[t] = l2_loss(pred, truth, std::vector<bool>(pred.size(), true));
  }
  return result;
}

namespace {

DisplacementTotals validate(SrLstmModel& model, const std::vector<PedestrianWindow>& windows,
                            std::size_t observed) {
  DisplacementTotals totals;
  for (const auto& w : windows) {
    RolloutOptions opts;
    opts.observed = observed;
    RolloutResult r = rollout(model, w, opts);
    totals.add(r.predicted, r.truth);
  }
  return totals;
}

}  // namespace

FitResult fit(SrLstmModel& model, const std::vector<PedestrianWindow>& train,
              const std::vector<PedestrianWindow>& validation, const TrainConfig& config,
              const EpochCallback& on_epoch) {
  FitResult result;
  result.best_val_mad = std::numeric_limits<double>::infinity();
  AdamState adam;
  adam.learning_rate = config.learning_rate;
  std::mt19937_64 rng(config.seed);
  ParamStore best = model.params;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.lr_decay_every != 0) {
      const double decays = double((epoch - 1) / config.lr_decay_every);
      adam.learning_rate = config.learning_rate * std::pow(config.lr_decay_factor, decays);
    }
    auto batches = make_batches(train, config.batch_size, rng());
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = train_epoch(model, batches, config, adam, rng);
    if (!validation.empty()) {
      DisplacementTotals v = validate(model, validation, config.observed);
      log.val_mad = v.mad();
      log.val_fad = v.fad();
      if (log.val_mad < result.best_val_mad) {
        result.best_val_mad = log.val_mad;
        result.best_epoch = epoch;
        best = model.params;
      }
    } else {
      log.val_mad = log.val_fad = std::numeric_limits<double>::quiet_NaN();
      result.best_epoch = epoch;
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  if (!validation.empty() && result.best_epoch != 0) model.params = std::move(best);
  return result;
}

FitResult staged_train(SrLstmModel& model, const std::vector<PedestrianWindow>& train,
                       const std::vector<PedestrianWindow>& validation, const TrainConfig& config,
                       const EpochCallback& on_epoch) {
  model.add_refinement_layer(config.seed);
  return fit(model, train, validation, config, on_epoch);
}

SrLstmModel train_model(const ModelConfig& config, const std::vector<PedestrianWindow>& train,
                        const std::vector<PedestrianWindow>& validation,
                        const TrainConfig& train_config, const EpochCallback& on_epoch,
                        std::vector<FitResult>* stages) {
  const std::size_t target = config.refinement.iterations;
  ModelConfig initial = config;
  if (train_config.staged && target > 1) initial.refinement.iterations = 1;
  SrLstmModel model = SrLstmModel::create(initial, train_config.seed);
  FitResult first = fit(model, train, validation, train_config, on_epoch);
  if (stages) stages->push_back(std::move(first));
  while (model.config.refinement.iterations < target) {
    FitResult stage = staged_train(model, train, validation, train_config, on_epoch);
    if (stages) stages->push_back(std::move(stage));
  }
  // Leave every parameter trainable again for callers that continue training.
  for (auto& [_, e] : model.params.entries()) e.trainable = true;
  return model;
}

void split_validation(const std::vector<PedestrianWindow>& windows, double fraction,
                      std::vector<PedestrianWindow>& train,
                      std::vector<PedestrianWindow>& validation) {
  std::map<std::string, std::vector<const PedestrianWindow*>> by_scene;
  std::vector<std::string> order;
  for (const auto& w : windows) {
    if (!by_scene.count(w.scene)) order.push_back(w.scene);
    by_scene[w.scene].push_back(&w);
  }
  for (const auto& scene : order) {
    const auto& list = by_scene[scene];
    const auto n_val = static_cast<std::size_t>(std::floor(double(list.size()) * fraction));
    const std::size_t cut = list.size() - n_val;
    for (std::size_t i = 0; i < list.size(); ++i) (i < cut ? train : validation).push_back(*list[i]);
  }
}

}  // namespace srlstm
