#include <cmath>
#include <random>

#include "doctest.h"
#include "srlstm/gradcheck.hpp"
#include "srlstm/metrics.hpp"
#include "srlstm/synthetic.hpp"
#include "srlstm/training.hpp"
#include "support.hpp"

using namespace srlstm;
using srlstm::testing::straight_window;

namespace {

ModelConfig sr_config(std::size_t iterations) {
  ModelConfig c;
  c.refinement.iterations = iterations;
  return c;
}

std::vector<PedestrianWindow> zara_windows(std::size_t count) {
  auto all = prepare_scene(simulate_scene(synth_preset("zara01")), PreprocessConfig{});
  all.resize(std::min(count, all.size()));
  return all;
}

}  // namespace

TEST_CASE("l2_loss examples") {
  std::vector<Point> a{{1, 2}, {3, 4}};
  CHECK(l2_loss(a, a, {true, true}) == 0.0);
  std::vector<Point> p{{3, 4}}, z{{0, 0}};
  CHECK(l2_loss(p, z, {true}) == 25.0);
  CHECK_THROWS_AS(l2_loss(p, z, {false}), MetricError);
  CHECK_THROWS_AS(l2_loss(a, z, {true}), DimensionError);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5);
  std::bernoulli_distribution keep(0.7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Point> pr(37), gt(37);
    std::vector<bool> mask(37);
    double sum = 0.0;
    int n = 0;
    for (int i = 0; i < 37; ++i) {
      pr[i] = {u(rng), u(rng)};
      gt[i] = {u(rng), u(rng)};
      mask[i] = keep(rng) || i == 0;
      if (mask[i]) {
        sum += (pr[i].x - gt[i].x) * (pr[i].x - gt[i].x) + (pr[i].y - gt[i].y) * (pr[i].y - gt[i].y);
        ++n;
      }
    }
    CHECK(std::abs(l2_loss(pr, gt, mask) - sum / n) < 1e-12);
  }
}

TEST_CASE("zero decoder predicts the origin") {
  SrLstmModel m = SrLstmModel::create(sr_config(1), 4);
  m.params.value(lstm_names::decoder).fill(0.0);
  MiniBatch batch;
  batch.windows = {straight_window(3, 1), straight_window(2, 2)};
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& w : batch.windows)
    for (std::size_t t = 1; t < w.steps; ++t)
      for (std::size_t p = 0; p < w.peds(); ++p) {
        const Point g = w.model_xy[w.at(t, p)];
        sum += g.x * g.x + g.y * g.y;
        ++n;
      }
  TrainConfig tc;
  CHECK(std::abs(batch_loss(m, batch, tc) - sum / double(n)) < 1e-12);
  RolloutResult r = rollout(m, batch.windows[0]);
  for (std::size_t k = 0; k < r.targets.size(); ++k) {
    const Point shift = batch.windows[0].shift[r.targets[k]];
    CHECK(r.predicted[k][0] == shift);
  }
}

TEST_CASE("defaults") {
  TrainConfig tc;
  CHECK(tc.learning_rate == 0.001);
  CHECK(tc.epochs == 300);
  CHECK(tc.batch_size == 8);
  CHECK(tc.observed + tc.predicted == 20);
  CHECK(tc.first_loss_step() == 1);
  tc.loss_horizon = LossHorizon::prediction;
  CHECK(tc.first_loss_step() == 8);
}

TEST_CASE("rollout shape") {
  SrLstmModel m = SrLstmModel::create(sr_config(1), 5);
  PedestrianWindow w = straight_window(4, 3);
  w.target[2] = 0;
  RolloutResult r = rollout(m, w);
  CHECK(r.targets == std::vector<std::size_t>{0, 1, 3});
  for (const auto& traj : r.predicted) CHECK(traj.size() == 12);
  for (const auto& traj : r.truth) CHECK(traj.size() == 12);
}

TEST_CASE("L = 0 rollout equals the vanilla LSTM bitwise") {
  ModelConfig vanilla = sr_config(0);
  ModelConfig sr = sr_config(2);
  SrLstmModel a = SrLstmModel::create(vanilla, 9);
  SrLstmModel b = SrLstmModel::create(sr, 9);
  b.config.refinement.iterations = 0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    PedestrianWindow w = straight_window(5, 10 + s);
    RolloutResult ra = rollout(a, w), rb = rollout(b, w);
    CHECK(ra.predicted == rb.predicted);
  }
}

TEST_CASE("a lone pedestrian is unaffected by refinement") {
  SrLstmModel vanilla = SrLstmModel::create(sr_config(0), 11);
  for (std::size_t L : {1u, 2u, 3u}) {
    SrLstmModel sr = SrLstmModel::create(sr_config(L), 11);
    PedestrianWindow w = straight_window(1, 12);
    CHECK(rollout(sr, w).predicted == rollout(vanilla, w).predicted);
  }
}

TEST_CASE("ground-truth rollout reproduces teacher-forced losses") {
  SrLstmModel m = SrLstmModel::create(sr_config(2), 13);
  PedestrianWindow w = straight_window(4, 14);
  RolloutOptions opts;
  opts.ground_truth_inputs = true;
  RolloutResult r = rollout(m, w, opts);
  double mean = 0.0;
  for (std::size_t t = 1; t < 20; ++t) mean += r.step_losses[t];
  mean /= 19.0;
  MiniBatch batch;
  batch.windows = {w};
  CHECK(std::abs(mean - batch_loss(m, batch, TrainConfig{})) < 1e-12);
  CHECK(std::abs(window_loss(m, w, false) - batch_loss(m, batch, TrainConfig{})) < 1e-12);
}

TEST_CASE("stationary pedestrian stays put once fitted") {
  SrLstmModel m = SrLstmModel::create(sr_config(1), 15);
  PedestrianWindow w = straight_window(1, 16);
  for (std::size_t t = 0; t < 20; ++t) w.scene_xy[w.at(t, 0)] = {2.5, -1.0};
  normalize(w, Normalization::nabs);
  MiniBatch batch;
  batch.windows = {w};
  TrainConfig tc;
  tc.random_rotation = false;
  tc.learning_rate = 0.003;
  AdamState adam;
  adam.learning_rate = tc.learning_rate;
  std::mt19937_64 rng(1);
  std::vector<MiniBatch> batches{batch};
  for (int k = 0; k < 300; ++k) train_epoch(m, batches, tc, adam, rng);
  CHECK(batch_loss(m, batch, tc) < 1e-4);
  RolloutResult r = rollout(m, w);
  for (const Point& p : r.predicted[0]) {
    CHECK(std::abs(p.x - 2.5) < 0.02);
    CHECK(std::abs(p.y + 1.0) < 0.02);
  }
}

TEST_CASE("training loss falls on zara01") {
  auto windows = zara_windows(48);
  SrLstmModel m = SrLstmModel::create(sr_config(1), 1);
  TrainConfig tc;
  tc.random_rotation = false;
  MiniBatch all;
  all.windows = windows;
  const double before = batch_loss(m, all, tc);
  CHECK(std::isfinite(before));
  AdamState adam;
  std::mt19937_64 rng(2);
  double first = 0.0, last = 0.0;
  for (int epoch = 0; epoch < 10; ++epoch) {
    const double l = train_epoch(m, make_batches(windows, 8, rng()), tc, adam, rng);
    if (epoch == 0) first = l;
    last = l;
  }
  CHECK(last < first);
  CHECK(batch_loss(m, all, tc) < before);
}

TEST_CASE("non-finite loss aborts with the batch number") {
  SrLstmModel m = SrLstmModel::create(sr_config(1), 17);
  m.params.value(lstm_names::decoder)[0] = std::nan("");
  MiniBatch batch;
  batch.windows = {straight_window(2, 18)};
  AdamState adam;
  std::mt19937_64 rng(1);
  try {
    train_epoch(m, {batch}, TrainConfig{}, adam, rng);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("batch 0") != std::string::npos);
  }
}

TEST_CASE("staged training freezes the base model") {
  auto windows = zara_windows(24);
  std::vector<PedestrianWindow> train, val;
  split_validation(windows, 0.25, train, val);
  TrainConfig tc;
  tc.epochs = 1;
  tc.limit_batches = 2;
  SrLstmModel m = SrLstmModel::create(sr_config(1), 3);
  fit(m, train, val, tc);
  ParamStore base = m.params;
  std::vector<RolloutResult> before;
  for (const auto& w : val) before.push_back(rollout(m, w));

  staged_train(m, train, val, tc);
  CHECK(m.config.refinement.iterations == 2);
  for (const auto& [name, e] : base.entries()) {
    CHECK(m.params.value(name) == e.value);
    CHECK_FALSE(m.params.at(name).trainable);
  }
  for (const auto& name : sr_param_names(1, m.config.refinement)) CHECK(m.params.at(name).trainable);

  m.config.refinement.iterations = 1;
  for (std::size_t k = 0; k < val.size(); ++k) CHECK(rollout(m, val[k]).predicted == before[k].predicted);
}

TEST_CASE("training is bitwise deterministic") {
  auto windows = zara_windows(30);
  std::vector<PedestrianWindow> train, val;
  split_validation(windows, 0.2, train, val);
  TrainConfig tc;
  tc.epochs = 2;
  tc.limit_batches = 2;
  std::vector<FitResult> sa, sb;
  SrLstmModel a = train_model(sr_config(2), train, val, tc, {}, &sa);
  SrLstmModel b = train_model(sr_config(2), train, val, tc, {}, &sb);
  CHECK(sa.size() == 2);
  for (const auto& [name, e] : a.params.entries()) CHECK(b.params.value(name) == e.value);
  for (std::size_t s = 0; s < sa.size(); ++s)
    for (std::size_t k = 0; k < sa[s].log.size(); ++k) {
      CHECK(sa[s].log[k].train_loss == sb[s].log[k].train_loss);
      CHECK(sa[s].log[k].val_mad == sb[s].log[k].val_mad);
    }
}

TEST_CASE("fit keeps the best validation epoch") {
  auto windows = zara_windows(30);
  std::vector<PedestrianWindow> train, val;
  split_validation(windows, 0.2, train, val);
  TrainConfig tc;
  tc.epochs = 3;
  tc.limit_batches = 2;
  SrLstmModel m = SrLstmModel::create(sr_config(1), 8);
  FitResult r = fit(m, train, val, tc);
  double best = 1e300;
  for (const auto& e : r.log) best = std::min(best, e.val_mad);
  CHECK(r.best_val_mad == best);
  DisplacementTotals t;
  for (const auto& w : val) {
    RolloutResult rr = rollout(m, w);
    t.add(rr.predicted, rr.truth);
  }
  CHECK(t.mad() == best);
}

TEST_CASE("split_validation takes the tail of each scene") {
  std::vector<PedestrianWindow> ws;
  for (int k = 0; k < 20; ++k) {
    PedestrianWindow w;
    w.scene = k < 10 ? "a" : "b";
    w.start_frame = k;
    ws.push_back(w);
  }
  std::vector<PedestrianWindow> train, val;
  split_validation(ws, 0.2, train, val);
  REQUIRE(val.size() == 4);
  CHECK(val[0].start_frame == 8);
  CHECK(val[1].start_frame == 9);
  CHECK(val[2].start_frame == 18);
  CHECK(train.size() == 16);
}

TEST_CASE("end-to-end gradients over a full window") {
  GradcheckSetup setup;
  setup.pedestrians = 3;
  setup.steps = 20;
  setup.samples_per_tensor = 15;
  GradcheckOutcome out = run_gradcheck(sr_config(2), setup);
  INFO("worst " << out.result.worst_parameter);
  CHECK(out.result.max_relative_error < 1e-4);
}

TEST_CASE("model shape checks") {
  SrLstmModel m = SrLstmModel::create(sr_config(2), 1);
  CHECK_NOTHROW(m.check_shapes());
  m.config.refinement.iterations = 3;
  CHECK_THROWS_AS(m.check_shapes(), ModelShapeError);
  m.config.refinement.iterations = 2;
  m.params.value(sr_names::message(1)) = Tensor2(3, 3);
  CHECK_THROWS_AS(m.check_shapes(), ModelShapeError);
}
