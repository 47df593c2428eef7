#include "srlstm/gradcheck.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "srlstm/metrics.hpp"

namespace srlstm {

PedestrianWindow gradcheck_window(std::size_t pedestrians, std::size_t steps, std::uint64_t seed) {
  if (pedestrians == 0 || steps < 2) throw std::invalid_argument("gradcheck window needs peds and 2+ steps");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> start(0.0, 3.0), jitter(-0.05, 0.05), pace(0.3, 0.5);

  PedestrianWindow w;
  w.scene = "gradcheck";
  w.steps = steps;
  for (std::size_t p = 0; p < pedestrians; ++p) w.ped_ids.push_back(std::int64_t(p) + 1);
  w.scene_xy.resize(steps * pedestrians);
  for (std::size_t p = 0; p < pedestrians; ++p) {
    Point pos{start(rng), start(rng)};
    const double dir = p % 2 == 0 ? 1.0 : -1.0;
    const Point vel{dir * pace(rng), jitter(rng)};
    for (std::size_t t = 0; t < steps; ++t) {
      w.scene_xy[w.at(t, p)] = pos;
      pos.x += vel.x + jitter(rng);
      pos.y += vel.y + jitter(rng);
    }
  }
  w.present.assign(steps * pedestrians, 1);
  w.target.assign(pedestrians, 1);
  normalize(w, Normalization::nabs, std::max<std::size_t>(1, steps / 2));
  return w;
}

double window_loss(SrLstmModel& model, const PedestrianWindow& window, bool gradients) {
  Tape tape(gradients);
  SequenceOutput out = run_sequence(tape, model, window, {TeachingMode::single_step, window.steps});
  LossTerm term = sequence_loss(tape, window, out, 1);
  if (term.count == 0) throw MetricError("window has no loss terms");
  const double n = double(term.count);
  if (gradients) tape.backward(term.sum, 1.0 / n);
  return tape.value(term.sum)[0] / n;
}

GradcheckOutcome run_gradcheck(const ModelConfig& config, const GradcheckSetup& setup) {
  SrLstmModel model = SrLstmModel::create(config, setup.seed);
  const PedestrianWindow w = gradcheck_window(setup.pedestrians, setup.steps, setup.seed);

  model.params.zero_grad();
  const double loss = window_loss(model, w, true);
  if (!setup.inject_bug.empty()) {
    auto& g = model.params.grad(setup.inject_bug);
    for (auto& v : g.data()) v = v * 1.05 + 1e-4;
  }

  GradCheckOptions opts;
  opts.eps = setup.eps;
  opts.samples_per_tensor = setup.samples_per_tensor;
  opts.seed = setup.seed;
  // Central differences resolve |g| no finer than ulp(loss) / (2 eps).
  const double ulp = std::numeric_limits<double>::epsilon() * std::abs(loss);
  opts.noise_floor = setup.rounding_budget > 0.0 ? ulp / (2.0 * setup.eps) / setup.rounding_budget : 0.0;
  GradcheckOutcome outcome;
  outcome.loss = loss;
  outcome.noise_floor = opts.noise_floor;
  outcome.result = finite_diff_check([&](const ParamStore&) { return window_loss(model, w, false); },
                                     model.params, opts);
  outcome.parameters = model.params.parameter_count();
  outcome.passed = outcome.result.max_relative_error < setup.tolerance;
  return outcome;
}

}  // namespace srlstm
