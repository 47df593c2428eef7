#pragma once

#include <cstdint>
#include <string>

#include "srlstm/model.hpp"
#include "srlstm/params.hpp"

namespace srlstm {

struct GradcheckSetup {
  std::size_t pedestrians = 5;
  std::size_t steps = 6;
  std::uint64_t seed = 1;
  /// Entries checked per tensor; 0 checks all of them.
  std::size_t samples_per_tensor = 100;
  double eps = 1e-5;
  double tolerance = 1e-4;
  /// Entries are skipped when one ulp of the loss alone would put their
  /// relative error above this.
  double rounding_budget = 1e-5;
  /// Test hook: corrupts the analytic gradient of this parameter.
  std::string inject_bug;
};

/// Walkers crossing a few meters apart, every one a target present at every
/// step, so all of them are neighbors under the default neighborhood.
PedestrianWindow gradcheck_window(std::size_t pedestrians, std::size_t steps, std::uint64_t seed);

/// Mean teacher-forced loss of `window`; with `gradients` set it also
/// accumulates gradients into the model's store.
double window_loss(SrLstmModel& model, const PedestrianWindow& window, bool gradients);

struct GradcheckOutcome {
  GradCheckResult result;
  double loss = 0.0;
  double noise_floor = 0.0;
  std::size_t parameters = 0;
  bool passed = false;
};

/// Central differences against backprop for every trainable parameter of a
/// freshly initialized model.
GradcheckOutcome run_gradcheck(const ModelConfig& config, const GradcheckSetup& setup);

}  // namespace srlstm
