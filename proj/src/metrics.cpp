#include "srlstm/metrics.hpp"

#include <cmath>

namespace srlstm {

void DisplacementTotals::add(const Trajectory& prediction, const Trajectory& truth) {
  if (prediction.size() != truth.size() || prediction.empty()) {
    throw MetricError("displacement: prediction and ground truth lengths differ or are empty");
  }
  for (std::size_t k = 0; k < prediction.size(); ++k) {
    const double d = std::hypot(prediction[k].x - truth[k].x, prediction[k].y - truth[k].y);
    step_distance += d;
    if (k + 1 == prediction.size()) final_distance += d;
  }
  steps += prediction.size();
  ++pedestrians;
}

void DisplacementTotals::add(const std::vector<Trajectory>& predictions,
                             const std::vector<Trajectory>& truth) {
  if (predictions.size() != truth.size()) {
    throw MetricError("displacement: pedestrian counts differ");
  }
  for (std::size_t i = 0; i < predictions.size(); ++i) add(predictions[i], truth[i]);
}

double DisplacementTotals::mad() const {
  if (pedestrians == 0) throw MetricError("MAD undefined without target pedestrians");
  return step_distance / double(steps);
}

double DisplacementTotals::fad() const {
  if (pedestrians == 0) throw MetricError("FAD undefined without target pedestrians");
  return final_distance / double(pedestrians);
}

double mad(const std::vector<Trajectory>& predictions, const std::vector<Trajectory>& truth) {
  DisplacementTotals totals;
  totals.add(predictions, truth);
  return totals.mad();
}

double fad(const std::vector<Trajectory>& predictions, const std::vector<Trajectory>& truth) {
  DisplacementTotals totals;
  totals.add(predictions, truth);
  return totals.fad();
}

}  // namespace srlstm
