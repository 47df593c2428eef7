#pragma once

#include <stdexcept>
#include <vector>

#include "srlstm/refinement.hpp"

namespace srlstm {

class MetricError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

using Trajectory = std::vector<Point>;

/// Mean Euclidean distance over every pedestrian and predicted step.
double mad(const std::vector<Trajectory>& predictions, const std::vector<Trajectory>& truth);
/// Mean Euclidean distance at the final predicted step.
double fad(const std::vector<Trajectory>& predictions, const std::vector<Trajectory>& truth);

/// Running sums so metrics can be pooled over many windows with every
/// pedestrian-step weighted equally.
struct DisplacementTotals {
  double step_distance = 0.0;
  double final_distance = 0.0;
  std::size_t steps = 0;
  std::size_t pedestrians = 0;

  void add(const Trajectory& prediction, const Trajectory& truth);
  void add(const std::vector<Trajectory>& predictions, const std::vector<Trajectory>& truth);
  double mad() const;
  double fad() const;
};

}  // namespace srlstm
