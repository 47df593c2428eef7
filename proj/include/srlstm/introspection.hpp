#pragma once

#include <iosfwd>
#include <vector>

#include "srlstm/model.hpp"

namespace srlstm {

/// A high response of one hidden neuron at (window, step, pedestrian).
struct NeuronHit {
  std::size_t neuron = 0;
  std::size_t rank = 0;
  double activation = 0.0;
  std::size_t window = 0;
  std::size_t step = 0;
  std::int64_t frame = 0;
  std::int64_t ped = 0;
  /// Up to the last 8 ground-truth positions ending at `step`.
  std::vector<Point> segment;
};

/// A high motion-gate value of one element for the pair (i, j).
struct GateHit {
  std::size_t element = 0;
  std::size_t rank = 0;
  double value = 0.0;
  std::size_t window = 0;
  std::size_t step = 0;
  std::int64_t frame = 0;
  std::size_t layer = 0;
  std::int64_t ped_i = 0;
  std::int64_t ped_j = 0;
  std::vector<Point> snippet_i;
  std::vector<Point> snippet_j;
};

struct AttentionRow {
  std::size_t window = 0;
  std::size_t step = 0;
  std::int64_t frame = 0;
  std::size_t layer = 0;
  std::int64_t ped_i = 0;
  std::int64_t ped_j = 0;
  double weight = 0.0;
};

struct Introspection {
  std::vector<NeuronHit> neurons;
  std::vector<GateHit> gates;
  std::vector<AttentionRow> attention;
};

/// Runs a test-time rollout over every window and ranks refined hidden
/// activations and motion-gate entries. Ties go to the earlier window, step
/// and pedestrian. Gate ranking is empty without a motion gate.
Introspection introspect(SrLstmModel& model, const std::vector<PedestrianWindow>& windows,
                         std::size_t top_k = 20);

void write_neurons_csv(std::ostream& out, const std::vector<NeuronHit>& hits);
void write_gates_csv(std::ostream& out, const std::vector<GateHit>& hits);
void write_attention_csv(std::ostream& out, const std::vector<AttentionRow>& rows);

}  // namespace srlstm
