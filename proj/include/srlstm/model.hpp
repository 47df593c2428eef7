#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "srlstm/data.hpp"
#include "srlstm/lstm.hpp"
#include "srlstm/params.hpp"
#include "srlstm/refinement.hpp"
#include "srlstm/tape.hpp"

namespace srlstm {

class ModelShapeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  ModelDims dims;
  RefinementConfig refinement;
};

/// Shared LSTM encoder/decoder plus one parameter set per refinement iteration.
struct SrLstmModel {
  ModelConfig config;
  ParamStore params;

  /// Base parameters draw from `seed`; refinement layer l draws from a stream
  /// derived from (seed, l), so models that differ only in refinement share
  /// identical LSTM weights.
  static SrLstmModel create(const ModelConfig& config, std::uint64_t seed);

  /// Freezes every existing parameter and appends a freshly initialized
  /// refinement layer; the iteration count grows by one.
  void add_refinement_layer(std::uint64_t seed);

  /// Names and shapes the configuration requires.
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> required_shapes() const;
  /// Throws ModelShapeError when a required parameter is missing or misshaped.
  void check_shapes() const;
};

std::uint64_t layer_seed(std::uint64_t seed, std::size_t layer);

enum class TeachingMode { single_step, multi_step };

struct SequenceOptions {
  TeachingMode mode = TeachingMode::single_step;
  std::size_t observed = kObserved;
  RefinementTrace* trace = nullptr;
  bool keep_hidden = false;
};

/// Outputs of one pass over a window. Step t consumes the position at t and
/// predicts t+1.
struct SequenceOutput {
  std::vector<std::vector<std::size_t>> rows;
  std::vector<Var> predictions;
  std::vector<Tensor2> hidden;
  /// [t * peds + p]: prediction for step t made at step t-1.
  std::vector<Point> predicted_model;
  std::vector<Point> predicted_scene;
  /// [t * peds + p]: scene position fed at step t.
  std::vector<Point> input_scene;
};

/// Single-step mode feeds ground truth at every step and keeps every
/// pedestrian while present. Multi-step mode feeds ground truth for the
/// observed steps, then each target's own predictions; other pedestrians
/// leave the graph after the observed steps.
SequenceOutput run_sequence(Tape& tape, SrLstmModel& model, const PedestrianWindow& window,
                            const SequenceOptions& options = {});

struct LossTerm {
  Var sum;
  std::size_t count = 0;
};

/// Sum of squared model-frame errors over targets for predicted steps
/// first_step..steps-1 (0-based).
LossTerm sequence_loss(Tape& tape, const PedestrianWindow& window, const SequenceOutput& out,
                       std::size_t first_step = 1);

}  // namespace srlstm
