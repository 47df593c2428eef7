#pragma once

#include <random>
#include <string>
#include <vector>

#include "srlstm/lstm.hpp"
#include "srlstm/params.hpp"
#include "srlstm/tape.hpp"

namespace srlstm {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

enum class NeighborhoodShape { square, disk };

/// Which hidden states neighbors contribute: the current iteration's (C) or
/// the final refined states of the previous time step (P).
enum class HiddenSource { current, previous };

struct RefinementConfig {
  std::size_t iterations = 1;
  double neighborhood_size = 10.0;
  NeighborhoodShape shape = NeighborhoodShape::square;
  bool use_motion_gate = true;
  bool use_attention = true;
  HiddenSource hidden_source = HiddenSource::current;
  Activation embed_activation = Activation::relu;
};

/// Neighbor lists per pedestrian. Each list is sorted by the neighbor's offset
/// (dx, then dy) relative to the pedestrian, so the order does not depend on labels.
struct NeighborGraph {
  std::vector<std::vector<std::size_t>> neighbors;

  std::size_t pair_count() const;
};

NeighborGraph build_neighborhood(const std::vector<Point>& positions, const std::vector<bool>& present,
                                 double neighborhood_size,
                                 NeighborhoodShape shape = NeighborhoodShape::square);

namespace sr_names {
std::string message(std::size_t layer);
std::string attention(std::size_t layer);
std::string relative_weight(std::size_t layer);
std::string relative_bias(std::size_t layer);
std::string gate_weight(std::size_t layer);
std::string gate_bias(std::size_t layer);
}  // namespace sr_names

/// Registers the parameters of refinement iteration `layer`. Only the
/// parameters the configuration uses are created.
void init_sr_params(ParamStore& store, std::size_t layer, const ModelDims& dims,
                    const RefinementConfig& config, std::mt19937_64& rng);

/// Names init_sr_params would create for `layer` under `config`.
std::vector<std::string> sr_param_names(std::size_t layer, const RefinementConfig& config);

struct SrVars {
  Var message, attention, relative_weight, relative_bias, gate_weight, gate_bias;
  static SrVars bind(Tape& tape, ParamStore& store, std::size_t layer, const RefinementConfig& config);
};

/// One (i, j, l) message record for introspection.
struct RefinementRecord {
  std::size_t step = 0;
  std::size_t iteration = 0;
  std::size_t target = 0;
  std::size_t neighbor = 0;
  double score = 0.0;
  double weight = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  std::vector<double> gate;
};

struct RefinementTrace {
  std::size_t step = 0;
  std::vector<RefinementRecord> records;
};

/// Flattened neighbor pairs. Pairs of one target are contiguous, in the
/// neighbor-list order.
struct PairList {
  std::vector<std::size_t> target;
  std::vector<std::size_t> source;
  Tensor2 offsets;
  std::size_t pedestrians = 0;

  static PairList from_graph(const NeighborGraph& graph, const std::vector<Point>& positions);
  std::size_t size() const { return target.size(); }
};

Var embed_relative(Tape& tape, const SrVars& p, Var offsets, Activation act);
Var motion_gate(Tape& tape, const SrVars& p, Var relative, Var h_neighbor, Var h_target);

/// One Jacobi refinement pass; returns the refined cell states for every row.
/// `h_source` supplies the neighbors' hidden states (current or previous step).
Var refine_step(Tape& tape, const SrVars& p, const RefinementConfig& config, const PairList& pairs,
                Var h_current, Var c_current, Var h_source, RefinementTrace* trace = nullptr,
                std::size_t iteration = 0);

struct RefinedVars {
  Var h;
  Var c;
};

/// Applies the configured number of refinement iterations, recomputing
/// ĥ = g_o ⊙ tanh(ĉ) between them. With no pairs the inputs are returned as is.
RefinedVars refine(Tape& tape, const std::vector<SrVars>& layers, const RefinementConfig& config,
                   const PairList& pairs, Var h, Var c, Var output_gate, Var h_previous,
                   RefinementTrace* trace = nullptr);

// Value-level entry points.
Tensor2 embed_relative(const Point& pos_i, const Point& pos_j, ParamStore& store, std::size_t layer,
                       const RefinementConfig& config);
Tensor2 motion_gate(const Tensor2& relative, const Tensor2& h_neighbor, const Tensor2& h_target,
                    ParamStore& store, std::size_t layer, const RefinementConfig& config);
/// Attention of pedestrian i over its neighbors, in graph order. N(i) must be non-empty.
std::vector<double> attention_weights(std::size_t i, const NeighborGraph& graph,
                                      const std::vector<Point>& positions, const Tensor2& h,
                                      ParamStore& store, std::size_t layer,
                                      const RefinementConfig& config);
/// Refined cell states after one iteration. `h_previous` is used when the
/// config selects previous-step neighbor states; pass an empty tensor otherwise.
Tensor2 refine_step(const LstmState& states, const std::vector<Point>& positions,
                    const NeighborGraph& graph, ParamStore& store, std::size_t layer,
                    const RefinementConfig& config, const Tensor2& h_previous = {},
                    RefinementTrace* trace = nullptr);
LstmState refine(const LstmState& states, const Tensor2& output_gate,
                 const std::vector<Point>& positions, const NeighborGraph& graph, ParamStore& store,
                 const RefinementConfig& config, const Tensor2& h_previous = {},
                 RefinementTrace* trace = nullptr);

}  // namespace srlstm
