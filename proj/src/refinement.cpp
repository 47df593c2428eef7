#include "srlstm/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace srlstm {

std::size_t NeighborGraph::pair_count() const {
  std::size_t n = 0;
  for (const auto& list : neighbors) n += list.size();
  return n;
}

NeighborGraph build_neighborhood(const std::vector<Point>& positions, const std::vector<bool>& present,
                                 double neighborhood_size, NeighborhoodShape shape) {
  if (positions.size() != present.size()) {
    throw DimensionError("build_neighborhood: positions and presence differ in length");
  }
  if (!(neighborhood_size > 0.0)) {
    throw std::invalid_argument("build_neighborhood: neighborhood size must be positive");
  }
  const std::size_t n = positions.size();
  NeighborGraph graph;
  graph.neighbors.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!present[i]) continue;
    auto& list = graph.neighbors[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !present[j]) continue;
      const double dx = positions[j].x - positions[i].x;
      const double dy = positions[j].y - positions[i].y;
      const bool inside = shape == NeighborhoodShape::square
                              ? std::abs(dx) <= neighborhood_size && std::abs(dy) <= neighborhood_size
                              : dx * dx + dy * dy <= neighborhood_size * neighborhood_size;
      if (inside) list.push_back(j);
    }
    const Point origin = positions[i];
    std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
      const double ax = positions[a].x - origin.x, bx = positions[b].x - origin.x;
      if (ax != bx) return ax < bx;
      const double ay = positions[a].y - origin.y, by = positions[b].y - origin.y;
      if (ay != by) return ay < by;
      return a < b;
    });
  }
  return graph;
}

namespace sr_names {
namespace {
std::string prefixed(std::size_t layer, const char* what) {
  return "sr" + std::to_string(layer) + "." + what;
}
}  // namespace
std::string message(std::size_t layer) { return prefixed(layer, "W_mp"); }
std::string attention(std::size_t layer) { return prefixed(layer, "w_a"); }
std::string relative_weight(std::size_t layer) { return prefixed(layer, "W_r"); }
std::string relative_bias(std::size_t layer) { return prefixed(layer, "b_r"); }
std::string gate_weight(std::size_t layer) { return prefixed(layer, "W_m"); }
std::string gate_bias(std::size_t layer) { return prefixed(layer, "b_m"); }
}  // namespace sr_names

namespace {
bool uses_relative(const RefinementConfig& c) { return c.use_motion_gate || c.use_attention; }
}  // namespace

std::vector<std::string> sr_param_names(std::size_t layer, const RefinementConfig& config) {
  std::vector<std::string> names{sr_names::message(layer)};
  if (uses_relative(config)) {
    names.push_back(sr_names::relative_weight(layer));
    names.push_back(sr_names::relative_bias(layer));
  }
  if (config.use_attention) names.push_back(sr_names::attention(layer));
  if (config.use_motion_gate) {
    names.push_back(sr_names::gate_weight(layer));
    names.push_back(sr_names::gate_bias(layer));
  }
  return names;
}

void init_sr_params(ParamStore& store, std::size_t layer, const ModelDims& dims,
                    const RefinementConfig& config, std::mt19937_64& rng) {
  const std::size_t joint = dims.relative + 2 * dims.hidden;
  const double joint_bound = 1.0 / std::sqrt(double(joint));
  store.add(sr_names::message(layer),
            uniform_tensor(dims.hidden, dims.hidden, 1.0 / std::sqrt(double(dims.hidden)), rng));
  if (uses_relative(config)) {
    store.add(sr_names::relative_weight(layer),
              uniform_tensor(dims.relative, 2, 1.0 / std::sqrt(2.0), rng));
    store.add(sr_names::relative_bias(layer), uniform_tensor(1, dims.relative, 1.0 / std::sqrt(2.0), rng));
  }
  if (config.use_attention) {
    store.add(sr_names::attention(layer), uniform_tensor(1, joint, joint_bound, rng));
  }
  if (config.use_motion_gate) {
    store.add(sr_names::gate_weight(layer), uniform_tensor(dims.hidden, joint, joint_bound, rng));
    store.add(sr_names::gate_bias(layer), Tensor2(1, dims.hidden));
  }
}

SrVars SrVars::bind(Tape& tape, ParamStore& store, std::size_t layer, const RefinementConfig& config) {
  SrVars v;
  v.message = tape.parameter(store, sr_names::message(layer));
  if (uses_relative(config)) {
    v.relative_weight = tape.parameter(store, sr_names::relative_weight(layer));
    v.relative_bias = tape.parameter(store, sr_names::relative_bias(layer));
  }
  if (config.use_attention) v.attention = tape.parameter(store, sr_names::attention(layer));
  if (config.use_motion_gate) {
    v.gate_weight = tape.parameter(store, sr_names::gate_weight(layer));
    v.gate_bias = tape.parameter(store, sr_names::gate_bias(layer));
  }
  return v;
}

PairList PairList::from_graph(const NeighborGraph& graph, const std::vector<Point>& positions) {
  PairList pairs;
  pairs.pedestrians = graph.neighbors.size();
  const std::size_t k = graph.pair_count();
  pairs.target.reserve(k);
  pairs.source.reserve(k);
  pairs.offsets = Tensor2(k, 2);
  std::size_t row = 0;
  for (std::size_t i = 0; i < graph.neighbors.size(); ++i) {
    for (std::size_t j : graph.neighbors[i]) {
      pairs.target.push_back(i);
      pairs.source.push_back(j);
      pairs.offsets(row, 0) = positions[i].x - positions[j].x;
      pairs.offsets(row, 1) = positions[i].y - positions[j].y;
      ++row;
    }
  }
  return pairs;
}

Var embed_relative(Tape& tape, const SrVars& p, Var offsets, Activation act) {
  return tape.activate(tape.linear(offsets, p.relative_weight, p.relative_bias), act);
}

Var motion_gate(Tape& tape, const SrVars& p, Var relative, Var h_neighbor, Var h_target) {
  Var joint = tape.concat_cols({relative, h_neighbor, h_target});
  return tape.sigmoid(tape.linear(joint, p.gate_weight, p.gate_bias));
}

Var refine_step(Tape& tape, const SrVars& p, const RefinementConfig& config, const PairList& pairs,
                Var h_current, Var c_current, Var h_source, RefinementTrace* trace,
                std::size_t iteration) {
  const std::size_t k = pairs.size();
  if (k == 0) return c_current;
  const std::size_t n = tape.value(c_current).rows();

  Var h_neighbor = tape.gather_rows(h_source, pairs.source);
  Var joint;
  if (uses_relative(config)) {
    Var h_target = tape.gather_rows(h_current, pairs.target);
    Var relative = embed_relative(tape, p, tape.constant(pairs.offsets), config.embed_activation);
    joint = tape.concat_cols({relative, h_neighbor, h_target});
  }

  Var gate;
  Var selected = h_neighbor;
  if (config.use_motion_gate) {
    gate = tape.sigmoid(tape.linear(joint, p.gate_weight, p.gate_bias));
    selected = tape.hadamard(gate, h_neighbor);
  }

  Var score;
  Var weight;
  if (config.use_attention) {
    score = tape.linear(joint, p.attention);
    weight = tape.segment_softmax(score, pairs.target, n);
  } else {
    std::vector<std::size_t> degree(n, 0);
    for (std::size_t t : pairs.target) ++degree[t];
    Tensor2 uniform(k, 1);
    for (std::size_t r = 0; r < k; ++r) uniform[r] = 1.0 / double(degree[pairs.target[r]]);
    weight = tape.constant(std::move(uniform));
  }

  Var message = tape.segment_sum(tape.scale_rows(selected, weight), pairs.target, n);
  Var c_next = tape.add(c_current, tape.linear(message, p.message));

  if (trace != nullptr) {
    const Tensor2& w = tape.value(weight);
    for (std::size_t r = 0; r < k; ++r) {
      RefinementRecord rec;
      rec.step = trace->step;
      rec.iteration = iteration;
      rec.target = pairs.target[r];
      rec.neighbor = pairs.source[r];
      rec.score = config.use_attention ? tape.value(score)[r]
                                       : std::numeric_limits<double>::quiet_NaN();
      rec.weight = w[r];
      rec.dx = pairs.offsets(r, 0);
      rec.dy = pairs.offsets(r, 1);
      if (config.use_motion_gate) {
        auto g = tape.value(gate).row(r);
        rec.gate.assign(g.begin(), g.end());
      }
      trace->records.push_back(std::move(rec));
    }
  }
  return c_next;
}

RefinedVars refine(Tape& tape, const std::vector<SrVars>& layers, const RefinementConfig& config,
                   const PairList& pairs, Var h, Var c, Var output_gate, Var h_previous,
                   RefinementTrace* trace) {
  if (layers.size() < config.iterations) {
    throw std::invalid_argument("refine: fewer parameter layers than iterations");
  }
  if (pairs.size() == 0) return {h, c};
  for (std::size_t l = 0; l < config.iterations; ++l) {
    Var source = config.hidden_source == HiddenSource::previous ? h_previous : h;
    c = refine_step(tape, layers[l], config, pairs, h, c, source, trace, l);
    h = tape.hadamard(output_gate, tape.tanh(c));
  }
  return {h, c};
}

// --- value-level wrappers -------------------------------------------------

Tensor2 embed_relative(const Point& pos_i, const Point& pos_j, ParamStore& store, std::size_t layer,
                       const RefinementConfig& config) {
  Tape tape(false);
  SrVars p = SrVars::bind(tape, store, layer, config);
  Var offset = tape.constant(Tensor2::from_rows({{pos_i.x - pos_j.x, pos_i.y - pos_j.y}}));
  return tape.value(embed_relative(tape, p, offset, config.embed_activation));
}

Tensor2 motion_gate(const Tensor2& relative, const Tensor2& h_neighbor, const Tensor2& h_target,
                    ParamStore& store, std::size_t layer, const RefinementConfig& config) {
  Tape tape(false);
  SrVars p = SrVars::bind(tape, store, layer, config);
  return tape.value(motion_gate(tape, p, tape.constant(relative), tape.constant(h_neighbor),
                                tape.constant(h_target)));
}

std::vector<double> attention_weights(std::size_t i, const NeighborGraph& graph,
                                      const std::vector<Point>& positions, const Tensor2& h,
                                      ParamStore& store, std::size_t layer,
                                      const RefinementConfig& config) {
  const auto& list = graph.neighbors.at(i);
  if (list.empty()) throw EmptySupportError("attention_weights: pedestrian has no neighbors");
  NeighborGraph single;
  single.neighbors.resize(graph.neighbors.size());
  single.neighbors[i] = list;
  PairList pairs = PairList::from_graph(single, positions);

  Tape tape(false);
  SrVars p = SrVars::bind(tape, store, layer, config);
  Var hv = tape.constant(h);
  Var relative = embed_relative(tape, p, tape.constant(pairs.offsets), config.embed_activation);
  Var joint = tape.concat_cols(
      {relative, tape.gather_rows(hv, pairs.source), tape.gather_rows(hv, pairs.target)});
  const Tensor2& scores = tape.value(tape.linear(joint, p.attention));
  return softmax_masked(scores.data(), std::vector<bool>(scores.size(), true));
}

Tensor2 refine_step(const LstmState& states, const std::vector<Point>& positions,
                    const NeighborGraph& graph, ParamStore& store, std::size_t layer,
                    const RefinementConfig& config, const Tensor2& h_previous,
                    RefinementTrace* trace) {
  Tape tape(false);
  SrVars p = SrVars::bind(tape, store, layer, config);
  PairList pairs = PairList::from_graph(graph, positions);
  Var h = tape.constant(states.h);
  Var source = config.hidden_source == HiddenSource::previous ? tape.constant(h_previous) : h;
  return tape.value(
      refine_step(tape, p, config, pairs, h, tape.constant(states.c), source, trace, layer));
}

LstmState refine(const LstmState& states, const Tensor2& output_gate,
                 const std::vector<Point>& positions, const NeighborGraph& graph, ParamStore& store,
                 const RefinementConfig& config, const Tensor2& h_previous,
                 RefinementTrace* trace) {
  Tape tape(false);
  std::vector<SrVars> layers;
  for (std::size_t l = 0; l < config.iterations; ++l)
    layers.push_back(SrVars::bind(tape, store, l, config));
  PairList pairs = PairList::from_graph(graph, positions);
  Var prev = config.hidden_source == HiddenSource::previous ? tape.constant(h_previous) : Var{};
  RefinedVars out = refine(tape, layers, config, pairs, tape.constant(states.h),
                           tape.constant(states.c), tape.constant(output_gate), prev, trace);
  return {tape.value(out.h), tape.value(out.c)};
}

}  // namespace srlstm
