#include "srlstm/model.hpp"

#include <random>

namespace srlstm {

std::uint64_t layer_seed(std::uint64_t seed, std::size_t layer) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(layer), 0x5eed5eedu};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t{out[0]} << 32) | out[1];
}

SrLstmModel SrLstmModel::create(const ModelConfig& config, std::uint64_t seed) {
  SrLstmModel m;
  m.config = config;
  std::mt19937_64 rng(seed);
  init_lstm_params(m.params, config.dims, rng);
  for (std::size_t l = 0; l < config.refinement.iterations; ++l) {
    std::mt19937_64 layer_rng(layer_seed(seed, l));
    init_sr_params(m.params, l, config.dims, config.refinement, layer_rng);
  }
  return m;
}

void SrLstmModel::add_refinement_layer(std::uint64_t seed) {
  params.freeze_all();
  const std::size_t layer = config.refinement.iterations;
  std::mt19937_64 rng(layer_seed(seed, layer));
  init_sr_params(params, layer, config.dims, config.refinement, rng);
  config.refinement.iterations = layer + 1;
}

std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>>
SrLstmModel::required_shapes() const {
  const auto& d = config.dims;
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> out;
  out.push_back({lstm_names::embed_weight, {d.embed, 2}});
  out.push_back({lstm_names::embed_bias, {1, d.embed}});
  for (const char* g : lstm_names::gates) {
    out.push_back({lstm_names::input_weight(g), {d.hidden, d.embed}});
    out.push_back({lstm_names::recurrent_weight(g), {d.hidden, d.hidden}});
    out.push_back({lstm_names::bias(g), {1, d.hidden}});
  }
  out.push_back({lstm_names::decoder, {2, d.hidden}});
  const std::size_t joint = d.relative + 2 * d.hidden;
  for (std::size_t l = 0; l < config.refinement.iterations; ++l) {
    for (const auto& name : sr_param_names(l, config.refinement)) {
      std::pair<std::size_t, std::size_t> shape;
      if (name == sr_names::message(l)) shape = {d.hidden, d.hidden};
      else if (name == sr_names::relative_weight(l)) shape = {d.relative, 2};
      else if (name == sr_names::relative_bias(l)) shape = {1, d.relative};
      else if (name == sr_names::attention(l)) shape = {1, joint};
      else if (name == sr_names::gate_weight(l)) shape = {d.hidden, joint};
      else shape = {1, d.hidden};
      out.push_back({name, shape});
    }
  }
  return out;
}

void SrLstmModel::check_shapes() const {
  for (const auto& [name, shape] : required_shapes()) {
    if (!params.contains(name)) throw ModelShapeError("missing parameter " + name);
    const Tensor2& v = params.value(name);
    if (v.rows() != shape.first || v.cols() != shape.second) {
      throw ModelShapeError("parameter " + name + " has shape " + shape_string(v) + ", expected " +
                            std::to_string(shape.first) + "x" + std::to_string(shape.second));
    }
  }
}

SequenceOutput run_sequence(Tape& tape, SrLstmModel& model, const PedestrianWindow& w,
                            const SequenceOptions& options) {
  const auto& cfg = model.config.refinement;
  const std::size_t peds = w.peds();
  const std::size_t steps = w.steps;
  const std::size_t hidden = model.config.dims.hidden;
  const bool multi = options.mode == TeachingMode::multi_step;

  LstmVars lstm = LstmVars::bind(tape, model.params);
  std::vector<SrVars> layers;
  for (std::size_t l = 0; l < cfg.iterations; ++l)
    layers.push_back(SrVars::bind(tape, model.params, l, cfg));

  SequenceOutput out;
  out.rows.resize(steps);
  out.predictions.resize(steps);
  if (options.keep_hidden) out.hidden.resize(steps);
  out.predicted_model.assign(steps * peds, Point{});
  out.predicted_scene.assign(steps * peds, Point{});
  out.input_scene.assign(steps * peds, Point{});

  Var h_all = tape.constant(Tensor2(peds, hidden));
  Var c_all = tape.constant(Tensor2(peds, hidden));

  for (std::size_t t = 0; t + 1 < steps; ++t) {
    auto& rows = out.rows[t];
    for (std::size_t p = 0; p < peds; ++p) {
      const bool active = multi ? (w.is_target(p) || (w.is_present(t, p) && t < options.observed))
                                : w.is_present(t, p);
      if (active) rows.push_back(p);
    }
    if (rows.empty()) continue;

    Tensor2 inputs(rows.size(), 2);
    std::vector<Point> positions(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t p = rows[r];
      const bool own = multi && t >= options.observed && w.is_target(p);
      const Point model_xy = own ? out.predicted_model[w.at(t, p)] : w.model_xy[w.at(t, p)];
      const Point scene_xy = own ? out.predicted_scene[w.at(t, p)] : w.scene_xy[w.at(t, p)];
      inputs(r, 0) = model_xy.x;
      inputs(r, 1) = model_xy.y;
      positions[r] = scene_xy;
      out.input_scene[w.at(t, p)] = scene_xy;
    }

    Var e = embed_position(tape, lstm, tape.constant(std::move(inputs)), cfg.embed_activation);
    Var h_prev = tape.gather_rows(h_all, rows);
    Var c_prev = tape.gather_rows(c_all, rows);
    LstmStepVars step = lstm_step(tape, lstm, e, h_prev, c_prev);

    RefinedVars refined{step.h, step.c};
    if (cfg.iterations > 0 && rows.size() > 1) {
      NeighborGraph graph = build_neighborhood(positions, std::vector<bool>(rows.size(), true),
                                               cfg.neighborhood_size, cfg.shape);
      PairList pairs = PairList::from_graph(graph, positions);
      const std::size_t first_record = options.trace ? options.trace->records.size() : 0;
      if (options.trace) options.trace->step = t;
      refined = refine(tape, layers, cfg, pairs, step.h, step.c, step.output_gate, h_prev,
                       options.trace);
      if (options.trace) {
        for (std::size_t k = first_record; k < options.trace->records.size(); ++k) {
          auto& rec = options.trace->records[k];
          rec.target = rows[rec.target];
          rec.neighbor = rows[rec.neighbor];
        }
      }
    }

    h_all = tape.scatter_rows(h_all, rows, refined.h);
    c_all = tape.scatter_rows(c_all, rows, refined.c);
    Var pred = project_output(tape, lstm, refined.h);
    out.predictions[t] = pred;
    if (options.keep_hidden) out.hidden[t] = tape.value(refined.h);

    const Tensor2& pv = tape.value(pred);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t p = rows[r];
      const Point model_xy{pv(r, 0), pv(r, 1)};
      out.predicted_model[w.at(t + 1, p)] = model_xy;
      out.predicted_scene[w.at(t + 1, p)] = to_scene(w, p, model_xy, positions[r]);
    }
  }
  return out;
}

LossTerm sequence_loss(Tape& tape, const PedestrianWindow& w, const SequenceOutput& out,
                       std::size_t first_step) {
  LossTerm loss;
  for (std::size_t t = 0; t + 1 < w.steps; ++t) {
    if (t + 1 < first_step || !out.predictions[t].valid()) continue;
    const auto& rows = out.rows[t];
    std::vector<std::size_t> picked;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (w.is_target(rows[r]) && w.is_present(t + 1, rows[r])) picked.push_back(r);
    }
    if (picked.empty()) continue;
    Tensor2 truth(picked.size(), 2);
    for (std::size_t k = 0; k < picked.size(); ++k) {
      const Point gt = w.model_xy[w.at(t + 1, rows[picked[k]])];
      truth(k, 0) = gt.x;
      truth(k, 1) = gt.y;
    }
    Var term = tape.squared_error_sum(tape.gather_rows(out.predictions[t], picked), truth);
    loss.sum = loss.sum.valid() ? tape.add(loss.sum, term) : term;
    loss.count += picked.size();
  }
  return loss;
}

}  // namespace srlstm
