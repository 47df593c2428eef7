#include "srlstm/introspection.hpp"

#include <algorithm>
#include <ostream>
#include <tuple>

#include "srlstm/training.hpp"

namespace srlstm {

namespace {

struct Candidate {
  double value;
  std::size_t window, step, layer, i, j;

  bool operator<(const Candidate& o) const {
    if (value != o.value) return value > o.value;
    return std::tie(window, step, layer, i, j) < std::tie(o.window, o.step, o.layer, o.i, o.j);
  }
};

// Keeps the best `k` once the list grows past 4k.
void trim(std::vector<Candidate>& list, std::size_t k, bool force = false) {
  if (list.size() <= k || (!force && list.size() < 4 * k + 16)) {
    if (force) std::sort(list.begin(), list.end());
    return;
  }
  std::nth_element(list.begin(), list.begin() + std::ptrdiff_t(k), list.end());
  list.resize(k);
  if (force) std::sort(list.begin(), list.end());
}

std::vector<Point> segment(const PedestrianWindow& w, std::size_t p, std::size_t step) {
  std::vector<Point> out;
  const std::size_t first = step + 1 >= kObserved ? step + 1 - kObserved : 0;
  for (std::size_t t = first; t <= step && t < w.steps; ++t) {
    if (w.is_present(t, p)) out.push_back(w.scene_xy[w.at(t, p)]);
  }
  return out;
}

void write_points(std::ostream& out, const std::vector<Point>& pts) {
  for (std::size_t k = 0; k < pts.size(); ++k) out << (k ? ";" : "") << pts[k].x << ' ' << pts[k].y;
}

}  // namespace

Introspection introspect(SrLstmModel& model, const std::vector<PedestrianWindow>& windows,
                         std::size_t top_k) {
  const std::size_t hidden = model.config.dims.hidden;
  std::vector<std::vector<Candidate>> neuron_lists(hidden), gate_lists(hidden);
  Introspection result;

  for (std::size_t wi = 0; wi < windows.size(); ++wi) {
    const auto& w = windows[wi];
    RefinementTrace trace;
    std::vector<Tensor2> states;
    RolloutOptions opts;
    opts.trace = &trace;
    opts.hidden = &states;
    rollout(model, w, opts);

    // Hidden rows follow the active pedestrians of each step in index order,
    // the same order run_sequence uses.
    for (std::size_t t = 0; t < states.size(); ++t) {
      const Tensor2& h = states[t];
      if (h.rows() == 0) continue;
      std::vector<std::size_t> rows;
      for (std::size_t p = 0; p < w.peds(); ++p) {
        const bool active = w.is_target(p) || (w.is_present(t, p) && t < kObserved);
        if (active) rows.push_back(p);
      }
      for (std::size_t r = 0; r < h.rows(); ++r) {
        for (std::size_t n = 0; n < hidden; ++n) {
          neuron_lists[n].push_back({h(r, n), wi, t, 0, rows[r], 0});
        }
      }
    }
    for (std::size_t n = 0; n < hidden; ++n) trim(neuron_lists[n], top_k);

    for (const auto& rec : trace.records) {
      result.attention.push_back({wi, rec.step, w.frame(rec.step), rec.iteration, w.ped_ids[rec.target],
                                  w.ped_ids[rec.neighbor], rec.weight});
      for (std::size_t m = 0; m < rec.gate.size(); ++m) {
        gate_lists[m].push_back({rec.gate[m], wi, rec.step, rec.iteration, rec.target, rec.neighbor});
      }
    }
    for (auto& list : gate_lists) trim(list, top_k);
  }

  for (std::size_t n = 0; n < hidden; ++n) {
    trim(neuron_lists[n], top_k, true);
    for (std::size_t k = 0; k < neuron_lists[n].size(); ++k) {
      const auto& c = neuron_lists[n][k];
      const auto& w = windows[c.window];
      result.neurons.push_back({n, k + 1, c.value, c.window, c.step, w.frame(c.step), w.ped_ids[c.i],
                                segment(w, c.i, c.step)});
    }
  }
  for (std::size_t m = 0; m < hidden; ++m) {
    trim(gate_lists[m], top_k, true);
    for (std::size_t k = 0; k < gate_lists[m].size(); ++k) {
      const auto& c = gate_lists[m][k];
      const auto& w = windows[c.window];
      result.gates.push_back({m, k + 1, c.value, c.window, c.step, w.frame(c.step), c.layer, w.ped_ids[c.i],
                              w.ped_ids[c.j], segment(w, c.i, c.step), segment(w, c.j, c.step)});
    }
  }
  return result;
}

void write_neurons_csv(std::ostream& out, const std::vector<NeuronHit>& hits) {
  const auto old = out.precision(17);
  out << "neuron,rank,activation,window,step,frame,ped,segment\n";
  for (const auto& h : hits) {
    out << h.neuron << ',' << h.rank << ',' << h.activation << ',' << h.window << ',' << h.step << ','
        << h.frame << ',' << h.ped << ',';
    write_points(out, h.segment);
    out << '\n';
  }
  out.precision(old);
}

void write_gates_csv(std::ostream& out, const std::vector<GateHit>& hits) {
  const auto old = out.precision(17);
  out << "element,rank,gate,window,step,frame,layer,ped_i,ped_j,snippet_i,snippet_j\n";
  for (const auto& h : hits) {
    out << h.element << ',' << h.rank << ',' << h.value << ',' << h.window << ',' << h.step << ','
        << h.frame << ',' << h.layer << ',' << h.ped_i << ',' << h.ped_j << ',';
    write_points(out, h.snippet_i);
    out << ',';
    write_points(out, h.snippet_j);
    out << '\n';
  }
  out.precision(old);
}

void write_attention_csv(std::ostream& out, const std::vector<AttentionRow>& rows) {
  const auto old = out.precision(17);
  out << "window,step,frame,layer,ped_i,ped_j,alpha\n";
  for (const auto& r : rows) {
    out << r.window << ',' << r.step << ',' << r.frame << ',' << r.layer << ',' << r.ped_i << ','
        << r.ped_j << ',' << r.weight << '\n';
  }
  out.precision(old);
}

}  // namespace srlstm
