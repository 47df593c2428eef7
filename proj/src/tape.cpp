#include "srlstm/tape.hpp"

#include <algorithm>
#include <cmath>

namespace srlstm {

Var Tape::push(Tensor2 value, bool needs_grad, std::function<void(Tape&, const Node&)> backward) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = record_ && needs_grad;
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Tensor2& Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.size() != n.value.size()) n.grad = Tensor2(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(Var v, const Tensor2& g) {
  if (!needs(v)) return;
  Tensor2& dst = grad_buffer(v);
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

Var Tape::constant(Tensor2 value) { return push(std::move(value), false, nullptr); }

Var Tape::parameter(ParamStore& store, const std::string& name) {
  ParamEntry& entry = store.at(name);
  Var v = push(entry.value, entry.trainable, nullptr);
  if (needs(v)) bindings_.emplace_back(v.id, &entry);
  return v;
}

Var Tape::linear(Var x, Var weight, Var bias) {
  const Tensor2& xv = value(x);
  const Tensor2& wv = value(weight);
  Tensor2 out = matmul_nt(xv, wv);
  if (bias.valid()) {
    const Tensor2& bv = value(bias);
    if (bv.rows() != 1 || bv.cols() != out.cols()) {
      throw DimensionError("linear: bias " + shape_string(bv) + " for output " + shape_string(out));
    }
    for (std::size_t r = 0; r < out.rows(); ++r)
      for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv(0, c);
  }
  const bool ng = needs(x) || needs(weight) || (bias.valid() && needs(bias));
  return push(std::move(out), ng, [x, weight, bias](Tape& t, const Node& self) {
    const Tensor2& dy = self.grad;
    if (t.needs(x)) t.accumulate(x, srlstm::matmul(dy, t.value(weight)));
    if (t.needs(weight)) t.accumulate(weight, matmul_tn(dy, t.value(x)));
    if (bias.valid() && t.needs(bias)) {
      Tensor2 db(1, dy.cols());
      for (std::size_t r = 0; r < dy.rows(); ++r)
        for (std::size_t c = 0; c < dy.cols(); ++c) db(0, c) += dy(r, c);
      t.accumulate(bias, db);
    }
  });
}

Var Tape::matmul(Var a, Var b) {
  Tensor2 out = srlstm::matmul(value(a), value(b));
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, const Node& self) {
    if (t.needs(a)) t.accumulate(a, matmul_nt(self.grad, t.value(b)));
    if (t.needs(b)) t.accumulate(b, matmul_tn(t.value(a), self.grad));
  });
}

Var Tape::add(Var a, Var b) {
  Tensor2 out = elementwise(Elementwise::add, value(a), value(b));
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, const Node& self) {
    t.accumulate(a, self.grad);
    t.accumulate(b, self.grad);
  });
}

Var Tape::hadamard(Var a, Var b) {
  Tensor2 out = elementwise(Elementwise::hadamard, value(a), value(b));
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, const Node& self) {
    if (t.needs(a)) t.accumulate(a, elementwise(Elementwise::hadamard, self.grad, t.value(b)));
    if (t.needs(b)) t.accumulate(b, elementwise(Elementwise::hadamard, self.grad, t.value(a)));
  });
}

Var Tape::scale(Var a, double factor) {
  Tensor2 out = value(a);
  for (double& v : out.data()) v *= factor;
  return push(std::move(out), needs(a), [a, factor](Tape& t, const Node& self) {
    Tensor2 g = self.grad;
    for (double& v : g.data()) v *= factor;
    t.accumulate(a, g);
  });
}

Var Tape::sigmoid(Var a) {
  Tensor2 out = elementwise(Elementwise::sigmoid, value(a));
  return push(std::move(out), needs(a), [a](Tape& t, const Node& self) {
    Tensor2 g(self.value.rows(), self.value.cols());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = self.value[i];
      g[i] = self.grad[i] * y * (1.0 - y);
    }
    t.accumulate(a, g);
  });
}

Var Tape::tanh(Var a) {
  Tensor2 out = elementwise(Elementwise::tanh, value(a));
  return push(std::move(out), needs(a), [a](Tape& t, const Node& self) {
    Tensor2 g(self.value.rows(), self.value.cols());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = self.value[i];
      g[i] = self.grad[i] * (1.0 - y * y);
    }
    t.accumulate(a, g);
  });
}

Var Tape::relu(Var a) {
  Tensor2 out = elementwise(Elementwise::relu, value(a));
  return push(std::move(out), needs(a), [a](Tape& t, const Node& self) {
    Tensor2 g(self.value.rows(), self.value.cols());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = self.value[i] > 0.0 ? self.grad[i] : 0.0;
    t.accumulate(a, g);
  });
}

Var Tape::activate(Var a, Activation kind) {
  return kind == Activation::relu ? relu(a) : a;
}

Var Tape::gather_rows(Var a, const std::vector<std::size_t>& index) {
  const Tensor2& av = value(a);
  Tensor2 out(index.size(), av.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= av.rows()) throw DimensionError("gather_rows: index out of range");
    std::copy(av.row(index[r]).begin(), av.row(index[r]).end(), out.row(r).begin());
  }
  return push(std::move(out), needs(a), [a, index](Tape& t, const Node& self) {
    Tensor2& da = t.grad_buffer(a);
    for (std::size_t r = 0; r < index.size(); ++r) {
      auto src = self.grad.row(r);
      auto dst = da.row(index[r]);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

Var Tape::scatter_rows(Var base, const std::vector<std::size_t>& index, Var rows) {
  Tensor2 out = value(base);
  const Tensor2& rv = value(rows);
  if (rv.rows() != index.size() || rv.cols() != out.cols()) {
    throw DimensionError("scatter_rows: " + shape_string(rv) + " into " + shape_string(out));
  }
  for (std::size_t r = 0; r < index.size(); ++r) {
    std::copy(rv.row(r).begin(), rv.row(r).end(), out.row(index[r]).begin());
  }
  return push(std::move(out), needs(base) || needs(rows),
              [base, index, rows](Tape& t, const Node& self) {
                if (t.needs(base)) {
                  Tensor2 g = self.grad;
                  for (std::size_t r : index) std::fill(g.row(r).begin(), g.row(r).end(), 0.0);
                  t.accumulate(base, g);
                }
                if (t.needs(rows)) {
                  Tensor2& dr = t.grad_buffer(rows);
                  for (std::size_t r = 0; r < index.size(); ++r) {
                    auto src = self.grad.row(index[r]);
                    auto dst = dr.row(r);
                    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
                  }
                }
              });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  const std::size_t n = value(parts.front()).rows();
  std::size_t width = 0;
  bool ng = false;
  for (Var p : parts) {
    if (value(p).rows() != n) throw DimensionError("concat_cols: row count mismatch");
    width += value(p).cols();
    ng = ng || needs(p);
  }
  Tensor2 out(n, width);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor2& pv = value(p);
    for (std::size_t r = 0; r < n; ++r)
      std::copy(pv.row(r).begin(), pv.row(r).end(), out.row(r).begin() + offset);
    offset += pv.cols();
  }
  return push(std::move(out), ng, [parts](Tape& t, const Node& self) {
    std::size_t off = 0;
    for (Var p : parts) {
      const std::size_t w = t.value(p).cols();
      if (t.needs(p)) {
        Tensor2& dp = t.grad_buffer(p);
        for (std::size_t r = 0; r < dp.rows(); ++r)
          for (std::size_t c = 0; c < w; ++c) dp(r, c) += self.grad(r, off + c);
      }
      off += w;
    }
  });
}

Var Tape::segment_sum(Var a, const std::vector<std::size_t>& segment, std::size_t segments) {
  const Tensor2& av = value(a);
  if (segment.size() != av.rows()) throw DimensionError("segment_sum: segment ids per row required");
  Tensor2 out(segments, av.cols());
  for (std::size_t r = 0; r < segment.size(); ++r) {
    auto src = av.row(r);
    auto dst = out.row(segment[r]);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
  }
  return push(std::move(out), needs(a), [a, segment](Tape& t, const Node& self) {
    Tensor2& da = t.grad_buffer(a);
    for (std::size_t r = 0; r < segment.size(); ++r) {
      auto src = self.grad.row(segment[r]);
      auto dst = da.row(r);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

Var Tape::segment_softmax(Var scores, const std::vector<std::size_t>& segment,
                          std::size_t segments) {
  const Tensor2& sv = value(scores);
  if (sv.cols() != 1 || segment.size() != sv.rows()) {
    throw DimensionError("segment_softmax: expected a column of scores with one segment id each");
  }
  std::vector<double> top(segments, -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < segment.size(); ++r) top[segment[r]] = std::max(top[segment[r]], sv[r]);
  Tensor2 out(sv.rows(), 1);
  std::vector<double> total(segments, 0.0);
  for (std::size_t r = 0; r < segment.size(); ++r) {
    out[r] = std::exp(sv[r] - top[segment[r]]);
    total[segment[r]] += out[r];
  }
  for (std::size_t r = 0; r < segment.size(); ++r) out[r] /= total[segment[r]];

  return push(std::move(out), needs(scores),
              [scores, segment, segments](Tape& t, const Node& self) {
                std::vector<double> dot(segments, 0.0);
                for (std::size_t r = 0; r < segment.size(); ++r)
                  dot[segment[r]] += self.value[r] * self.grad[r];
                Tensor2 g(self.value.rows(), 1);
                for (std::size_t r = 0; r < segment.size(); ++r)
                  g[r] = self.value[r] * (self.grad[r] - dot[segment[r]]);
                t.accumulate(scores, g);
              });
}

Var Tape::scale_rows(Var a, Var s) {
  const Tensor2& av = value(a);
  const Tensor2& sv = value(s);
  if (sv.cols() != 1 || sv.rows() != av.rows()) {
    throw DimensionError("scale_rows: " + shape_string(sv) + " for " + shape_string(av));
  }
  Tensor2 out(av.rows(), av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) = sv[r] * av(r, c);
  return push(std::move(out), needs(a) || needs(s), [a, s](Tape& t, const Node& self) {
    const Tensor2& av = t.value(a);
    const Tensor2& sv = t.value(s);
    if (t.needs(a)) {
      Tensor2 g(av.rows(), av.cols());
      for (std::size_t r = 0; r < av.rows(); ++r)
        for (std::size_t c = 0; c < av.cols(); ++c) g(r, c) = sv[r] * self.grad(r, c);
      t.accumulate(a, g);
    }
    if (t.needs(s)) {
      Tensor2 g(sv.rows(), 1);
      for (std::size_t r = 0; r < av.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < av.cols(); ++c) acc += self.grad(r, c) * av(r, c);
        g[r] = acc;
      }
      t.accumulate(s, g);
    }
  });
}

Var Tape::squared_error_sum(Var pred, const Tensor2& target) {
  const Tensor2& pv = value(pred);
  if (!pv.same_shape(target)) {
    throw DimensionError("squared_error_sum: " + shape_string(pv) + " vs " + shape_string(target));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double d = pv[i] - target[i];
    acc += d * d;
  }
  return push(Tensor2(1, 1, acc), needs(pred), [pred, target](Tape& t, const Node& self) {
    const Tensor2& pv = t.value(pred);
    Tensor2 g(pv.rows(), pv.cols());
    for (std::size_t i = 0; i < pv.size(); ++i) g[i] = 2.0 * (pv[i] - target[i]) * self.grad[0];
    t.accumulate(pred, g);
  });
}

void Tape::backward(Var root, double seed) {
  if (!record_) throw std::logic_error("Tape::backward on a non-recording tape");
  if (value(root).size() != 1) throw DimensionError("Tape::backward: root must be 1x1");
  if (!needs(root)) return;
  grad_buffer(root)[0] += seed;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, n);
  }
  for (auto [id, entry] : bindings_) {
    const Tensor2& g = nodes_[id].grad;
    if (g.size() == 0) continue;
    for (std::size_t k = 0; k < g.size(); ++k) entry->grad[k] += g[k];
  }
}

}  // namespace srlstm
