#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "srlstm/params.hpp"
#include "srlstm/tensor.hpp"

namespace srlstm {

/// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::size_t id = none;
  bool valid() const { return id != none; }
};

enum class Activation { relu, linear };

/// Eager reverse-mode recorder. Every op computes its value immediately and,
/// when any input needs a gradient, records a hand-written backward rule.
/// Rows are items (pedestrians or neighbor pairs), columns are features.
class Tape {
public:
  explicit Tape(bool record = true) : record_(record) {}

  Var constant(Tensor2 value);
  /// Leaf bound to a store entry; backward() adds its gradient into the entry
  /// when the entry is trainable.
  Var parameter(ParamStore& store, const std::string& name);

  const Tensor2& value(Var v) const { return nodes_[v.id].value; }
  std::size_t node_count() const { return nodes_.size(); }
  bool recording() const { return record_; }

  /// x·Wᵀ (+ b broadcast over rows). W is out×in, b is 1×out.
  Var linear(Var x, Var weight, Var bias = {});
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double factor);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var activate(Var a, Activation kind);

  /// out.row(r) = a.row(index[r])
  Var gather_rows(Var a, const std::vector<std::size_t>& index);
  /// Copy of base with base.row(index[r]) replaced by rows.row(r).
  Var scatter_rows(Var base, const std::vector<std::size_t>& index, Var rows);
  Var concat_cols(const std::vector<Var>& parts);
  /// out.row(s) = Σ_{r: segment[r]==s} a.row(r), summed in ascending r.
  Var segment_sum(Var a, const std::vector<std::size_t>& segment, std::size_t segments);
  /// Softmax of a column vector within each segment.
  Var segment_softmax(Var scores, const std::vector<std::size_t>& segment, std::size_t segments);
  /// out.row(r) = s(r,0) · a.row(r)
  Var scale_rows(Var a, Var s);
  /// Σ ‖pred.row(r) - target.row(r)‖² as a 1×1 value; target is not differentiated.
  Var squared_error_sum(Var pred, const Tensor2& target);

  /// Seeds d(root)/d(root) = seed for a 1×1 root and propagates to parameters.
  void backward(Var root, double seed = 1.0);

private:
  struct Node {
    Tensor2 value;
    Tensor2 grad;
    bool needs_grad = false;
    std::function<void(Tape&, const Node&)> backward;
  };

  Var push(Tensor2 value, bool needs_grad, std::function<void(Tape&, const Node&)> backward);
  bool needs(Var v) const { return record_ && nodes_[v.id].needs_grad; }
  void accumulate(Var v, const Tensor2& g);
  Tensor2& grad_buffer(Var v);

  bool record_;
  std::vector<Node> nodes_;
  std::vector<std::pair<std::size_t, ParamEntry*>> bindings_;
};

}  // namespace srlstm
