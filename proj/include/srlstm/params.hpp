#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "srlstm/tensor.hpp"

namespace srlstm {

struct ParamEntry {
  Tensor2 value;
  Tensor2 grad;
  bool trainable = true;
};

/// Named parameters with gradient buffers. Iteration order is by name, which
/// fixes the order of every reduction over parameters.
class ParamStore {
public:
  /// Registers a new entry; throws if the name is taken.
  Tensor2& add(const std::string& name, Tensor2 value, bool trainable = true);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  ParamEntry& at(const std::string& name);
  const ParamEntry& at(const std::string& name) const;
  Tensor2& value(const std::string& name) { return at(name).value; }
  const Tensor2& value(const std::string& name) const { return at(name).value; }
  Tensor2& grad(const std::string& name) { return at(name).grad; }

  void set_trainable(const std::string& name, bool trainable) { at(name).trainable = trainable; }
  void freeze_all();
  void zero_grad();

  std::size_t size() const { return entries_.size(); }
  std::size_t parameter_count() const;
  std::vector<std::string> names() const;

  std::map<std::string, ParamEntry>& entries() { return entries_; }
  const std::map<std::string, ParamEntry>& entries() const { return entries_; }

private:
  std::map<std::string, ParamEntry> entries_;
};

/// Fills with uniform values in [-bound, bound].
Tensor2 uniform_tensor(std::size_t rows, std::size_t cols, double bound, std::mt19937_64& rng);

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::map<std::string, Tensor2> first_moment;
  std::map<std::string, Tensor2> second_moment;
};

/// One bias-corrected Adam update over trainable entries, then zeroes every
/// gradient. Throws NumericError naming the parameter if a gradient is not finite.
void adam_step(ParamStore& store, AdamState& state);

/// Rescales trainable gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(ParamStore& store, double max_norm);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

struct GradCheckOptions {
  double eps = 1e-5;
  /// Entries sampled per parameter tensor; 0 checks every entry.
  std::size_t samples_per_tensor = 6;
  std::uint64_t seed = 7;
  /// Entries whose analytic and numeric values are both below this are left
  /// out: rounding in the loss swamps them. 0 keeps every entry.
  double noise_floor = 0.0;
};

/// Compares the gradients already stored in `store` against central
/// differences of `loss`. Relative error per entry is
/// |analytic - fd| / max(|analytic|, |fd|, 1e-8); the maximum is reported.
/// The store's values are restored before returning.
GradCheckResult finite_diff_check(const std::function<double(const ParamStore&)>& loss,
                                  ParamStore& store, const GradCheckOptions& options = {});

}  // namespace srlstm
