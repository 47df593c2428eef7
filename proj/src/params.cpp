#include "srlstm/params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace srlstm {

Tensor2& ParamStore::add(const std::string& name, Tensor2 value, bool trainable) {
  if (contains(name)) throw std::invalid_argument("ParamStore: duplicate parameter " + name);
  require_finite(value, name);
  ParamEntry entry;
  entry.grad = Tensor2(value.rows(), value.cols());
  entry.value = std::move(value);
  entry.trainable = trainable;
  return entries_.emplace(name, std::move(entry)).first->second.value;
}

ParamEntry& ParamStore::at(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("ParamStore: no parameter " + name);
  return it->second;
}

const ParamEntry& ParamStore::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("ParamStore: no parameter " + name);
  return it->second;
}

void ParamStore::freeze_all() {
  for (auto& [_, e] : entries_) e.trainable = false;
}

void ParamStore::zero_grad() {
  for (auto& [_, e] : entries_) e.grad.fill(0.0);
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += e.value.size();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

Tensor2 uniform_tensor(std::size_t rows, std::size_t cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor2 t(rows, cols);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

void adam_step(ParamStore& store, AdamState& state) {
  for (const auto& [name, e] : store.entries()) {
    if (e.trainable && !e.grad.all_finite()) {
      throw NumericError("adam_step: non-finite gradient in " + name);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  for (auto& [name, e] : store.entries()) {
    if (!e.trainable) {
      e.grad.fill(0.0);
      continue;
    }
    auto [mit, m_new] = state.first_moment.try_emplace(name, e.value.rows(), e.value.cols());
    auto [vit, v_new] = state.second_moment.try_emplace(name, e.value.rows(), e.value.cols());
    auto& m = mit->second.data();
    auto& v = vit->second.data();
    auto& w = e.value.data();
    const auto& g = e.grad.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      w[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
    e.grad.fill(0.0);
  }
}

double clip_grad_norm(ParamStore& store, double max_norm) {
  double sq = 0.0;
  for (const auto& [_, e] : store.entries()) {
    if (!e.trainable) continue;
    for (double g : e.grad.data()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [_, e] : store.entries()) {
      if (!e.trainable) continue;
      for (double& g : e.grad.data()) g *= scale;
    }
  }
  return norm;
}

GradCheckResult finite_diff_check(const std::function<double(const ParamStore&)>& loss,
                                  ParamStore& store, const GradCheckOptions& options) {
  if (options.eps <= 0.0) throw std::invalid_argument("finite_diff_check: eps must be positive");
  std::mt19937_64 rng(options.seed);
  GradCheckResult result;

  for (auto& [name, e] : store.entries()) {
    if (!e.trainable) continue;
    const std::size_t n = e.value.size();
    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (options.samples_per_tensor != 0 && options.samples_per_tensor < n) {
      std::shuffle(indices.begin(), indices.end(), rng);
      indices.resize(options.samples_per_tensor);
    }
    for (std::size_t idx : indices) {
      const double original = e.value[idx];
      e.value[idx] = original + options.eps;
      const double plus = loss(store);
      e.value[idx] = original - options.eps;
      const double minus = loss(store);
      e.value[idx] = original;

      const double numeric = (plus - minus) / (2.0 * options.eps);
      const double analytic = e.grad[idx];
      if (std::max(std::abs(analytic), std::abs(numeric)) < options.noise_floor) {
        ++result.skipped;
        continue;
      }
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      double rel = std::abs(analytic - numeric) / denom;
      if (!std::isfinite(rel)) rel = std::numeric_limits<double>::infinity();
      ++result.checked;
      if (result.worst_parameter.empty() || rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = name;
        result.worst_index = idx;
        result.analytic = analytic;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace srlstm
