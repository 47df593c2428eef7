#include "srlstm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace srlstm {

Tensor2::Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Tensor2: data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows_) + "x" +
                         std::to_string(cols_));
  }
}

Tensor2 Tensor2::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("Tensor2::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return {r, c, std::move(data)};
}

Tensor2 Tensor2::row_vector(std::span<const double> values) {
  return {1, values.size(), std::vector<double>(values.begin(), values.end())};
}

Tensor2 Tensor2::column_vector(std::span<const double> values) {
  return {values.size(), 1, std::vector<double>(values.begin(), values.end())};
}

Tensor2 Tensor2::identity(std::size_t n) {
  Tensor2 t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

bool Tensor2::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor2::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor2 Tensor2::transposed() const {
  Tensor2 t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

std::string shape_string(const Tensor2& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

void require_finite(const Tensor2& t, const std::string& what) {
  if (!t.all_finite()) throw NumericError("non-finite value in " + what);
}

namespace {

// o[j] += s0*r0[j] + ... applied one term at a time, so every entry is
// accumulated in the same order as a plain triple loop over p.
inline void axpy4(double* o, const double* r0, const double* r1, const double* r2, const double* r3,
                  double s0, double s1, double s2, double s3, std::size_t m) {
  for (std::size_t j = 0; j < m; ++j) {
    double v = o[j];
    v += s0 * r0[j];
    v += s1 * r1[j];
    v += s2 * r2[j];
    v += s3 * r3[j];
    o[j] = v;
  }
}

inline void axpy1(double* o, const double* r, double s, std::size_t m) {
  for (std::size_t j = 0; j < m; ++j) o[j] += s * r[j];
}

}  // namespace

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + shape_string(a) + " x " + shape_string(b));
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Tensor2 out(n, m);
  const double* bd = b.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* o = out.data().data() + i * m;
    const double* ar = a.data().data() + i * k;
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
      axpy4(o, bd + p * m, bd + (p + 1) * m, bd + (p + 2) * m, bd + (p + 3) * m, ar[p], ar[p + 1], ar[p + 2],
            ar[p + 3], m);
    }
    for (; p < k; ++p) axpy1(o, bd + p * m, ar[p], m);
  }
  return out;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: " + shape_string(a) + " x " + shape_string(b) + "^T");
  }
  return matmul(a, b.transposed());
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: " + shape_string(a) + "^T x " + shape_string(b));
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Tensor2 out(k, m);
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* a0 = ad + i * k;
    const double* b0 = bd + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      axpy4(out.data().data() + p * m, b0, b0 + m, b0 + 2 * m, b0 + 3 * m, a0[p], a0[k + p], a0[2 * k + p],
            a0[3 * k + p], m);
    }
  }
  for (; i < n; ++i) {
    const double* ar = ad + i * k;
    const double* br = bd + i * m;
    for (std::size_t p = 0; p < k; ++p) axpy1(out.data().data() + p * m, br, ar[p], m);
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor2 elementwise(Elementwise op, const Tensor2& a) {
  Tensor2 out(a.rows(), a.cols());
  auto& o = out.data();
  const auto& x = a.data();
  switch (op) {
    case Elementwise::sigmoid:
      for (std::size_t i = 0; i < x.size(); ++i) o[i] = sigmoid(x[i]);
      break;
    case Elementwise::tanh:
      for (std::size_t i = 0; i < x.size(); ++i) o[i] = std::tanh(x[i]);
      break;
    case Elementwise::relu:
      for (std::size_t i = 0; i < x.size(); ++i) o[i] = x[i] > 0.0 ? x[i] : 0.0;
      break;
    default:
      throw std::invalid_argument("elementwise: binary op called with one operand");
  }
  return out;
}

Tensor2 elementwise(Elementwise op, const Tensor2& a, const Tensor2& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("elementwise: " + shape_string(a) + " vs " + shape_string(b));
  }
  Tensor2 out(a.rows(), a.cols());
  auto& o = out.data();
  const auto& x = a.data();
  const auto& y = b.data();
  switch (op) {
    case Elementwise::hadamard:
      for (std::size_t i = 0; i < x.size(); ++i) o[i] = x[i] * y[i];
      break;
    case Elementwise::add:
      for (std::size_t i = 0; i < x.size(); ++i) o[i] = x[i] + y[i];
      break;
    default:
      throw std::invalid_argument("elementwise: unary op called with two operands");
  }
  return out;
}

std::vector<double> softmax_masked(std::span<const double> scores, const std::vector<bool>& mask) {
  if (scores.size() != mask.size()) {
    throw DimensionError("softmax_masked: scores and mask differ in length");
  }
  double top = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!mask[i]) continue;
    if (!std::isfinite(scores[i])) throw NumericError("softmax_masked: non-finite score");
    top = std::max(top, scores[i]);
    any = true;
  }
  if (!any) throw EmptySupportError("softmax_masked: every entry is masked");

  std::vector<double> out(scores.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!mask[i]) continue;
    out[i] = std::exp(scores[i] - top);
    total += out[i];
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (mask[i]) out[i] /= total;
  }
  return out;
}

}  // namespace srlstm
