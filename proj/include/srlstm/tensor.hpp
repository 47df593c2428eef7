#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace srlstm {

class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles. Vectors are 1×n or n×1 tensors.
class Tensor2 {
public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data);

  /// Nested initializer, one inner list per row.
  static Tensor2 from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor2 row_vector(std::span<const double> values);
  static Tensor2 column_vector(std::span<const double> values);
  static Tensor2 identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor2& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;
  void fill(double v);
  Tensor2 transposed() const;

  friend bool operator==(const Tensor2& a, const Tensor2& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::string shape_string(const Tensor2& t);

/// Throws NumericError naming `what` if any entry is NaN or infinite.
void require_finite(const Tensor2& t, const std::string& what);

// Products. Each output entry accumulates over the inner index in ascending
// order, so a row's result never depends on the other rows of the operand.
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
/// a · bᵀ
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);
/// aᵀ · b
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);

enum class Elementwise { sigmoid, tanh, relu, hadamard, add };

double sigmoid(double x);

Tensor2 elementwise(Elementwise op, const Tensor2& a);
Tensor2 elementwise(Elementwise op, const Tensor2& a, const Tensor2& b);

class EmptySupportError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Softmax restricted to entries whose mask is true. Masked entries are
/// exactly 0. Throws EmptySupportError when no entry is selected.
std::vector<double> softmax_masked(std::span<const double> scores, const std::vector<bool>& mask);

}  // namespace srlstm
