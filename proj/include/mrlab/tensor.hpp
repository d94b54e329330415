#pragma once

// Dense rank-2 tensors of doubles with a dynamic reverse-mode tape.
//
// Tensors are immutable values. Operations on tensors that live on a tape are
// recorded on that tape; operations on untracked tensors just compute values.
// A tape is meant to be rebuilt for every forward pass.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mrlab/errors.hpp"

namespace mrlab {

namespace detail {
struct TapeState;
struct TensorAccess;
}  // namespace detail

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(Shape s);

class Tensor {
 public:
  Tensor();
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor ones(std::size_t rows, std::size_t cols);
  static Tensor full(std::size_t rows, std::size_t cols, double value);
  static Tensor scalar(double value);
  /// 1×n row vector.
  static Tensor row(std::vector<double> values);
  /// n×1 column vector.
  static Tensor column(std::vector<double> values);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Shape shape() const { return {rows_, cols_}; }
  std::size_t size() const { return rows_ * cols_; }
  bool empty() const { return size() == 0; }
  bool is_scalar() const { return rows_ == 1 && cols_ == 1; }

  std::span<const double> values() const;
  std::vector<double> to_vector() const;
  double operator()(std::size_t r, std::size_t c) const;
  double operator[](std::size_t flat) const;
  /// Value of a 1×1 tensor.
  double item() const;

  /// True when the tensor participates in a tape.
  bool tracked() const { return tape_ != nullptr; }

 private:
  friend struct detail::TensorAccess;

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::shared_ptr<const std::vector<double>> data_;
  std::shared_ptr<detail::TapeState> tape_;
  std::size_t node_ = 0;
};

/// Gradients of a scalar loss with respect to the leaves watched on a tape.
class Gradients {
 public:
  /// Gradient for a tensor returned by Tape::watch. Unreachable leaves get zeros.
  const Tensor& of(const Tensor& watched) const;
  std::vector<Tensor> of(std::span<const Tensor> watched) const;

 private:
  friend class Tape;
  std::shared_ptr<detail::TapeState> tape_;
  std::unordered_map<std::size_t, Tensor> by_node_;
};

class Tape {
 public:
  Tape();

  /// Registers a parameter leaf. The returned tensor shares values with `value`.
  Tensor watch(const Tensor& value);
  std::vector<Tensor> watch(std::span<const Tensor> values);

  /// Reverse sweep from a 1×1 loss. A tape can be swept once.
  Gradients backward(const Tensor& loss);

  /// Number of recorded nodes (leaves included).
  std::size_t size() const;

 private:
  std::shared_ptr<detail::TapeState> state_;
};

// ---------------------------------------------------------------------------
// Elementwise operations

enum class UnaryKind { neg, square, abs, log, exp, tanh, sigmoid, leaky_relu };

Tensor unary(UnaryKind kind, const Tensor& a, double slope = 0.2);
Tensor neg(const Tensor& a);
Tensor square(const Tensor& a);
/// d|a|/da is taken as 0 at a == 0.
Tensor abs(const Tensor& a);
Tensor log(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);

/// Elementwise map with a caller-supplied derivative. Used for custom kernels
/// and test fixtures.
Tensor map_unary(const Tensor& a, std::function<double(double)> value,
                 std::function<double(double)> derivative);

/// Clamps into [lo, hi]; gradient passes only where the input is strictly inside.
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor clamp_min(const Tensor& a, double lo);

enum class BinaryKind { add, sub, mul, div };

/// Shapes must match, or one operand must be 1×1 (broadcast).
Tensor binary(BinaryKind kind, const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator/(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a);
Tensor operator+(const Tensor& a, double b);
Tensor operator+(double a, const Tensor& b);
Tensor operator-(const Tensor& a, double b);
Tensor operator-(double a, const Tensor& b);
Tensor operator*(const Tensor& a, double b);
Tensor operator*(double a, const Tensor& b);
Tensor operator/(const Tensor& a, double b);
Tensor operator/(double a, const Tensor& b);

/// Sum of any number of equally shaped tensors.
Tensor sum_of(std::span<const Tensor> terms);

/// Per-entry median across equally shaped tensors. Even counts average the two
/// middle order statistics and split the gradient between them.
Tensor median_of(std::span<const Tensor> terms);

// ---------------------------------------------------------------------------
// Linear algebra and structure

Tensor matmul(const Tensor& a, const Tensor& b);
/// x·w + b with b a 1×n row added to every row.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

enum class ReduceKind { mean, sum };
Tensor reduce(ReduceKind kind, const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum(const Tensor& a);

enum class Axis { rows, cols };
Tensor concat(const Tensor& a, const Tensor& b, Axis axis);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count);
/// Stacks `times` copies of `a` vertically.
Tensor tile_rows(const Tensor& a, std::size_t times);

/// Same values, detached from any tape.
Tensor gradient_stop(const Tensor& a);

// ---------------------------------------------------------------------------
// Verification

using LossFn = std::function<Tensor(std::span<const Tensor>)>;

/// Compares tape gradients of `loss_fn` at `params` with central differences of
/// step `h`. Returns max over coordinates of |g_tape − g_fd| / max(1e−8, |g_tape| + |g_fd|).
/// Values passed through gradient_stop are held at their base-point values while
/// differencing, since the tape treats them as constants.
double finite_diff_check(const LossFn& loss_fn, std::span<const Tensor> params, double h);

}  // namespace mrlab
