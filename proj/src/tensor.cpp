#include "mrlab/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

namespace mrlab {

namespace detail {

constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

using BackwardFn = std::function<void(std::span<const double>, TapeState&)>;

struct Node {
  Shape shape;
  BackwardFn backward;  // empty for leaves
};

struct TapeState {
  std::vector<Node> nodes;
  std::vector<std::size_t> leaves;
  std::vector<std::vector<double>> grads;
  std::vector<char> touched;
  bool swept = false;

  std::size_t push(Shape shape, BackwardFn fn) {
    nodes.push_back({shape, std::move(fn)});
    return nodes.size() - 1;
  }

  // Gradient accumulator for a node; empty span for untracked inputs.
  std::span<double> grad(std::size_t id) {
    if (id == kNoNode) return {};
    if (!touched[id]) {
      grads[id].assign(nodes[id].shape.size(), 0.0);
      touched[id] = 1;
    }
    return grads[id];
  }
};

struct TensorAccess {
  static Tensor make(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor(rows, cols, std::move(values));
  }
  static const std::shared_ptr<const std::vector<double>>& data(const Tensor& t) { return t.data_; }
  static const std::shared_ptr<TapeState>& tape(const Tensor& t) { return t.tape_; }
  static std::size_t node(const Tensor& t) { return t.tape_ ? t.node_ : kNoNode; }
  static void attach(Tensor& t, std::shared_ptr<TapeState> tape, std::size_t node) {
    t.tape_ = std::move(tape);
    t.node_ = node;
  }
  static Tensor share(const Tensor& t) {
    Tensor out;
    out.rows_ = t.rows_;
    out.cols_ = t.cols_;
    out.data_ = t.data_;
    return out;
  }
};

}  // namespace detail

namespace {

using detail::BackwardFn;
using detail::kNoNode;
using detail::TapeState;
using detail::TensorAccess;

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap as_matrix(const Tensor& t) { return ConstMap(t.values().data(), t.rows(), t.cols()); }
ConstMap as_matrix(std::span<const double> v, Shape s) { return ConstMap(v.data(), s.rows, s.cols); }
MutMap as_mut(std::span<double> v, Shape s) { return MutMap(v.data(), s.rows, s.cols); }

// Aligned copies keep Eigen's reduction order independent of where the
// source buffers happen to live, so repeated runs agree bit for bit.
RowMajor owned(const Tensor& t) { return as_matrix(t); }
RowMajor owned(std::span<const double> v, Shape s) { return as_matrix(v, s); }

// Common tape of the inputs, or null when none is tracked.
std::shared_ptr<TapeState> common_tape(std::initializer_list<const Tensor*> inputs) {
  std::shared_ptr<TapeState> tape;
  for (const Tensor* t : inputs) {
    const auto& tt = TensorAccess::tape(*t);
    if (!tt) continue;
    if (tape && tape != tt) throw std::logic_error("operands recorded on different tapes");
    tape = tt;
  }
  return tape;
}

std::shared_ptr<TapeState> common_tape(std::span<const Tensor> inputs) {
  std::shared_ptr<TapeState> tape;
  for (const Tensor& t : inputs) {
    const auto& tt = TensorAccess::tape(t);
    if (!tt) continue;
    if (tape && tape != tt) throw std::logic_error("operands recorded on different tapes");
    tape = tt;
  }
  return tape;
}

Tensor record(std::shared_ptr<TapeState> tape, Tensor out, BackwardFn fn) {
  if (!tape) return out;
  if (tape->swept) throw std::logic_error("recording on a tape that was already swept");
  const std::size_t id = tape->push(out.shape(), std::move(fn));
  TensorAccess::attach(out, std::move(tape), id);
  return out;
}

using Data = std::shared_ptr<const std::vector<double>>;

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

std::string to_string(Shape s) {
  std::ostringstream os;
  os << s.rows << "x" << s.cols;
  return os.str();
}

Tensor::Tensor() : data_(std::make_shared<const std::vector<double>>()) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols) {
  if (values.size() != rows * cols) {
    throw ShapeError("tensor of shape " + to_string({rows, cols}) + " given " +
                     std::to_string(values.size()) + " values");
  }
  data_ = std::make_shared<const std::vector<double>>(std::move(values));
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) { return full(rows, cols, 0.0); }
Tensor Tensor::ones(std::size_t rows, std::size_t cols) { return full(rows, cols, 1.0); }
Tensor Tensor::full(std::size_t rows, std::size_t cols, double value) {
  return Tensor(rows, cols, std::vector<double>(rows * cols, value));
}
Tensor Tensor::scalar(double value) { return Tensor(1, 1, {value}); }
Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(1, n, std::move(values));
}
Tensor Tensor::column(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(n, 1, std::move(values));
}
Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<double> v;
  std::size_t cols = rows.size() ? rows.begin()->size() : 0;
  for (const auto& r : rows) {
    if (r.size() != cols) throw ShapeError("ragged rows in Tensor::from_rows");
    v.insert(v.end(), r.begin(), r.end());
  }
  return Tensor(rows.size(), cols, std::move(v));
}

std::span<const double> Tensor::values() const { return {data_->data(), data_->size()}; }
std::vector<double> Tensor::to_vector() const { return *data_; }
double Tensor::operator()(std::size_t r, std::size_t c) const {
  if (r >= rows_ || c >= cols_) throw ShapeError("index out of range");
  return (*data_)[r * cols_ + c];
}
double Tensor::operator[](std::size_t flat) const { return data_->at(flat); }
double Tensor::item() const {
  if (!is_scalar()) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return (*data_)[0];
}

// ---------------------------------------------------------------------------
// Tape

Tape::Tape() : state_(std::make_shared<TapeState>()) {}

Tensor Tape::watch(const Tensor& value) {
  if (state_->swept) throw std::logic_error("watch() on a tape that was already swept");
  Tensor out = TensorAccess::share(value);
  const std::size_t id = state_->push(value.shape(), {});
  state_->leaves.push_back(id);
  TensorAccess::attach(out, state_, id);
  return out;
}

std::vector<Tensor> Tape::watch(std::span<const Tensor> values) {
  std::vector<Tensor> out;
  out.reserve(values.size());
  for (const Tensor& v : values) out.push_back(watch(v));
  return out;
}

std::size_t Tape::size() const { return state_->nodes.size(); }

Gradients Tape::backward(const Tensor& loss) {
  if (!loss.is_scalar()) {
    throw ShapeError("backward() needs a 1x1 loss, got " + to_string(loss.shape()));
  }
  if (TensorAccess::tape(loss) != state_) throw std::logic_error("loss is not recorded on this tape");
  TapeState& st = *state_;
  if (st.swept) throw std::logic_error("backward() called twice on the same tape");
  st.swept = true;

  st.grads.assign(st.nodes.size(), {});
  st.touched.assign(st.nodes.size(), 0);
  const std::size_t root = TensorAccess::node(loss);
  st.grad(root)[0] = 1.0;
  for (std::size_t id = root + 1; id-- > 0;) {
    if (!st.touched[id] || !st.nodes[id].backward) continue;
    // st.grads is sized up front, so spans into it stay valid while parents accumulate.
    st.nodes[id].backward(st.grads[id], st);
  }

  Gradients out;
  out.tape_ = state_;
  for (std::size_t leaf : st.leaves) {
    const Shape s = st.nodes[leaf].shape;
    std::vector<double> g = st.touched[leaf] ? st.grads[leaf] : std::vector<double>(s.size(), 0.0);
    out.by_node_.emplace(leaf, Tensor(s.rows, s.cols, std::move(g)));
  }
  st.grads.clear();
  st.touched.clear();
  return out;
}

const Tensor& Gradients::of(const Tensor& watched) const {
  if (TensorAccess::tape(watched) != tape_) throw std::logic_error("tensor is not watched on this tape");
  auto it = by_node_.find(TensorAccess::node(watched));
  if (it == by_node_.end()) throw std::logic_error("gradient requested for a non-leaf tensor");
  return it->second;
}

std::vector<Tensor> Gradients::of(std::span<const Tensor> watched) const {
  std::vector<Tensor> out;
  out.reserve(watched.size());
  for (const Tensor& w : watched) out.push_back(of(w));
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise unary

namespace {

template <class F>
std::vector<double> map_values(const Tensor& a, F f) {
  std::vector<double> out(a.size());
  const auto v = a.values();
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = f(v[i]);
  return out;
}

// Records an elementwise op whose local derivative depends on (input, output).
template <class D>
Tensor record_elementwise(const Tensor& a, std::vector<double> out_values, D derivative) {
  Tensor out(a.rows(), a.cols(), std::move(out_values));
  auto tape = common_tape({&a});
  if (!tape) return out;
  Data in = TensorAccess::data(a);
  Data res = TensorAccess::data(out);
  const std::size_t an = TensorAccess::node(a);
  return record(std::move(tape), std::move(out),
                [in, res, an, derivative](std::span<const double> g, TapeState& st) {
                  auto ga = st.grad(an);
                  for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * derivative((*in)[i], (*res)[i]);
                });
}

}  // namespace

Tensor unary(UnaryKind kind, const Tensor& a, double slope) {
  switch (kind) {
    case UnaryKind::neg:
      return record_elementwise(a, map_values(a, [](double v) { return -v; }),
                                [](double, double) { return -1.0; });
    case UnaryKind::square:
      return record_elementwise(a, map_values(a, [](double v) { return v * v; }),
                                [](double x, double) { return 2.0 * x; });
    case UnaryKind::abs:
      return record_elementwise(a, map_values(a, [](double v) { return std::fabs(v); }),
                                [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
    case UnaryKind::log: {
      const auto v = a.values();
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (std::isnan(v[i])) throw NumericError("log of NaN at index " + std::to_string(i));
        if (!(v[i] > 0.0)) {
          std::ostringstream os;
          os << "log of non-positive entry " << v[i] << " at index " << i;
          throw DomainError(os.str());
        }
      }
      return record_elementwise(a, map_values(a, [](double x) { return std::log(x); }),
                                [](double x, double) { return 1.0 / x; });
    }
    case UnaryKind::exp:
      return record_elementwise(a, map_values(a, [](double v) { return std::exp(v); }),
                                [](double, double y) { return y; });
    case UnaryKind::tanh:
      return record_elementwise(a, map_values(a, [](double v) { return std::tanh(v); }),
                                [](double, double y) { return 1.0 - y * y; });
    case UnaryKind::sigmoid:
      return record_elementwise(a, map_values(a, [](double v) {
                                  return v >= 0 ? 1.0 / (1.0 + std::exp(-v))
                                                : std::exp(v) / (1.0 + std::exp(v));
                                }),
                                [](double, double y) { return y * (1.0 - y); });
    case UnaryKind::leaky_relu:
      return record_elementwise(a, map_values(a, [slope](double v) { return v > 0 ? v : slope * v; }),
                                [slope](double x, double) { return x > 0 ? 1.0 : slope; });
  }
  throw std::logic_error("unknown unary kind");
}

Tensor neg(const Tensor& a) { return unary(UnaryKind::neg, a); }
Tensor square(const Tensor& a) { return unary(UnaryKind::square, a); }
Tensor abs(const Tensor& a) { return unary(UnaryKind::abs, a); }
Tensor log(const Tensor& a) { return unary(UnaryKind::log, a); }
Tensor exp(const Tensor& a) { return unary(UnaryKind::exp, a); }
Tensor tanh(const Tensor& a) { return unary(UnaryKind::tanh, a); }
Tensor sigmoid(const Tensor& a) { return unary(UnaryKind::sigmoid, a); }
Tensor leaky_relu(const Tensor& a, double slope) { return unary(UnaryKind::leaky_relu, a, slope); }

Tensor map_unary(const Tensor& a, std::function<double(double)> value,
                 std::function<double(double)> derivative) {
  return record_elementwise(a, map_values(a, value),
                            [derivative = std::move(derivative)](double x, double) { return derivative(x); });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clamp with lo > hi");
  return record_elementwise(a, map_values(a, [lo, hi](double v) { return std::clamp(v, lo, hi); }),
                            [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor clamp_min(const Tensor& a, double lo) {
  return record_elementwise(a, map_values(a, [lo](double v) { return std::max(v, lo); }),
                            [lo](double x, double) { return x > lo ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// Elementwise binary with scalar broadcast

namespace {

const char* binary_name(BinaryKind k) {
  switch (k) {
    case BinaryKind::add: return "add";
    case BinaryKind::sub: return "sub";
    case BinaryKind::mul: return "mul";
    case BinaryKind::div: return "div";
  }
  return "?";
}

// Adds g (shaped like the output) into a gradient buffer for an operand that may
// have been broadcast from 1×1.
void accumulate_broadcast(std::span<double> dst, std::span<const double> g, const std::vector<double>& scale,
                          bool scalar) {
  if (dst.empty()) return;
  if (scalar) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * scale[i];
    dst[0] += s;
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * scale[i];
  }
}

}  // namespace

Tensor binary(BinaryKind kind, const Tensor& a, const Tensor& b) {
  Shape out_shape;
  if (a.shape() == b.shape()) {
    out_shape = a.shape();
  } else if (a.is_scalar()) {
    out_shape = b.shape();
  } else if (b.is_scalar()) {
    out_shape = a.shape();
  } else {
    throw ShapeError(std::string(binary_name(kind)) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
  const bool a_bc = a.size() != out_shape.size();
  const bool b_bc = b.size() != out_shape.size();
  const auto av = a.values();
  const auto bv = b.values();
  const std::size_t n = out_shape.size();
  auto at = [&](std::span<const double> v, bool bc, std::size_t i) { return bc ? v[0] : v[i]; };

  std::vector<double> out(n);
  switch (kind) {
    case BinaryKind::add:
      for (std::size_t i = 0; i < n; ++i) out[i] = at(av, a_bc, i) + at(bv, b_bc, i);
      break;
    case BinaryKind::sub:
      for (std::size_t i = 0; i < n; ++i) out[i] = at(av, a_bc, i) - at(bv, b_bc, i);
      break;
    case BinaryKind::mul:
      for (std::size_t i = 0; i < n; ++i) out[i] = at(av, a_bc, i) * at(bv, b_bc, i);
      break;
    case BinaryKind::div:
      for (std::size_t i = 0; i < n; ++i) {
        const double d = at(bv, b_bc, i);
        if (std::fabs(d) < 1e-300) {
          throw NumericError("div: denominator " + std::to_string(d) + " at index " + std::to_string(i));
        }
        out[i] = at(av, a_bc, i) / d;
      }
      break;
  }
  Tensor result(out_shape.rows, out_shape.cols, std::move(out));
  auto tape = common_tape({&a, &b});
  if (!tape) return result;

  Data ad = TensorAccess::data(a);
  Data bd = TensorAccess::data(b);
  const std::size_t an = TensorAccess::node(a);
  const std::size_t bn = TensorAccess::node(b);
  return record(std::move(tape), std::move(result),
                [=](std::span<const double> g, TapeState& st) {
                  auto ga = st.grad(an);
                  auto gb = st.grad(bn);
                  const std::size_t m = g.size();
                  auto val = [](const Data& d, bool bc, std::size_t i) { return bc ? (*d)[0] : (*d)[i]; };
                  std::vector<double> da(ga.empty() ? 0 : m), db(gb.empty() ? 0 : m);
                  for (std::size_t i = 0; i < m; ++i) {
                    const double x = val(ad, a_bc, i);
                    const double y = val(bd, b_bc, i);
                    switch (kind) {
                      case BinaryKind::add:
                        if (!da.empty()) da[i] = 1.0;
                        if (!db.empty()) db[i] = 1.0;
                        break;
                      case BinaryKind::sub:
                        if (!da.empty()) da[i] = 1.0;
                        if (!db.empty()) db[i] = -1.0;
                        break;
                      case BinaryKind::mul:
                        if (!da.empty()) da[i] = y;
                        if (!db.empty()) db[i] = x;
                        break;
                      case BinaryKind::div:
                        if (!da.empty()) da[i] = 1.0 / y;
                        if (!db.empty()) db[i] = -x / (y * y);
                        break;
                    }
                  }
                  accumulate_broadcast(ga, g, da, a_bc);
                  accumulate_broadcast(gb, g, db, b_bc);
                });
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(BinaryKind::add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(BinaryKind::sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(BinaryKind::mul, a, b); }
Tensor div(const Tensor& a, const Tensor& b) { return binary(BinaryKind::div, a, b); }

Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
Tensor operator-(const Tensor& a) { return neg(a); }
Tensor operator+(const Tensor& a, double b) { return add(a, Tensor::scalar(b)); }
Tensor operator+(double a, const Tensor& b) { return add(Tensor::scalar(a), b); }
Tensor operator-(const Tensor& a, double b) { return sub(a, Tensor::scalar(b)); }
Tensor operator-(double a, const Tensor& b) { return sub(Tensor::scalar(a), b); }
Tensor operator*(const Tensor& a, double b) { return mul(a, Tensor::scalar(b)); }
Tensor operator*(double a, const Tensor& b) { return mul(Tensor::scalar(a), b); }
Tensor operator/(const Tensor& a, double b) { return div(a, Tensor::scalar(b)); }
Tensor operator/(double a, const Tensor& b) { return div(Tensor::scalar(a), b); }

// ---------------------------------------------------------------------------
// N-ary

namespace {

Shape common_shape(std::span<const Tensor> terms, const char* what) {
  if (terms.empty()) throw ShapeError(std::string(what) + ": no operands");
  const Shape s = terms.front().shape();
  for (const Tensor& t : terms) {
    if (t.shape() != s) {
      throw ShapeError(std::string(what) + ": shape mismatch " + to_string(s) + " vs " + to_string(t.shape()));
    }
  }
  return s;
}

}  // namespace

Tensor sum_of(std::span<const Tensor> terms) {
  const Shape s = common_shape(terms, "sum_of");
  std::vector<double> out(s.size(), 0.0);
  for (const Tensor& t : terms) {
    const auto v = t.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  }
  Tensor result(s.rows, s.cols, std::move(out));
  auto tape = common_tape(terms);
  if (!tape) return result;
  std::vector<std::size_t> nodes;
  for (const Tensor& t : terms) nodes.push_back(TensorAccess::node(t));
  return record(std::move(tape), std::move(result), [nodes](std::span<const double> g, TapeState& st) {
    for (std::size_t n : nodes) {
      auto gn = st.grad(n);
      for (std::size_t i = 0; i < gn.size(); ++i) gn[i] += g[i];
    }
  });
}

Tensor median_of(std::span<const Tensor> terms) {
  const Shape s = common_shape(terms, "median_of");
  const std::size_t k = terms.size();
  const std::size_t n = s.size();
  // For each entry, the operand indices that carry the median (one or two).
  std::vector<std::size_t> lo_idx(n), hi_idx(n);
  std::vector<double> out(n);
  std::vector<std::size_t> order(k);
  for (std::size_t e = 0; e < n; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto key = [&](std::size_t i) { return terms[i].values()[e]; };
    // Ties broken by operand index so that the selection is deterministic.
    auto less = [&](std::size_t i, std::size_t j) { return key(i) < key(j) || (key(i) == key(j) && i < j); };
    std::sort(order.begin(), order.end(), less);
    if (k % 2 == 1) {
      lo_idx[e] = hi_idx[e] = order[k / 2];
      out[e] = key(order[k / 2]);
    } else {
      lo_idx[e] = order[k / 2 - 1];
      hi_idx[e] = order[k / 2];
      out[e] = 0.5 * (key(lo_idx[e]) + key(hi_idx[e]));
    }
  }
  Tensor result(s.rows, s.cols, std::move(out));
  auto tape = common_tape(terms);
  if (!tape) return result;
  std::vector<std::size_t> nodes;
  for (const Tensor& t : terms) nodes.push_back(TensorAccess::node(t));
  return record(std::move(tape), std::move(result),
                [nodes, lo_idx = std::move(lo_idx), hi_idx = std::move(hi_idx)](std::span<const double> g,
                                                                                   TapeState& st) {
                  for (std::size_t e = 0; e < g.size(); ++e) {
                    if (lo_idx[e] == hi_idx[e]) {
                      if (auto gn = st.grad(nodes[lo_idx[e]]); !gn.empty()) gn[e] += g[e];
                    } else {
                      if (auto gl = st.grad(nodes[lo_idx[e]]); !gl.empty()) gl[e] += 0.5 * g[e];
                      if (auto gh = st.grad(nodes[hi_idx[e]]); !gh.empty()) gh[e] += 0.5 * g[e];
                    }
                  }
                });
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + to_string(a.shape()) + " · " + to_string(b.shape()));
  }
  std::vector<double> out(a.rows() * b.cols());
  as_mut(out, {a.rows(), b.cols()}) = RowMajor(owned(a) * owned(b));
  Tensor result(a.rows(), b.cols(), std::move(out));
  auto tape = common_tape({&a, &b});
  if (!tape) return result;
  Data ad = TensorAccess::data(a);
  Data bd = TensorAccess::data(b);
  const Shape as = a.shape(), bs = b.shape(), os = result.shape();
  const std::size_t an = TensorAccess::node(a), bn = TensorAccess::node(b);
  return record(std::move(tape), std::move(result), [=](std::span<const double> g, TapeState& st) {
    const RowMajor gm = owned(g, os);
    if (auto ga = st.grad(an); !ga.empty()) as_mut(ga, as) += RowMajor(gm * owned(*bd, bs).transpose());
    if (auto gb = st.grad(bn); !gb.empty()) as_mut(gb, bs) += RowMajor(owned(*ad, as).transpose() * gm);
  });
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.cols() != w.rows()) {
    throw ShapeError("affine: input " + to_string(x.shape()) + " does not match weight " + to_string(w.shape()));
  }
  if (b.rows() != 1 || b.cols() != w.cols()) {
    throw ShapeError("affine: bias " + to_string(b.shape()) + " does not match weight " + to_string(w.shape()));
  }
  const Shape os{x.rows(), w.cols()};
  std::vector<double> out(os.size());
  RowMajor prod = owned(x) * owned(w);
  prod.rowwise() += owned(b).row(0);
  as_mut(out, os) = prod;
  Tensor result(os.rows, os.cols, std::move(out));
  auto tape = common_tape({&x, &w, &b});
  if (!tape) return result;
  Data xd = TensorAccess::data(x);
  Data wd = TensorAccess::data(w);
  const Shape xs = x.shape(), ws = w.shape(), bs = b.shape();
  const std::size_t xn = TensorAccess::node(x), wn = TensorAccess::node(w), bn = TensorAccess::node(b);
  return record(std::move(tape), std::move(result), [=](std::span<const double> g, TapeState& st) {
    const RowMajor gm = owned(g, os);
    if (auto gx = st.grad(xn); !gx.empty()) as_mut(gx, xs) += RowMajor(gm * owned(*wd, ws).transpose());
    if (auto gw = st.grad(wn); !gw.empty()) as_mut(gw, ws) += RowMajor(owned(*xd, xs).transpose() * gm);
    if (auto gb = st.grad(bn); !gb.empty()) as_mut(gb, bs).row(0) += RowMajor(gm.colwise().sum());
  });
}

Tensor reduce(ReduceKind kind, const Tensor& a) {
  if (a.empty()) throw ShapeError("reduce of an empty tensor");
  const auto v = a.values();
  double s = 0.0;
  for (double x : v) s += x;
  const double scale = kind == ReduceKind::mean ? 1.0 / static_cast<double>(v.size()) : 1.0;
  Tensor result = Tensor::scalar(s * scale);
  auto tape = common_tape({&a});
  if (!tape) return result;
  const std::size_t an = TensorAccess::node(a);
  return record(std::move(tape), std::move(result), [an, scale](std::span<const double> g, TapeState& st) {
    auto ga = st.grad(an);
    for (double& x : ga) x += g[0] * scale;
  });
}

Tensor mean(const Tensor& a) { return reduce(ReduceKind::mean, a); }
Tensor sum(const Tensor& a) { return reduce(ReduceKind::sum, a); }

Tensor concat(const Tensor& a, const Tensor& b, Axis axis) {
  Shape os;
  std::vector<double> out;
  if (axis == Axis::cols) {
    if (a.rows() != b.rows()) {
      throw ShapeError("concat(cols): row counts differ, " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    }
    os = {a.rows(), a.cols() + b.cols()};
    out.resize(os.size());
    for (std::size_t r = 0; r < os.rows; ++r) {
      std::copy_n(a.values().data() + r * a.cols(), a.cols(), out.data() + r * os.cols);
      std::copy_n(b.values().data() + r * b.cols(), b.cols(), out.data() + r * os.cols + a.cols());
    }
  } else {
    if (a.cols() != b.cols()) {
      throw ShapeError("concat(rows): column counts differ, " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    }
    os = {a.rows() + b.rows(), a.cols()};
    out.reserve(os.size());
    out.insert(out.end(), a.values().begin(), a.values().end());
    out.insert(out.end(), b.values().begin(), b.values().end());
  }
  Tensor result(os.rows, os.cols, std::move(out));
  auto tape = common_tape({&a, &b});
  if (!tape) return result;
  const std::size_t an = TensorAccess::node(a), bn = TensorAccess::node(b);
  const std::size_t ac = a.cols(), bc = b.cols(), asz = a.size();
  return record(std::move(tape), std::move(result), [=](std::span<const double> g, TapeState& st) {
    auto ga = st.grad(an);
    auto gb = st.grad(bn);
    if (axis == Axis::cols) {
      for (std::size_t r = 0; r < os.rows; ++r) {
        for (std::size_t c = 0; c < ac && !ga.empty(); ++c) ga[r * ac + c] += g[r * os.cols + c];
        for (std::size_t c = 0; c < bc && !gb.empty(); ++c) gb[r * bc + c] += g[r * os.cols + ac + c];
      }
    } else {
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[asz + i];
    }
  });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.rows()) {
    throw ShapeError("slice_rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + to_string(a.shape()));
  }
  const std::size_t cols = a.cols();
  const auto v = a.values();
  std::vector<double> out(v.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                          v.begin() + static_cast<std::ptrdiff_t>((begin + count) * cols));
  Tensor result(count, cols, std::move(out));
  auto tape = common_tape({&a});
  if (!tape) return result;
  const std::size_t an = TensorAccess::node(a);
  const std::size_t offset = begin * cols;
  return record(std::move(tape), std::move(result), [an, offset](std::span<const double> g, TapeState& st) {
    auto ga = st.grad(an);
    for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g[i];
  });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.cols()) {
    throw ShapeError("slice_cols [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + to_string(a.shape()));
  }
  const std::size_t rows = a.rows(), cols = a.cols();
  const auto v = a.values();
  std::vector<double> out(rows * count);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(v.data() + r * cols + begin, count, out.data() + r * count);
  Tensor result(rows, count, std::move(out));
  auto tape = common_tape({&a});
  if (!tape) return result;
  const std::size_t an = TensorAccess::node(a);
  return record(std::move(tape), std::move(result), [=](std::span<const double> g, TapeState& st) {
    auto ga = st.grad(an);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < count; ++c) ga[r * cols + begin + c] += g[r * count + c];
  });
}

Tensor tile_rows(const Tensor& a, std::size_t times) {
  std::vector<double> out;
  out.reserve(a.size() * times);
  for (std::size_t t = 0; t < times; ++t) out.insert(out.end(), a.values().begin(), a.values().end());
  Tensor result(a.rows() * times, a.cols(), std::move(out));
  auto tape = common_tape({&a});
  if (!tape) return result;
  const std::size_t an = TensorAccess::node(a);
  const std::size_t n = a.size();
  return record(std::move(tape), std::move(result), [an, n](std::span<const double> g, TapeState& st) {
    auto ga = st.grad(an);
    if (ga.empty()) return;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i % n] += g[i];
  });
}

namespace {

// While finite differences are taken, gradient_stop outputs are recorded at the
// base point and replayed (by call order) at every perturbed point, so the
// check measures the derivative the tape defines.
struct StopReplay {
  bool recording = true;
  std::vector<Tensor> values;
  std::size_t cursor = 0;
};

thread_local StopReplay* active_replay = nullptr;

class ReplayScope {
 public:
  explicit ReplayScope(StopReplay& r) : prev_(active_replay) { active_replay = &r; }
  ~ReplayScope() { active_replay = prev_; }
  ReplayScope(const ReplayScope&) = delete;
  ReplayScope& operator=(const ReplayScope&) = delete;

 private:
  StopReplay* prev_;
};

}  // namespace

Tensor gradient_stop(const Tensor& a) {
  Tensor out = TensorAccess::share(a);
  if (active_replay) {
    if (active_replay->recording) {
      active_replay->values.push_back(out);
    } else {
      if (active_replay->cursor >= active_replay->values.size()) {
        throw std::logic_error("finite_diff_check: loss function is not structurally deterministic");
      }
      const Tensor& frozen = active_replay->values[active_replay->cursor++];
      if (frozen.shape() != a.shape()) throw std::logic_error("finite_diff_check: gradient_stop replay shape mismatch");
      return frozen;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Finite differences

double finite_diff_check(const LossFn& loss_fn, std::span<const Tensor> params, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: step must be positive");
  StopReplay replay;
  ReplayScope scope(replay);
  Tape tape;
  const std::vector<Tensor> watched = tape.watch(params);
  const Tensor loss = loss_fn(watched);
  replay.recording = false;
  std::vector<Tensor> tape_grads;
  if (loss.tracked()) {
    tape_grads = tape.backward(loss).of(watched);
  } else {
    // Loss does not depend on the parameters at all.
    for (const Tensor& p : params) tape_grads.push_back(Tensor::zeros(p.rows(), p.cols()));
  }

  std::vector<Tensor> probe(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      auto eval_at = [&](double delta) {
        std::vector<double> v = params[p].to_vector();
        v[i] += delta;
        probe[p] = Tensor(params[p].rows(), params[p].cols(), std::move(v));
        replay.cursor = 0;
        return loss_fn(probe).item();
      };
      const double fd = (eval_at(h) - eval_at(-h)) / (2.0 * h);
      probe[p] = params[p];
      const double tg = tape_grads[p].values()[i];
      const double rel = std::fabs(tg - fd) / std::max(1e-8, std::fabs(tg) + std::fabs(fd));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace mrlab
