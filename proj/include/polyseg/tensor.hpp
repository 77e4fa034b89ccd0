// Copyright 2026 The polyseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense row-major tensors with tape-based reverse-mode differentiation.
//
// A Tensor is a shared handle: copies alias the same storage. Ops take a
// Graph, compute the forward value eagerly and, when the graph is recording
// and some input requires a gradient, append a backward record. Gradients of
// leaves accumulate across backward passes until zero_grad().
//
// Only rank-1 and rank-2 shapes occur; a rank-1 tensor of n values behaves
// as a 1 x n row wherever an op needs a matrix view.

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "polyseg/error.hpp"
#include "polyseg/random.hpp"

namespace polyseg {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ')';
  return os.str();
}

inline std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    validate(shape);
    Tensor t;
    t.s_ = std::make_shared<Storage>();
    t.s_->value.assign(shape_size(shape), T(0));
    t.s_->shape = std::move(shape);
    t.s_->requires_grad = requires_grad;
    return t;
  }

  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false) {
    validate(shape);
    if (values.size() != shape_size(shape)) {
      throw ShapeError("tensor data has " + std::to_string(values.size()) + " values for shape " +
                       shape_str(shape));
    }
    Tensor t;
    t.s_ = std::make_shared<Storage>();
    t.s_->shape = std::move(shape);
    t.s_->value = std::move(values);
    t.s_->requires_grad = requires_grad;
    return t;
  }

  static Tensor scalar(T v) { return from({1}, {v}); }

  bool defined() const noexcept { return s_ != nullptr; }
  const Shape& shape() const { return s_->shape; }
  std::size_t rank() const { return s_->shape.size(); }
  std::size_t size() const { return s_->value.size(); }
  std::size_t rows() const { return rank() == 1 ? 1 : s_->shape[0]; }
  std::size_t cols() const { return s_->shape.back(); }

  std::span<T> data() { return s_->value; }
  std::span<const T> data() const { return s_->value; }
  T& operator[](std::size_t i) { return s_->value[i]; }
  const T& operator[](std::size_t i) const { return s_->value[i]; }
  T& at(std::size_t r, std::size_t c) { return s_->value[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const { return s_->value[r * cols() + c]; }

  T item() const {
    if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
    return s_->value[0];
  }

  bool requires_grad() const { return s_->requires_grad; }
  void set_requires_grad(bool on) { s_->requires_grad = on; }

  bool has_grad() const { return !s_->grad.empty(); }
  std::span<const T> grad() const { return s_->grad; }
  std::span<T> grad() { return s_->grad; }

  /// Gradient buffer, allocated as zeros on first use. Tensors are handles,
  /// so this is available through const copies held by backward closures.
  std::span<T> grad_buffer() const {
    if (s_->grad.empty()) s_->grad.assign(s_->value.size(), T(0));
    return s_->grad;
  }

  void zero_grad() {
    if (!s_->grad.empty()) std::fill(s_->grad.begin(), s_->grad.end(), T(0));
  }

  /// Deep copy of values (no gradient, no graph history).
  Tensor clone() const { return from(shape(), s_->value, requires_grad()); }

  /// Same storage identity.
  bool same(const Tensor& other) const noexcept { return s_ == other.s_; }

 private:
  struct Storage {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;
    bool requires_grad = false;
  };

  static void validate(const Shape& shape) {
    if (shape.empty() || shape.size() > 2) throw ShapeError("tensor rank must be 1 or 2, got " + shape_str(shape));
    for (auto d : shape) {
      if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
    }
  }

  std::shared_ptr<Storage> s_;
};

/// Topologically ordered backward records of one forward pass.
template <typename T>
class Graph {
 public:
  explicit Graph(bool recording = true) : recording_(recording) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return records_.size(); }

  /// True when an op over `inputs` must record a backward rule.
  bool tracks(std::initializer_list<const Tensor<T>*> inputs) const {
    if (!recording_) return false;
    for (auto* t : inputs) {
      if (t->requires_grad()) return true;
    }
    return false;
  }

  void record(std::function<void()> backward) { records_.push_back(std::move(backward)); }

  /// Seeds d(loss)/d(loss) = 1, runs every record once in reverse order, then
  /// clears the tape.
  void backward(Tensor<T>& loss) {
    if (loss.size() != 1) throw ShapeError("backward() needs a scalar loss, got shape " + shape_str(loss.shape()));
    if (!loss.requires_grad()) {
      records_.clear();
      return;
    }
    loss.grad_buffer()[0] += T(1);
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) (*it)();
    records_.clear();
  }

 private:
  bool recording_;
  std::vector<std::function<void()>> records_;
};

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
MatrixMap<T> as_matrix(std::span<T> s, std::size_t rows, std::size_t cols) {
  return MatrixMap<T>(s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
template <typename T>
ConstMatrixMap<T> as_matrix(std::span<const T> s, std::size_t rows, std::size_t cols) {
  return ConstMatrixMap<T>(s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

namespace ops {

namespace detail {

template <typename T>
Tensor<T> result(Graph<T>& g, Shape shape, std::initializer_list<const Tensor<T>*> inputs) {
  return Tensor<T>::zeros(std::move(shape), g.tracks(inputs));
}

template <typename T>
[[noreturn]] void mismatch(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                   shape_str(b.shape()));
}

template <typename T>
Shape matrix_shape(const Tensor<T>& a) {
  return {a.rows(), a.cols()};
}

}  // namespace detail

/// a (m x k) times b (k x n), or times b^T when `transpose_b` (b is n x k).
template <typename T>
Tensor<T> matmul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b, bool transpose_b = false) {
  const std::size_t m = a.rows(), k = a.cols();
  const std::size_t br = b.rows(), bc = b.cols();
  if ((transpose_b ? bc : br) != k) detail::mismatch(transpose_b ? "matmul(a, b^T)" : "matmul", a, b);
  const std::size_t n = transpose_b ? br : bc;
  Tensor<T> out = detail::result(g, {m, n}, {&a, &b});
  auto A = as_matrix(a.data(), m, k);
  auto B = as_matrix(b.data(), br, bc);
  auto C = as_matrix(out.data(), m, n);
  if (transpose_b) {
    C.noalias() = A * B.transpose();
  } else {
    C.noalias() = A * B;
  }
  if (out.requires_grad()) {
    g.record([a, b, out, m, k, n, br, bc, transpose_b]() mutable {
      if (!out.has_grad()) return;
      auto dC = as_matrix(std::span<const T>(out.grad()), m, n);
      if (a.requires_grad()) {
        auto dA = as_matrix(a.grad_buffer(), m, k);
        auto B = as_matrix(std::span<const T>(b.data()), br, bc);
        if (transpose_b) {
          dA.noalias() += dC * B;
        } else {
          dA.noalias() += dC * B.transpose();
        }
      }
      if (b.requires_grad()) {
        auto dB = as_matrix(b.grad_buffer(), br, bc);
        auto A = as_matrix(std::span<const T>(a.data()), m, k);
        if (transpose_b) {
          dB.noalias() += dC.transpose() * A;
        } else {
          dB.noalias() += A.transpose() * dC;
        }
      }
    });
  }
  return out;
}

/// Elementwise sum. `b` may also be a single row of a's width, added to every
/// row of `a` (bias broadcast).
template <typename T>
Tensor<T> add(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
  const bool broadcast = a.shape() != b.shape();
  if (broadcast ? (b.rows() != 1 || b.cols() != a.cols()) : a.shape() != b.shape()) {
    detail::mismatch("add", a, b);
  }
  Tensor<T> out = detail::result(g, a.shape(), {&a, &b});
  const std::size_t rows = a.rows(), cols = a.cols();
  auto av = a.data();
  auto bv = b.data();
  auto ov = out.data();
  if (broadcast) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) ov[r * cols + c] = av[r * cols + c] + bv[c];
    }
  } else {
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  }
  if (out.requires_grad()) {
    g.record([a, b, out, rows, cols, broadcast]() mutable {
      if (!out.has_grad()) return;
      auto go = std::span<const T>(out.grad());
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        if (broadcast) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) gb[c] += go[r * cols + c];
          }
        } else {
          for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i];
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) detail::mismatch("mul", a, b);
  Tensor<T> out = detail::result(g, a.shape(), {&a, &b});
  auto av = a.data();
  auto bv = b.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  if (out.requires_grad()) {
    g.record([a, b, out]() mutable {
      if (!out.has_grad()) return;
      auto go = std::span<const T>(out.grad());
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        auto bv = std::span<const T>(b.data());
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        auto av = std::span<const T>(a.data());
        for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> scale(Graph<T>& g, const Tensor<T>& a, T factor) {
  Tensor<T> out = detail::result(g, a.shape(), {&a});
  auto av = a.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * factor;
  if (out.requires_grad()) {
    g.record([a, out, factor]() mutable {
      if (!out.has_grad()) return;
      auto go = std::span<const T>(out.grad());
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * factor;
    });
  }
  return out;
}

template <typename T>
T sigmoid_value(T x) {
  // Split by sign so exp never overflows.
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
Tensor<T> sigmoid(Graph<T>& g, const Tensor<T>& a) {
  Tensor<T> out = detail::result(g, a.shape(), {&a});
  auto av = a.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = sigmoid_value(av[i]);
  if (out.requires_grad()) {
    g.record([a, out]() mutable {
      if (!out.has_grad()) return;
      auto go = std::span<const T>(out.grad());
      auto y = std::span<const T>(out.data());
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * y[i] * (T(1) - y[i]);
    });
  }
  return out;
}

template <typename T>
Tensor<T> tanh(Graph<T>& g, const Tensor<T>& a) {
  Tensor<T> out = detail::result(g, a.shape(), {&a});
  auto av = a.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::tanh(av[i]);
  if (out.requires_grad()) {
    g.record([a, out]() mutable {
      if (!out.has_grad()) return;
      auto go = std::span<const T>(out.grad());
      auto y = std::span<const T>(out.data());
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * (T(1) - y[i] * y[i]);
    });
  }
  return out;
}

/// Concatenation along the last axis; all parts share the row count.
template <typename T>
Tensor<T> concat(Graph<T>& g, const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  bool track = false;
  for (const auto& p : parts) {
    if (p.rows() != rows) detail::mismatch("concat", parts.front(), p);
    cols += p.cols();
    track = track || g.tracks({&p});
  }
  Tensor<T> out = Tensor<T>::zeros(parts.front().rank() == 1 ? Shape{cols} : Shape{rows, cols}, track);
  auto ov = out.data();
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t pc = p.cols();
    auto pv = p.data();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(r * pc), pc,
                  ov.begin() + static_cast<std::ptrdiff_t>(r * cols + offset));
    }
    offset += pc;
  }
  if (track) {
    g.record([parts, out, rows, cols]() mutable {
      if (!out.has_grad()) return;
      auto go = std::span<const T>(out.grad());
      std::size_t offset = 0;
      for (auto& p : parts) {
        const std::size_t pc = p.cols();
        if (p.requires_grad()) {
          auto gp = p.grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < pc; ++c) gp[r * pc + c] += go[r * cols + offset + c];
          }
        }
        offset += pc;
      }
    });
  }
  return out;
}

/// Concatenation along the first axis; all parts share the column count.
template <typename T>
Tensor<T> stack_rows(Graph<T>& g, const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("stack_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  bool track = false;
  for (const auto& p : parts) {
    if (p.cols() != cols) detail::mismatch("stack_rows", parts.front(), p);
    rows += p.rows();
    track = track || g.tracks({&p});
  }
  Tensor<T> out = Tensor<T>::zeros({rows, cols}, track);
  auto ov = out.data();
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.data().begin(), p.data().end(), ov.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p.size();
  }
  if (track) {
    g.record([parts, out]() mutable {
      if (!out.has_grad()) return;
      auto go = std::span<const T>(out.grad());
      std::size_t offset = 0;
      for (auto& p : parts) {
        if (p.requires_grad()) {
          auto gp = p.grad_buffer();
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += go[offset + i];
        }
        offset += p.size();
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> slice_cols(Graph<T>& g, const Tensor<T>& a, std::size_t begin, std::size_t count) {
  const std::size_t rows = a.rows(), cols = a.cols();
  if (count == 0 || begin + count > cols) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for shape " + shape_str(a.shape()));
  }
  Tensor<T> out = detail::result(g, {rows, count}, {&a});
  auto av = a.data();
  auto ov = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.begin() + static_cast<std::ptrdiff_t>(r * cols + begin), count,
                ov.begin() + static_cast<std::ptrdiff_t>(r * count));
  }
  if (out.requires_grad()) {
    g.record([a, out, rows, cols, begin, count]() mutable {
      if (!out.has_grad()) return;
      auto go = std::span<const T>(out.grad());
      auto ga = a.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < count; ++c) ga[r * cols + begin + c] += go[r * count + c];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> slice_rows(Graph<T>& g, const Tensor<T>& a, std::size_t begin, std::size_t count) {
  const std::size_t cols = a.cols();
  if (count == 0 || begin + count > a.rows()) {
    throw ShapeError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for shape " + shape_str(a.shape()));
  }
  Tensor<T> out = detail::result(g, {count, cols}, {&a});
  auto av = a.data();
  std::copy_n(av.begin() + static_cast<std::ptrdiff_t>(begin * cols), count * cols, out.data().begin());
  if (out.requires_grad()) {
    g.record([a, out, begin, cols]() mutable {
      if (!out.has_grad()) return;
      auto go = std::span<const T>(out.grad());
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < go.size(); ++i) ga[begin * cols + i] += go[i];
    });
  }
  return out;
}

/// Rows of `table` selected by `ids`; backward scatter-adds into the table.
template <typename T>
Tensor<T> gather(Graph<T>& g, const Tensor<T>& table, std::span<const std::int32_t> ids) {
  const std::size_t rows = table.rows(), cols = table.cols();
  if (ids.empty()) throw ShapeError("gather: empty id list");
  for (auto id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= rows) {
      throw IndexError("gather: id " + std::to_string(id) + " out of range for " + std::to_string(rows) + " rows");
    }
  }
  Tensor<T> out = detail::result(g, {ids.size(), cols}, {&table});
  auto tv = table.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(ids[i]) * cols), cols,
                ov.begin() + static_cast<std::ptrdiff_t>(i * cols));
  }
  if (out.requires_grad()) {
    g.record([table, out, idv = std::vector<std::int32_t>(ids.begin(), ids.end()), cols]() mutable {
      if (!out.has_grad()) return;
      auto go = std::span<const T>(out.grad());
      auto gt = table.grad_buffer();
      for (std::size_t i = 0; i < idv.size(); ++i) {
        const std::size_t base = static_cast<std::size_t>(idv[i]) * cols;
        for (std::size_t c = 0; c < cols; ++c) gt[base + c] += go[i * cols + c];
      }
    });
  }
  return out;
}

/// Stable log(sum(exp(.))) over one axis via max subtraction.
template <typename T>
Tensor<T> logsumexp(Graph<T>& g, const Tensor<T>& a, int axis) {
  const std::size_t rows = a.rows(), cols = a.cols();
  if (axis < 0 || axis >= static_cast<int>(a.rank())) {
    throw ShapeError("logsumexp: axis " + std::to_string(axis) + " invalid for shape " + shape_str(a.shape()));
  }
  // Rank-1 input reduces over its only axis, which is the column axis of the row view.
  const bool over_cols = a.rank() == 1 || axis == 1;
  Shape shape = a.rank() == 1 ? Shape{1} : (over_cols ? Shape{rows, 1} : Shape{1, cols});
  Tensor<T> out = detail::result(g, shape, {&a});
  auto av = a.data();
  auto ov = out.data();
  const std::size_t groups = over_cols ? rows : cols;
  const std::size_t len = over_cols ? cols : rows;
  auto idx = [=](std::size_t grp, std::size_t j) { return over_cols ? grp * cols + j : j * cols + grp; };
  for (std::size_t grp = 0; grp < groups; ++grp) {
    T m = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < len; ++j) m = std::max(m, av[idx(grp, j)]);
    if (!std::isfinite(m)) {
      ov[grp] = m;
      continue;
    }
    T s = 0;
    for (std::size_t j = 0; j < len; ++j) s += std::exp(av[idx(grp, j)] - m);
    ov[grp] = m + std::log(s);
  }
  if (out.requires_grad()) {
    g.record([a, out, groups, len, idx]() mutable {
      if (!out.has_grad()) return;
      auto go = std::span<const T>(out.grad());
      auto y = std::span<const T>(out.data());
      auto av = std::span<const T>(a.data());
      auto ga = a.grad_buffer();
      for (std::size_t grp = 0; grp < groups; ++grp) {
        if (!std::isfinite(y[grp])) continue;
        for (std::size_t j = 0; j < len; ++j) {
          const auto i = idx(grp, j);
          ga[i] += go[grp] * std::exp(av[i] - y[grp]);
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum(Graph<T>& g, const Tensor<T>& a) {
  Tensor<T> out = detail::result(g, {1}, {&a});
  T s = 0;
  for (T v : a.data()) s += v;
  out[0] = s;
  if (out.requires_grad()) {
    g.record([a, out]() mutable {
      if (!out.has_grad()) return;
      const T go = out.grad()[0];
      for (T& v : a.grad_buffer()) v += go;
    });
  }
  return out;
}

/// Inverted-dropout mask: each entry is 0 with probability p, else 1/(1-p).
template <typename T>
Tensor<T> dropout_mask(Rng& rng, Shape shape, double p) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout rate must be in [0, 1)");
  Tensor<T> m = Tensor<T>::zeros(std::move(shape));
  const T keep = static_cast<T>(1.0 / (1.0 - p));
  for (T& v : m.data()) v = rng.uniform() < p ? T(0) : keep;
  return m;
}

/// Applies a precomputed dropout mask (a constant) by elementwise product.
template <typename T>
Tensor<T> dropout_mask_apply(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& mask) {
  if (mask.requires_grad()) throw ShapeError("dropout mask must be a constant");
  return mul(g, a, mask);
}

}  // namespace ops
}  // namespace polyseg
