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

// Linear-chain CRF over the four BMES tags.
//
// A path y scores start[y0] + sum_t emit[t][y_t] + sum_t trans[y_t][y_t+1]
// + stop[y_last]. Emissions may be a plain T x 4 matrix or one sentence of a
// time-major batch (row t*B + b), described by EmissionView.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "polyseg/corpus.hpp"
#include "polyseg/tensor.hpp"

namespace polyseg {

template <typename T>
struct CrfParams {
  Tensor<T> transitions;  // 4 x 4, [from][to]
  Tensor<T> start;        // 4
  Tensor<T> stop;         // 4

  static CrfParams zeros(bool requires_grad = true) {
    return {Tensor<T>::zeros({kNumTags, kNumTags}, requires_grad), Tensor<T>::zeros({kNumTags}, requires_grad),
            Tensor<T>::zeros({kNumTags}, requires_grad)};
  }

  T trans(int from, int to) const { return transitions[static_cast<std::size_t>(from * kNumTags + to)]; }
};

/// Read-only view of one sentence's emission rows inside a (possibly batched)
/// row-major N x 4 buffer.
template <typename T>
struct EmissionView {
  const T* base = nullptr;
  std::size_t length = 0;
  std::size_t row_stride = 1;  // rows between consecutive time steps

  T operator()(std::size_t t, int tag) const { return base[t * row_stride * kNumTags + static_cast<std::size_t>(tag)]; }

  static EmissionView of(const Tensor<T>& emissions) {
    if (emissions.cols() != static_cast<std::size_t>(kNumTags)) {
      throw ShapeError("emissions must have 4 columns, got shape " + shape_str(emissions.shape()));
    }
    return {emissions.data().data(), emissions.rows(), 1};
  }
};

namespace crf_detail {

template <typename T>
T lse(const T* v, int n) {
  T m = -std::numeric_limits<T>::infinity();
  for (int i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (!std::isfinite(m)) return m;
  T s = 0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

template <typename T>
void check_params(const CrfParams<T>& p) {
  if (p.transitions.size() != 16 || p.start.size() != 4 || p.stop.size() != 4) {
    throw ShapeError("CRF parameters must be 4x4 transitions with 4 start and 4 stop scores");
  }
}

/// alpha[t][j]: log-sum of all prefixes ending in tag j at step t.
template <typename T>
std::vector<std::array<T, kNumTags>> forward(const EmissionView<T>& em, const CrfParams<T>& p) {
  std::vector<std::array<T, kNumTags>> alpha(em.length);
  for (int j = 0; j < kNumTags; ++j) alpha[0][j] = p.start[j] + em(0, j);
  std::array<T, kNumTags> tmp{};
  for (std::size_t t = 1; t < em.length; ++t) {
    for (int j = 0; j < kNumTags; ++j) {
      for (int i = 0; i < kNumTags; ++i) tmp[i] = alpha[t - 1][i] + p.trans(i, j);
      alpha[t][j] = em(t, j) + lse(tmp.data(), kNumTags);
    }
  }
  return alpha;
}

/// beta[t][i]: log-sum of all suffixes after step t given tag i at t.
template <typename T>
std::vector<std::array<T, kNumTags>> backward(const EmissionView<T>& em, const CrfParams<T>& p) {
  std::vector<std::array<T, kNumTags>> beta(em.length);
  const std::size_t last = em.length - 1;
  for (int j = 0; j < kNumTags; ++j) beta[last][j] = p.stop[j];
  std::array<T, kNumTags> tmp{};
  for (std::size_t t = last; t-- > 0;) {
    for (int i = 0; i < kNumTags; ++i) {
      for (int j = 0; j < kNumTags; ++j) tmp[j] = p.trans(i, j) + em(t + 1, j) + beta[t + 1][j];
      beta[t][i] = lse(tmp.data(), kNumTags);
    }
  }
  return beta;
}

template <typename T>
T log_partition_from(const std::vector<std::array<T, kNumTags>>& alpha, const CrfParams<T>& p) {
  std::array<T, kNumTags> tmp{};
  for (int j = 0; j < kNumTags; ++j) tmp[j] = alpha.back()[j] + p.stop[j];
  return lse(tmp.data(), kNumTags);
}

}  // namespace crf_detail

template <typename T>
T score_sequence(const EmissionView<T>& em, std::span<const std::int32_t> tags, const CrfParams<T>& p) {
  crf_detail::check_params(p);
  if (em.length == 0) throw ShapeError("score_sequence: empty sequence");
  if (tags.size() != em.length) {
    throw ShapeError("score_sequence: " + std::to_string(tags.size()) + " tags for " + std::to_string(em.length) +
                     " emission rows");
  }
  for (auto t : tags) {
    if (t < 0 || t >= kNumTags) throw IndexError("score_sequence: tag id " + std::to_string(t) + " out of range");
  }
  T s = p.start[static_cast<std::size_t>(tags[0])] + p.stop[static_cast<std::size_t>(tags.back())];
  for (std::size_t t = 0; t < em.length; ++t) {
    s += em(t, tags[t]);
    if (t + 1 < em.length) s += p.trans(tags[t], tags[t + 1]);
  }
  return s;
}

template <typename T>
T score_sequence(const Tensor<T>& emissions, std::span<const std::int32_t> tags, const CrfParams<T>& p) {
  return score_sequence(EmissionView<T>::of(emissions), tags, p);
}

/// log of the summed exponentiated scores of all 4^T paths (forward algorithm).
template <typename T>
T log_partition(const EmissionView<T>& em, const CrfParams<T>& p) {
  crf_detail::check_params(p);
  if (em.length == 0) throw ShapeError("log_partition: empty sequence");
  return crf_detail::log_partition_from(crf_detail::forward(em, p), p);
}

template <typename T>
T log_partition(const Tensor<T>& emissions, const CrfParams<T>& p) {
  return log_partition(EmissionView<T>::of(emissions), p);
}

template <typename T>
T nll(const EmissionView<T>& em, std::span<const std::int32_t> tags, const CrfParams<T>& p) {
  return log_partition(em, p) - score_sequence(em, tags, p);
}

template <typename T>
T nll(const Tensor<T>& emissions, std::span<const std::int32_t> tags, const CrfParams<T>& p) {
  return nll(EmissionView<T>::of(emissions), tags, p);
}

/// Transitions that cannot occur in a well-formed BMES sequence.
inline bool bmes_transition_allowed(int from, int to) {
  const bool open_after = from == static_cast<int>(Tag::B) || from == static_cast<int>(Tag::M);
  const bool needs_open = to == static_cast<int>(Tag::M) || to == static_cast<int>(Tag::E);
  return open_after == needs_open;
}
inline bool bmes_start_allowed(int tag) { return tag == static_cast<int>(Tag::B) || tag == static_cast<int>(Tag::S); }
inline bool bmes_stop_allowed(int tag) { return tag == static_cast<int>(Tag::E) || tag == static_cast<int>(Tag::S); }

template <typename T>
struct ViterbiResult {
  std::vector<std::int32_t> tags;
  T score = 0;
};

/// Highest-scoring path. Ties go to the smaller tag id at every decision.
/// With `constrained`, illegal BMES transitions/start/stop tags score -inf.
template <typename T>
ViterbiResult<T> viterbi(const EmissionView<T>& em, const CrfParams<T>& p, bool constrained = false) {
  crf_detail::check_params(p);
  if (em.length == 0) throw ShapeError("viterbi: empty sequence");
  constexpr T kNegInf = -std::numeric_limits<T>::infinity();
  auto trans = [&](int i, int j) { return constrained && !bmes_transition_allowed(i, j) ? kNegInf : p.trans(i, j); };
  auto start = [&](int j) { return constrained && !bmes_start_allowed(j) ? kNegInf : p.start[j]; };
  auto stop = [&](int j) { return constrained && !bmes_stop_allowed(j) ? kNegInf : p.stop[j]; };

  std::vector<std::array<std::int32_t, kNumTags>> back(em.length);
  std::array<T, kNumTags> delta{}, next{};
  for (int j = 0; j < kNumTags; ++j) delta[j] = start(j) + em(0, j);
  for (std::size_t t = 1; t < em.length; ++t) {
    for (int j = 0; j < kNumTags; ++j) {
      int best = 0;
      T best_score = delta[0] + trans(0, j);
      for (int i = 1; i < kNumTags; ++i) {
        const T s = delta[i] + trans(i, j);
        if (s > best_score) {
          best_score = s;
          best = i;
        }
      }
      next[j] = best_score + em(t, j);
      back[t][j] = best;
    }
    delta = next;
  }
  int best = 0;
  T best_score = delta[0] + stop(0);
  for (int j = 1; j < kNumTags; ++j) {
    const T s = delta[j] + stop(j);
    if (s > best_score) {
      best_score = s;
      best = j;
    }
  }
  ViterbiResult<T> out;
  out.score = best_score;
  out.tags.assign(em.length, 0);
  out.tags.back() = best;
  for (std::size_t t = em.length - 1; t > 0; --t) out.tags[t - 1] = back[t][out.tags[t]];
  return out;
}

template <typename T>
ViterbiResult<T> viterbi(const Tensor<T>& emissions, const CrfParams<T>& p, bool constrained = false) {
  return viterbi(EmissionView<T>::of(emissions), p, constrained);
}

namespace ops {

/// Mean CRF negative log-likelihood over a time-major batch.
///
/// `emissions` is (max_len * batch) x 4 with row t*batch + b holding sentence
/// b at step t. `tags` uses the same layout. Rows at t >= lengths[b] are
/// padding: they are never read, so they receive exactly zero gradient.
template <typename T>
Tensor<T> crf_nll(Graph<T>& g, const Tensor<T>& emissions, std::span<const std::size_t> lengths,
                  std::span<const std::int32_t> tags, const CrfParams<T>& p) {
  crf_detail::check_params(p);
  const std::size_t batch = lengths.size();
  if (batch == 0) throw ShapeError("crf_nll: empty batch");
  if (emissions.cols() != static_cast<std::size_t>(kNumTags) || emissions.rows() % batch != 0) {
    throw ShapeError("crf_nll: emissions shape " + shape_str(emissions.shape()) + " does not fit batch of " +
                     std::to_string(batch));
  }
  const std::size_t steps = emissions.rows() / batch;
  if (tags.size() != steps * batch) throw ShapeError("crf_nll: tag count does not match emissions");
  for (auto len : lengths) {
    if (len == 0 || len > steps) throw ShapeError("crf_nll: sentence length out of range");
  }

  auto view = [&emissions, batch](std::size_t b, std::size_t len) {
    return EmissionView<T>{emissions.data().data() + b * kNumTags, len, batch};
  };
  auto gold = [tags, batch](std::size_t b, std::size_t len) {
    std::vector<std::int32_t> y(len);
    for (std::size_t t = 0; t < len; ++t) {
      y[t] = tags[t * batch + b];
      if (y[t] < 0 || y[t] >= kNumTags) throw IndexError("crf_nll: tag id " + std::to_string(y[t]) + " out of range");
    }
    return y;
  };

  T total = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    const auto y = gold(b, lengths[b]);
    total += nll(view(b, lengths[b]), std::span<const std::int32_t>(y), p);
  }
  Tensor<T> out = detail::result(g, {1}, {&emissions, &p.transitions, &p.start, &p.stop});
  out[0] = total / static_cast<T>(batch);

  if (out.requires_grad()) {
    g.record([emissions, p, out, len = std::vector<std::size_t>(lengths.begin(), lengths.end()),
              tagv = std::vector<std::int32_t>(tags.begin(), tags.end()), batch]() mutable {
      if (!out.has_grad()) return;
      const T scale = out.grad()[0] / static_cast<T>(batch);
      std::span<T> g_em = emissions.requires_grad() ? emissions.grad_buffer() : std::span<T>();
      std::span<T> g_tr = p.transitions.requires_grad() ? p.transitions.grad_buffer() : std::span<T>();
      std::span<T> g_start = p.start.requires_grad() ? p.start.grad_buffer() : std::span<T>();
      std::span<T> g_stop = p.stop.requires_grad() ? p.stop.grad_buffer() : std::span<T>();
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t n = len[b];
        const EmissionView<T> em{emissions.data().data() + b * kNumTags, n, batch};
        const auto alpha = crf_detail::forward(em, p);
        const auto beta = crf_detail::backward(em, p);
        const T log_z = crf_detail::log_partition_from(alpha, p);
        auto y = [&](std::size_t t) { return tagv[t * batch + b]; };
        for (std::size_t t = 0; t < n; ++t) {
          const std::size_t row = t * batch + b;
          for (int j = 0; j < kNumTags; ++j) {
            const T marginal = std::exp(alpha[t][j] + beta[t][j] - log_z);
            const T d = scale * (marginal - (y(t) == j ? T(1) : T(0)));
            if (!g_em.empty()) g_em[row * kNumTags + static_cast<std::size_t>(j)] += d;
            if (t == 0 && !g_start.empty()) g_start[static_cast<std::size_t>(j)] += d;
            if (t + 1 == n && !g_stop.empty()) g_stop[static_cast<std::size_t>(j)] += d;
          }
          if (t + 1 < n && !g_tr.empty()) {
            for (int i = 0; i < kNumTags; ++i) {
              for (int j = 0; j < kNumTags; ++j) {
                const T pair = std::exp(alpha[t][i] + p.trans(i, j) + em(t + 1, j) + beta[t + 1][j] - log_z);
                g_tr[static_cast<std::size_t>(i * kNumTags + j)] += scale * pair;
              }
            }
            g_tr[static_cast<std::size_t>(y(t) * kNumTags + y(t + 1))] -= scale;
          }
        }
      }
    });
  }
  return out;
}

}  // namespace ops
}  // namespace polyseg
