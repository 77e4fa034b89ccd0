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

// Adam, gradient clipping, batched evaluation and the early-stopping
// training loop.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyseg/batch.hpp"
#include "polyseg/corpus.hpp"
#include "polyseg/error.hpp"
#include "polyseg/eval.hpp"
#include "polyseg/network.hpp"
#include "polyseg/random.hpp"
#include "polyseg/tensor.hpp"

namespace polyseg {

struct TrainConfig {
  ModelConfig model;  // arch, dims, dropout
  double lr = 5e-4;
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  std::size_t patience = 10;
  std::uint64_t seed = 1;
  std::size_t max_sentence_length = kDefaultMaxSentenceLength;
  double clip_norm = 5.0;  // 0 disables clipping
  bool constrain_decode = false;

  void validate() const {
    model.validate();
    if (!(lr > 0) || batch_size == 0 || epochs == 0 || max_sentence_length == 0) {
      throw ConfigError("lr, batch size, epochs and max length must be positive");
    }
    if (clip_norm < 0) throw ConfigError("clip norm must be >= 0");
  }
};

template <typename T>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
};

/// Bias-corrected Adam update of `params` in place from their gradient
/// buffers; a parameter without a gradient is treated as having zero
/// gradient. Moments are allocated on the first call.
template <typename T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state, double lr) {
  if (state.step == 0 && state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), T(0));
      state.v.emplace_back(p.size(), T(0));
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: parameter count changed");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (state.m[k].size() != params[k].size()) {
      throw ShapeError("adam_step: parameter " + std::to_string(k) + " has " + std::to_string(params[k].size()) +
                       " entries, moments have " + std::to_string(state.m[k].size()));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(state.beta1, t));
  const T c2 = static_cast<T>(1.0 - std::pow(state.beta2, t));
  const T rate = static_cast<T>(lr), eps = static_cast<T>(state.eps);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto w = params[k].data();
    auto& m = state.m[k];
    auto& v = state.v[k];
    const bool has = params[k].has_grad();
    const auto g = params[k].grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const T gi = has ? g[i] : T(0);
      m[i] = b1 * m[i] + (T(1) - b1) * gi;
      v[i] = b2 * v[i] + (T(1) - b2) * gi * gi;
      w[i] -= rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
}

template <typename T>
double global_grad_norm(std::span<const Tensor<T>> params) {
  double sq = 0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (T g : p.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(sq);
}

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(std::span<Tensor<T>> params, double max_norm) {
  const double norm = global_grad_norm(std::span<const Tensor<T>>(params.data(), params.size()));
  if (max_norm > 0 && norm > max_norm) {
    const T f = static_cast<T>(max_norm / norm);
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (T& g : p.grad()) g *= f;
    }
  }
  return norm;
}

/// Viterbi tag ids for every sentence, in input order.
template <typename T>
std::vector<std::vector<std::int32_t>> predict(const TaggerModel<T>& model, const std::vector<EncodedSentence>& data,
                                               bool constrained = false, std::size_t batch_size = 64) {
  std::vector<std::vector<std::int32_t>> out(data.size());
  for (const auto& batch : make_batches(data, batch_size, 0, false)) {
    auto tags = model.decode(batch, constrained);
    for (std::size_t b = 0; b < batch.size; ++b) out[batch.index[b]] = std::move(tags[b]);
  }
  return out;
}

/// Word-level P/R/F of the model's predictions against the gold tags.
template <typename T>
Prf evaluate(const TaggerModel<T>& model, const std::vector<EncodedSentence>& data, bool constrained = false) {
  const auto pred = predict(model, data, constrained);
  std::vector<SpanSet> gold_spans, pred_spans;
  for (std::size_t i = 0; i < data.size(); ++i) {
    gold_spans.push_back(tags_to_spans(std::span<const std::int32_t>(data[i].tags)));
    pred_spans.push_back(tags_to_spans(std::span<const std::int32_t>(pred[i])));
  }
  return score(gold_spans, pred_spans);
}

/// Mean sentence NLL with dropout off.
template <typename T>
double mean_loss(const TaggerModel<T>& model, const std::vector<EncodedSentence>& data, std::size_t batch_size = 64) {
  if (data.empty()) throw EmptyCorpus();
  double total = 0;
  for (const auto& batch : make_batches(data, batch_size, 0, false)) {
    Graph<T> g(false);
    total += static_cast<double>(model.loss(g, batch).item()) * static_cast<double>(batch.size);
  }
  return total / static_cast<double>(data.size());
}

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;  // mean batch loss (dropout on)
  Prf dev;
  bool improved = false;
  std::vector<double> batch_seconds;

  double mean_batch_seconds() const {
    double s = 0;
    for (double b : batch_seconds) s += b;
    return batch_seconds.empty() ? 0.0 : s / static_cast<double>(batch_seconds.size());
  }
};

template <typename T>
struct FitResult {
  ParamStore<T> best_params;
  std::size_t best_epoch = 0;
  double best_dev_f1 = -1;
  std::vector<EpochRecord> history;
  bool stopped_early = false;  // by patience or by the callback
};

/// Called after every epoch with the current (not best) model; return false
/// to stop training.
template <typename T>
using EpochCallback = std::function<bool(const EpochRecord&, const TaggerModel<T>&)>;

/// Trains `model` in place. Each epoch visits the training set in a fresh
/// seeded order; dev F1 (on `train` when `dev` is empty) selects the best
/// epoch, and training stops once `patience` consecutive epochs fail to
/// improve on it. On return `model` holds the best parameters.
template <typename T>
FitResult<T> fit(const TrainConfig& cfg, TaggerModel<T>& model, const std::vector<EncodedSentence>& train,
                 const std::vector<EncodedSentence>& dev, const EpochCallback<T>& on_epoch = {}) {
  cfg.validate();
  if (train.empty()) throw EmptyCorpus();
  const auto& selection = dev.empty() ? train : dev;

  std::vector<Tensor<T>> params;
  for (auto& [name, t] : model.params()) params.push_back(t);
  AdamState<T> adam;
  Rng dropout_rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 1);
  Rng order_rng(cfg.seed);

  FitResult<T> result;
  std::size_t bad_epochs = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0;
    const auto batches = make_batches(train, cfg.batch_size, order_rng.next(), true);
    for (const auto& batch : batches) {
      const auto start = std::chrono::steady_clock::now();
      Graph<T> g;
      ForwardOptions opt{true, &dropout_rng};
      Tensor<T> loss = model.loss(g, batch, opt);
      const double value = static_cast<double>(loss.item());
      if (!std::isfinite(value)) throw DivergedError(epoch);
      model.params().zero_grad();
      g.backward(loss);
      clip_grad_norm(std::span<Tensor<T>>(params), cfg.clip_norm);
      adam_step(std::span<Tensor<T>>(params), adam, cfg.lr);
      loss_sum += value;
      rec.batch_seconds.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    rec.train_loss = loss_sum / static_cast<double>(batches.size());
    rec.dev = evaluate(model, selection, cfg.constrain_decode);
    rec.improved = rec.dev.f1 > result.best_dev_f1;
    if (rec.improved) {
      result.best_dev_f1 = rec.dev.f1;
      result.best_epoch = epoch;
      result.best_params = model.params().clone();
      bad_epochs = 0;
    } else {
      ++bad_epochs;
    }
    result.history.push_back(rec);
    const bool keep_going = on_epoch ? on_epoch(rec, model) : true;
    if (!keep_going || bad_epochs > cfg.patience) {
      result.stopped_early = epoch < cfg.epochs;
      break;
    }
  }
  for (auto& [name, t] : model.params()) {
    const auto src = result.best_params.at(name).data();
    std::copy(src.begin(), src.end(), t.data().begin());
  }
  return result;
}

}  // namespace polyseg
