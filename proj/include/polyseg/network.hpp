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

// Emission networks: LSTM cell, stacked bidirectional encoder and the four
// tagging architectures.
//
//   baseline  char embeddings -> encoder -> projection
//   model1    one independent encoder per unit stream, outputs summed
//   model2    concatenated stream embeddings -> sigmoid FC layer -> encoder
//   model3    a single encoder shared by all streams, outputs summed
//
// Every architecture ends in an affine projection to the four BMES scores
// that the CRF consumes.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "polyseg/batch.hpp"
#include "polyseg/crf.hpp"
#include "polyseg/embed.hpp"
#include "polyseg/error.hpp"
#include "polyseg/random.hpp"
#include "polyseg/tensor.hpp"

namespace polyseg {

enum class Architecture { kBaseline, kModel1, kModel2, kModel3 };

inline std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::kBaseline:
      return "baseline";
    case Architecture::kModel1:
      return "model1";
    case Architecture::kModel2:
      return "model2";
    case Architecture::kModel3:
      return "model3";
  }
  return "?";
}

inline Architecture parse_architecture(std::string_view s) {
  if (s == "baseline") return Architecture::kBaseline;
  if (s == "model1") return Architecture::kModel1;
  if (s == "model2") return Architecture::kModel2;
  if (s == "model3") return Architecture::kModel3;
  throw ConfigError("unknown architecture '" + std::string(s) + "'");
}

inline std::string_view stream_name(std::size_t s) {
  static constexpr std::array<std::string_view, kNumStreams> kNames{"char", "pinyin", "wubi"};
  return kNames.at(s);
}

struct ModelConfig {
  Architecture arch = Architecture::kBaseline;
  bool use_pinyin = true;  // ignored by the baseline
  bool use_wubi = true;    // ignored by the baseline
  std::array<std::size_t, kNumStreams> vocab_sizes{1, 1, 1};
  std::size_t embed_dim = 256;
  std::size_t hidden = 100;
  std::size_t layers = 3;
  double dropout = 0.5;

  /// Streams the architecture reads, char first.
  std::vector<std::size_t> streams() const {
    std::vector<std::size_t> s{kCharStream};
    if (arch != Architecture::kBaseline) {
      if (use_pinyin) s.push_back(kPinyinStream);
      if (use_wubi) s.push_back(kWubiStream);
    }
    return s;
  }

  void validate() const {
    if (embed_dim == 0 || hidden == 0 || layers == 0) throw ConfigError("model dimensions must be positive");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
    for (auto s : streams()) {
      if (vocab_sizes[s] == 0) throw ConfigError("empty vocabulary for stream " + std::string(stream_name(s)));
    }
  }
};

/// Gate order along the 4h axis: input, forget, cell, output.
template <typename T>
struct LstmParams {
  Tensor<T> wx;  // 4h x d
  Tensor<T> wh;  // 4h x h
  Tensor<T> b;   // 4h

  std::size_t input_size() const { return wx.cols(); }
  std::size_t hidden_size() const { return wh.cols(); }
};

template <typename T>
struct BiLstmLayer {
  LstmParams<T> fwd;
  LstmParams<T> bwd;
};

template <typename T>
using StackedBiLstm = std::vector<BiLstmLayer<T>>;

/// Ordered name -> trainable tensor map. Iteration order is by name.
template <typename T>
class ParamStore {
 public:
  Tensor<T>& add(const std::string& name, Tensor<T> t) {
    auto [it, inserted] = params_.emplace(name, std::move(t));
    if (!inserted) throw ConfigError("duplicate parameter '" + name + "'");
    return it->second;
  }
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  const Tensor<T>& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("no parameter named '" + name + "'");
    return it->second;
  }
  Tensor<T>& at(const std::string& name) { return const_cast<Tensor<T>&>(std::as_const(*this).at(name)); }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }

  void zero_grad() {
    for (auto& [n, t] : params_) t.zero_grad();
  }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) n += t.size();
    return n;
  }

  /// Deep copy with fresh storage.
  ParamStore clone() const {
    ParamStore out;
    for (const auto& [name, t] : params_) out.add(name, t.clone());
    return out;
  }

 private:
  std::map<std::string, Tensor<T>> params_;
};

struct ParamCount {
  std::size_t embedding = 0;
  std::size_t recurrent = 0;
  std::size_t fc = 0;
  std::size_t projection = 0;
  std::size_t crf = 0;
  std::size_t total = 0;
};

/// Forward-pass options. Dropout is active only when `train` and an Rng is
/// supplied.
struct ForwardOptions {
  bool train = false;
  Rng* rng = nullptr;
};

namespace net_detail {

inline std::string lstm_prefix(const std::string& encoder, std::size_t layer, bool forward) {
  return encoder + ".L" + std::to_string(layer) + (forward ? ".fwd" : ".bwd");
}

template <typename T>
Tensor<T> uniform(Rng& rng, Shape shape, double range) {
  Tensor<T> t = Tensor<T>::zeros(std::move(shape), true);
  for (T& v : t.data()) v = static_cast<T>(rng.uniform(-range, range));
  return t;
}

/// Zero/one masks per time step, or undefined tensors where no row is padding.
template <typename T>
std::vector<Tensor<T>> step_masks(std::span<const std::size_t> lengths, std::size_t steps, std::size_t width) {
  const std::size_t rows = lengths.size();
  std::vector<Tensor<T>> masks(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    bool any_pad = false;
    for (auto len : lengths) any_pad = any_pad || t >= len;
    if (!any_pad) continue;
    masks[t] = Tensor<T>::zeros({rows, width});
    for (std::size_t r = 0; r < rows; ++r) {
      if (t < lengths[r]) std::fill_n(masks[t].data().begin() + static_cast<std::ptrdiff_t>(r * width), width, T(1));
    }
  }
  return masks;
}

}  // namespace net_detail

/// One recurrence step given the precomputed input contribution
/// `x_gates` = x W_x^T + b (rows x 4h). `h`/`c` may be undefined (zero state).
template <typename T>
std::pair<Tensor<T>, Tensor<T>> lstm_step(Graph<T>& g, const Tensor<T>& x_gates, const Tensor<T>& h,
                                          const Tensor<T>& c, const Tensor<T>& wh) {
  using namespace ops;
  const std::size_t hs = wh.cols();
  if (x_gates.cols() != 4 * hs || wh.rows() != 4 * hs) {
    throw ShapeError("lstm: gate width " + std::to_string(x_gates.cols()) + " does not match hidden size " +
                     std::to_string(hs));
  }
  if (h.defined() && (h.cols() != hs || h.rows() != x_gates.rows())) {
    throw ShapeError("lstm: hidden state shape " + shape_str(h.shape()) + " does not match");
  }
  Tensor<T> gates = h.defined() ? add(g, x_gates, matmul(g, h, wh, true)) : x_gates;
  Tensor<T> in_forget = sigmoid(g, slice_cols(g, gates, 0, 2 * hs));
  Tensor<T> i = slice_cols(g, in_forget, 0, hs);
  Tensor<T> cell = tanh(g, slice_cols(g, gates, 2 * hs, hs));
  Tensor<T> o = sigmoid(g, slice_cols(g, gates, 3 * hs, hs));
  Tensor<T> c_next = mul(g, i, cell);
  if (c.defined()) {
    Tensor<T> f = slice_cols(g, in_forget, hs, hs);
    c_next = add(g, mul(g, f, c), c_next);
  }
  Tensor<T> h_next = mul(g, o, tanh(g, c_next));
  return {h_next, c_next};
}

/// Standard LSTM cell: i,f,o = sigmoid, g = tanh, c' = f*c + i*g,
/// h' = o * tanh(c'). Inputs are row batches (x: n x d, h and c: n x h).
template <typename T>
std::pair<Tensor<T>, Tensor<T>> lstm_cell(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& h, const Tensor<T>& c,
                                          const LstmParams<T>& p) {
  if (x.cols() != p.input_size()) {
    throw ShapeError("lstm_cell: input width " + std::to_string(x.cols()) + " != " + std::to_string(p.input_size()));
  }
  if (c.defined() && c.shape() != h.shape()) throw ShapeError("lstm_cell: h and c shapes differ");
  Tensor<T> x_gates = ops::add(g, ops::matmul(g, x, p.wx, true), p.b);
  return lstm_step(g, x_gates, h, c, p.wh);
}

/// Runs one direction over a time-major sequence batch x ((steps*rows) x d).
/// Positions past a row's length are zeroed, so the reverse direction starts
/// each row from a zero state at its own last position.
template <typename T>
Tensor<T> lstm_sequence(Graph<T>& g, const Tensor<T>& x, std::size_t steps, std::size_t rows,
                        const LstmParams<T>& p, bool reverse, const std::vector<Tensor<T>>& masks) {
  using namespace ops;
  if (x.cols() != p.input_size()) {
    throw ShapeError("lstm: input width " + std::to_string(x.cols()) + " != " + std::to_string(p.input_size()));
  }
  Tensor<T> x_gates = add(g, matmul(g, x, p.wx, true), p.b);
  std::vector<Tensor<T>> outputs(steps);
  Tensor<T> h, c;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    auto [h_next, c_next] = lstm_step(g, slice_rows(g, x_gates, t * rows, rows), h, c, p.wh);
    if (masks[t].defined()) {
      h_next = mul(g, h_next, masks[t]);
      c_next = mul(g, c_next, masks[t]);
    }
    h = h_next;
    c = c_next;
    outputs[t] = h;
  }
  return steps == 1 ? outputs[0] : stack_rows(g, outputs);
}

/// Stacked bidirectional encoder: each layer concatenates its forward and
/// backward hidden states (2h) and feeds them to the next layer. Dropout, if
/// enabled, is applied to every layer's output.
template <typename T>
Tensor<T> stacked_bilstm(Graph<T>& g, const Tensor<T>& x, std::span<const std::size_t> lengths,
                         const StackedBiLstm<T>& layers, double dropout = 0.0, const ForwardOptions& opt = {}) {
  const std::size_t rows = lengths.size();
  if (rows == 0 || x.rows() % rows != 0) throw ShapeError("stacked_bilstm: input rows do not fit the batch");
  const std::size_t steps = x.rows() / rows;
  if (steps == 0) throw ShapeError("stacked_bilstm: empty sequence");
  if (layers.empty()) throw ShapeError("stacked_bilstm: no layers");
  const auto masks = net_detail::step_masks<T>(lengths, steps, layers.front().fwd.hidden_size());
  Tensor<T> h = x;
  for (const auto& layer : layers) {
    Tensor<T> f = lstm_sequence(g, h, steps, rows, layer.fwd, false, masks);
    Tensor<T> b = lstm_sequence(g, h, steps, rows, layer.bwd, true, masks);
    h = ops::concat(g, std::vector<Tensor<T>>{f, b});
    if (opt.train && opt.rng && dropout > 0.0) {
      h = ops::dropout_mask_apply(g, h, ops::dropout_mask<T>(*opt.rng, h.shape(), dropout));
    }
  }
  return h;
}

template <typename T>
class TaggerModel {
 public:
  /// Randomly initialized parameters; `pretrained` tables (char, Pinyin,
  /// Wubi; null = none) seed the embedding rows of `vocabs`.
  TaggerModel(ModelConfig cfg, std::uint64_t seed, const std::array<const EmbeddingTable*, 3>& pretrained = {},
              const std::array<const UnitVocab*, 3>& vocabs = {})
      : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(seed);
    init_embeddings(rng, pretrained, vocabs);
    const std::size_t d = cfg_.embed_dim;
    if (cfg_.arch == Architecture::kModel1) {
      for (auto s : cfg_.streams()) add_encoder(rng, "encoder." + std::string(stream_name(s)), d);
    } else {
      add_encoder(rng, "encoder", d);
    }
    if (cfg_.arch == Architecture::kModel2) {
      const std::size_t in = d * cfg_.streams().size();
      params_.add("fc.w", net_detail::uniform<T>(rng, {d, in}, std::sqrt(6.0 / static_cast<double>(in + d))));
      params_.add("fc.b", Tensor<T>::zeros({d}, true));
    }
    const std::size_t out = 2 * cfg_.hidden;
    params_.add("proj.w", net_detail::uniform<T>(rng, {out, static_cast<std::size_t>(kNumTags)},
                                                 std::sqrt(6.0 / static_cast<double>(out + kNumTags))));
    params_.add("proj.b", Tensor<T>::zeros({static_cast<std::size_t>(kNumTags)}, true));
    params_.add("crf.transitions", Tensor<T>::zeros({kNumTags, kNumTags}, true));
    params_.add("crf.start", Tensor<T>::zeros({kNumTags}, true));
    params_.add("crf.stop", Tensor<T>::zeros({kNumTags}, true));
  }

  /// Rebuilds a model around existing parameters (checkpoint restore).
  TaggerModel(ModelConfig cfg, ParamStore<T> params) : cfg_(std::move(cfg)), params_(std::move(params)) {
    cfg_.validate();
    TaggerModel reference(cfg_, 0);
    for (const auto& [name, t] : reference.params_) {
      if (!params_.contains(name) || params_.at(name).shape() != t.shape()) {
        throw CheckpointError("parameter '" + name + "' missing or misshapen for " + std::string(to_string(cfg_.arch)));
      }
    }
    if (params_.size() != reference.params_.size()) throw CheckpointError("unexpected extra parameters");
  }

  TaggerModel clone() const { return TaggerModel(cfg_, params_.clone(), 0); }

  const ModelConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  const Tensor<T>& embedding(std::size_t stream) const {
    return params_.at("embed." + std::string(stream_name(stream)));
  }

  /// Encoder parameters: "encoder" for the shared/single encoder, or
  /// "encoder.<stream>" for model1.
  StackedBiLstm<T> encoder(const std::string& name = "encoder") const {
    StackedBiLstm<T> layers;
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
      BiLstmLayer<T> layer;
      for (bool fwd : {true, false}) {
        const auto prefix = net_detail::lstm_prefix(name, l, fwd);
        LstmParams<T> p{params_.at(prefix + ".wx"), params_.at(prefix + ".wh"), params_.at(prefix + ".b")};
        (fwd ? layer.fwd : layer.bwd) = p;
      }
      layers.push_back(layer);
    }
    return layers;
  }

  CrfParams<T> crf() const {
    return {params_.at("crf.transitions"), params_.at("crf.start"), params_.at("crf.stop")};
  }

  ParamCount param_count() const {
    ParamCount c;
    for (const auto& [name, t] : params_) {
      const auto n = t.size();
      if (name.starts_with("embed.")) {
        c.embedding += n;
      } else if (name.starts_with("encoder")) {
        c.recurrent += n;
      } else if (name.starts_with("fc.")) {
        c.fc += n;
      } else if (name.starts_with("proj.")) {
        c.projection += n;
      } else {
        c.crf += n;
      }
      c.total += n;
    }
    return c;
  }

  /// Pre-projection features ((steps*size) x 2h), time-major.
  Tensor<T> features(Graph<T>& g, const Batch& batch, const ForwardOptions& opt = {}) const;

  /// Emission scores ((steps*size) x 4), time-major.
  Tensor<T> emissions(Graph<T>& g, const Batch& batch, const ForwardOptions& opt = {}) const {
    Tensor<T> h = features(g, batch, opt);
    return ops::add(g, ops::matmul(g, h, params_.at("proj.w")), params_.at("proj.b"));
  }

  /// Mean CRF negative log-likelihood of the batch.
  Tensor<T> loss(Graph<T>& g, const Batch& batch, const ForwardOptions& opt = {}) const {
    Tensor<T> em = emissions(g, batch, opt);
    return ops::crf_nll(g, em, std::span<const std::size_t>(batch.lengths), std::span<const std::int32_t>(batch.tags),
                        crf());
  }

  /// Viterbi tag ids per sentence (batch order).
  std::vector<std::vector<std::int32_t>> decode(const Batch& batch, bool constrained = false) const {
    Graph<T> g(false);
    Tensor<T> em = emissions(g, batch);
    const CrfParams<T> p = crf();
    std::vector<std::vector<std::int32_t>> out;
    for (std::size_t b = 0; b < batch.size; ++b) {
      EmissionView<T> view{em.data().data() + b * kNumTags, batch.lengths[b], batch.size};
      out.push_back(viterbi(view, p, constrained).tags);
    }
    return out;
  }

 private:
  TaggerModel(ModelConfig cfg, ParamStore<T> params, int) : cfg_(std::move(cfg)), params_(std::move(params)) {}

  void init_embeddings(Rng& rng, const std::array<const EmbeddingTable*, 3>& pretrained,
                       const std::array<const UnitVocab*, 3>& vocabs) {
    const auto streams = cfg_.streams();
    std::array<UnitVocab, 3> placeholder;
    std::array<const UnitVocab*, 3> v{};
    std::array<const EmbeddingTable*, 3> tables{};
    for (std::size_t s = 0; s < kNumStreams; ++s) {
      const bool used = std::find(streams.begin(), streams.end(), s) != streams.end();
      if (vocabs[s] && vocabs[s]->size() != cfg_.vocab_sizes[s]) {
        throw ConfigError("vocabulary size for stream " + std::string(stream_name(s)) + " does not match config");
      }
      if (vocabs[s]) {
        v[s] = vocabs[s];
        tables[s] = used ? pretrained[s] : nullptr;
      } else {
        // Sizes only; without unit strings pre-trained rows cannot be matched.
        std::vector<std::string> units{std::string(UnitVocab::kUnk)};
        for (std::size_t i = 1; i < (used ? cfg_.vocab_sizes[s] : 1); ++i) units.push_back("#" + std::to_string(i));
        placeholder[s] = UnitVocab::from_units(units);
        v[s] = &placeholder[s];
      }
    }
    // Unused streams get a single-row vocabulary so the random draws of the
    // used ones do not depend on their sizes.
    for (std::size_t s = 0; s < kNumStreams; ++s) {
      const bool used = std::find(streams.begin(), streams.end(), s) != streams.end();
      if (!used) {
        placeholder[s] = UnitVocab();
        v[s] = &placeholder[s];
      }
    }
    auto tensors = init_model_embeddings<T>(tables, v, cfg_.embed_dim, rng);
    for (auto s : streams) params_.add("embed." + std::string(stream_name(s)), tensors[s]);
  }

  void add_encoder(Rng& rng, const std::string& name, std::size_t input) {
    const std::size_t h = cfg_.hidden;
    const double range = 1.0 / std::sqrt(static_cast<double>(h));
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
      const std::size_t d = l == 0 ? input : 2 * h;
      for (bool fwd : {true, false}) {
        const auto prefix = net_detail::lstm_prefix(name, l, fwd);
        params_.add(prefix + ".wx", net_detail::uniform<T>(rng, {4 * h, d}, range));
        params_.add(prefix + ".wh", net_detail::uniform<T>(rng, {4 * h, h}, range));
        Tensor<T> b = Tensor<T>::zeros({4 * h}, true);
        for (std::size_t k = h; k < 2 * h; ++k) b[k] = T(1);  // forget gate
        params_.add(prefix + ".b", b);
      }
    }
  }

  ModelConfig cfg_;
  ParamStore<T> params_;
};

template <typename T>
Tensor<T> forward_baseline(Graph<T>& g, const TaggerModel<T>& m, const Batch& batch, const ForwardOptions& opt = {});
template <typename T>
Tensor<T> forward_model1(Graph<T>& g, const TaggerModel<T>& m, const Batch& batch, const ForwardOptions& opt = {});
template <typename T>
Tensor<T> forward_model2(Graph<T>& g, const TaggerModel<T>& m, const Batch& batch, const ForwardOptions& opt = {});
template <typename T>
Tensor<T> forward_model3(Graph<T>& g, const TaggerModel<T>& m, const Batch& batch, const ForwardOptions& opt = {});

namespace net_detail {

template <typename T>
Tensor<T> embed(Graph<T>& g, const TaggerModel<T>& m, const Batch& batch, std::size_t stream) {
  return ops::gather(g, m.embedding(stream), std::span<const std::int32_t>(batch.ids[stream]));
}

}  // namespace net_detail

/// Char embeddings through the single encoder.
template <typename T>
Tensor<T> baseline_features(Graph<T>& g, const TaggerModel<T>& m, const Batch& batch, const ForwardOptions& opt) {
  return stacked_bilstm(g, net_detail::embed(g, m, batch, kCharStream), std::span<const std::size_t>(batch.lengths),
                        m.encoder(), m.config().dropout, opt);
}

/// Independent encoder per stream; outputs summed.
template <typename T>
Tensor<T> model1_features(Graph<T>& g, const TaggerModel<T>& m, const Batch& batch, const ForwardOptions& opt) {
  Tensor<T> sum;
  for (auto s : m.config().streams()) {
    Tensor<T> h = stacked_bilstm(g, net_detail::embed(g, m, batch, s), std::span<const std::size_t>(batch.lengths),
                                 m.encoder("encoder." + std::string(stream_name(s))), m.config().dropout, opt);
    sum = sum.defined() ? ops::add(g, sum, h) : h;
  }
  return sum;
}

/// sigmoid(W_fc [x_c; x_p; x_w] + b_fc), one row per position.
template <typename T>
Tensor<T> model2_fused_input(Graph<T>& g, const TaggerModel<T>& m, const Batch& batch) {
  std::vector<Tensor<T>> parts;
  for (auto s : m.config().streams()) parts.push_back(net_detail::embed(g, m, batch, s));
  Tensor<T> x_in = parts.size() == 1 ? parts[0] : ops::concat(g, parts);
  return ops::sigmoid(g, ops::add(g, ops::matmul(g, x_in, m.params().at("fc.w"), true), m.params().at("fc.b")));
}

/// Fused input through the single encoder.
template <typename T>
Tensor<T> model2_features(Graph<T>& g, const TaggerModel<T>& m, const Batch& batch, const ForwardOptions& opt) {
  return stacked_bilstm(g, model2_fused_input(g, m, batch), std::span<const std::size_t>(batch.lengths), m.encoder(),
                        m.config().dropout, opt);
}

/// One shared encoder applied to every stream; outputs summed.
///
/// The streams are run as one stacked batch of size * n_streams rows (row
/// t*(n*size) + s*size + b), so the tied weights see all three passes in
/// the same matrix products and their gradients accumulate in one place.
template <typename T>
Tensor<T> model3_features(Graph<T>& g, const TaggerModel<T>& m, const Batch& batch, const ForwardOptions& opt) {
  const auto streams = m.config().streams();
  const std::size_t n = streams.size();
  const std::size_t B = batch.size, steps = batch.steps;
  std::vector<Tensor<T>> parts;
  for (auto s : streams) parts.push_back(net_detail::embed(g, m, batch, s));
  if (n == 1) {
    return stacked_bilstm(g, parts[0], std::span<const std::size_t>(batch.lengths), m.encoder(), m.config().dropout,
                          opt);
  }
  // parts stacked: row s*(steps*B) + t*B + b.
  Tensor<T> stacked = ops::stack_rows(g, parts);
  std::vector<std::int32_t> interleave(n * steps * B);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t b = 0; b < B; ++b) {
        interleave[t * n * B + s * B + b] = static_cast<std::int32_t>(s * steps * B + t * B + b);
      }
    }
  }
  Tensor<T> x = ops::gather(g, stacked, std::span<const std::int32_t>(interleave));
  std::vector<std::size_t> lengths;
  for (std::size_t s = 0; s < n; ++s) lengths.insert(lengths.end(), batch.lengths.begin(), batch.lengths.end());
  Tensor<T> h = stacked_bilstm(g, x, std::span<const std::size_t>(lengths), m.encoder(), m.config().dropout, opt);
  Tensor<T> sum;
  std::vector<std::int32_t> rows(steps * B);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t b = 0; b < B; ++b) rows[t * B + b] = static_cast<std::int32_t>(t * n * B + s * B + b);
    }
    Tensor<T> part = ops::gather(g, h, std::span<const std::int32_t>(rows));
    sum = sum.defined() ? ops::add(g, sum, part) : part;
  }
  return sum;
}

template <typename T>
Tensor<T> TaggerModel<T>::features(Graph<T>& g, const Batch& batch, const ForwardOptions& opt) const {
  switch (cfg_.arch) {
    case Architecture::kBaseline:
      return baseline_features(g, *this, batch, opt);
    case Architecture::kModel1:
      return model1_features(g, *this, batch, opt);
    case Architecture::kModel2:
      return model2_features(g, *this, batch, opt);
    case Architecture::kModel3:
      return model3_features(g, *this, batch, opt);
  }
  throw ConfigError("unknown architecture");
}

namespace net_detail {

template <typename T>
void require_arch(const TaggerModel<T>& m, Architecture a) {
  if (m.config().arch != a) {
    throw ConfigError("model is " + std::string(to_string(m.config().arch)) + ", not " + std::string(to_string(a)));
  }
}

template <typename T>
Tensor<T> project(Graph<T>& g, const TaggerModel<T>& m, const Tensor<T>& h) {
  return ops::add(g, ops::matmul(g, h, m.params().at("proj.w")), m.params().at("proj.b"));
}

}  // namespace net_detail

template <typename T>
Tensor<T> forward_baseline(Graph<T>& g, const TaggerModel<T>& m, const Batch& batch, const ForwardOptions& opt) {
  net_detail::require_arch(m, Architecture::kBaseline);
  return net_detail::project(g, m, baseline_features(g, m, batch, opt));
}

template <typename T>
Tensor<T> forward_model1(Graph<T>& g, const TaggerModel<T>& m, const Batch& batch, const ForwardOptions& opt) {
  net_detail::require_arch(m, Architecture::kModel1);
  return net_detail::project(g, m, model1_features(g, m, batch, opt));
}

template <typename T>
Tensor<T> forward_model2(Graph<T>& g, const TaggerModel<T>& m, const Batch& batch, const ForwardOptions& opt) {
  net_detail::require_arch(m, Architecture::kModel2);
  return net_detail::project(g, m, model2_features(g, m, batch, opt));
}

template <typename T>
Tensor<T> forward_model3(Graph<T>& g, const TaggerModel<T>& m, const Batch& batch, const ForwardOptions& opt) {
  net_detail::require_arch(m, Architecture::kModel3);
  return net_detail::project(g, m, model3_features(g, m, batch, opt));
}

/// Single-sentence batch from three aligned id sequences.
inline Batch sentence_batch(std::span<const std::int32_t> char_ids, std::span<const std::int32_t> pinyin_ids,
                            std::span<const std::int32_t> wubi_ids) {
  if (pinyin_ids.size() != char_ids.size() || wubi_ids.size() != char_ids.size()) {
    throw AlignmentError("unit streams have lengths " + std::to_string(char_ids.size()) + ", " +
                         std::to_string(pinyin_ids.size()) + ", " + std::to_string(wubi_ids.size()));
  }
  EncodedSentence s;
  s.char_ids.assign(char_ids.begin(), char_ids.end());
  s.pinyin_ids.assign(pinyin_ids.begin(), pinyin_ids.end());
  s.wubi_ids.assign(wubi_ids.begin(), wubi_ids.end());
  s.tags.assign(char_ids.size(), -1);
  s.length = char_ids.size();
  return make_batch(s);
}

}  // namespace polyseg
