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

// Skip-gram with negative sampling over unit sequences (characters, Pinyin
// codes or Wubi codes, each treated as an opaque token), plus word2vec text
// format I/O and model embedding initialization.

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "polyseg/corpus.hpp"
#include "polyseg/error.hpp"
#include "polyseg/random.hpp"
#include "polyseg/tensor.hpp"

namespace polyseg {

struct EmbeddingTable {
  UnitVocab vocab;
  std::size_t dim = 0;
  std::vector<float> vectors;  // vocab.size() x dim, row-major

  std::span<float> row(std::size_t i) { return {vectors.data() + i * dim, dim}; }
  std::span<const float> row(std::size_t i) const { return {vectors.data() + i * dim, dim}; }
};

struct SkipGramConfig {
  std::size_t dim = 256;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double lr = 0.025;
  std::uint64_t seed = 1;
  std::size_t min_count = 1;
};

struct SkipGramResult {
  EmbeddingTable table;
  std::vector<double> epoch_loss;  // mean negative-sampling loss per (center, context) pair
};

namespace embed_detail {

inline float sigmoid(float x) {
  if (x >= 0) return 1.0f / (1.0f + std::exp(-x));
  const float e = std::exp(x);
  return e / (1.0f + e);
}

/// Cumulative unigram^0.75 distribution over vocabulary ids (UNK excluded).
class NoiseSampler {
 public:
  explicit NoiseSampler(const std::vector<double>& counts) {
    double total = 0;
    cumulative_.reserve(counts.size());
    for (double c : counts) {
      total += std::pow(c, 0.75);
      cumulative_.push_back(total);
    }
    for (double& c : cumulative_) c /= total;
  }

  std::int32_t sample(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<std::int32_t>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace embed_detail

/// Trains input vectors with SGD and linearly decaying learning rate. The
/// result is fully determined by `cfg.seed`.
inline SkipGramResult train_skipgram(const std::vector<std::vector<std::string>>& corpus, const SkipGramConfig& cfg) {
  if (cfg.dim < 1 || cfg.window < 1 || cfg.negatives < 1) {
    throw ConfigError("skip-gram needs dim, window and negatives >= 1");
  }
  std::size_t total_tokens = 0;
  for (const auto& s : corpus) total_tokens += s.size();
  if (total_tokens == 0) throw EmptyCorpus();

  SkipGramResult result;
  EmbeddingTable& table = result.table;
  table.vocab = build_vocab(corpus, cfg.min_count);
  table.dim = cfg.dim;
  const std::size_t V = table.vocab.size();

  std::vector<std::vector<std::int32_t>> ids;
  std::vector<double> counts(V, 0.0);
  for (const auto& s : corpus) {
    auto& row = ids.emplace_back();
    for (const auto& u : s) {
      const auto id = table.vocab.lookup(u);
      if (id == table.vocab.unk_id()) continue;
      row.push_back(id);
      counts[static_cast<std::size_t>(id)] += 1.0;
    }
  }

  Rng rng(cfg.seed);
  table.vectors.resize(V * cfg.dim);
  const double half = 0.5 / static_cast<double>(cfg.dim);
  for (float& v : table.vectors) v = static_cast<float>(rng.uniform(-half, half));
  std::vector<float> context(V * cfg.dim, 0.0f);
  if (V == 1) return result;  // only UNK: nothing to train
  const embed_detail::NoiseSampler noise(counts);

  const double total_steps = static_cast<double>(cfg.epochs) * static_cast<double>(total_tokens);
  double processed = 0;
  std::vector<float> grad_in(cfg.dim);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss = 0;
    std::size_t pairs = 0;
    for (const auto& sent : ids) {
      for (std::size_t pos = 0; pos < sent.size(); ++pos) {
        const float lr = static_cast<float>(cfg.lr * std::max(1e-4, 1.0 - processed / total_steps));
        processed += 1;
        const std::size_t lo = pos >= cfg.window ? pos - cfg.window : 0;
        const std::size_t hi = std::min(sent.size(), pos + cfg.window + 1);
        float* in = table.vectors.data() + static_cast<std::size_t>(sent[pos]) * cfg.dim;
        for (std::size_t c = lo; c < hi; ++c) {
          if (c == pos) continue;
          std::fill(grad_in.begin(), grad_in.end(), 0.0f);
          for (std::size_t k = 0; k <= cfg.negatives; ++k) {
            std::int32_t target;
            float label;
            if (k == 0) {
              target = sent[c];
              label = 1.0f;
            } else {
              target = noise.sample(rng);
              if (target == sent[c]) continue;
              label = 0.0f;
            }
            float* out = context.data() + static_cast<std::size_t>(target) * cfg.dim;
            float dot = 0;
            for (std::size_t d = 0; d < cfg.dim; ++d) dot += in[d] * out[d];
            const float p = embed_detail::sigmoid(dot);
            loss -= std::log(std::max(label > 0 ? p : 1.0f - p, 1e-7f));
            const float gsc = (label - p) * lr;
            for (std::size_t d = 0; d < cfg.dim; ++d) {
              grad_in[d] += gsc * out[d];
              out[d] += gsc * in[d];
            }
          }
          for (std::size_t d = 0; d < cfg.dim; ++d) in[d] += grad_in[d];
          ++pairs;
        }
      }
    }
    result.epoch_loss.push_back(pairs ? loss / static_cast<double>(pairs) : 0.0);
  }
  return result;
}

/// word2vec text format: "count dim" header, then "unit v1 .. v_dim" rows.
inline void save_text(const EmbeddingTable& table, std::ostream& out) {
  out << table.vocab.size() << ' ' << table.dim << '\n';
  char buf[64];
  for (std::size_t i = 0; i < table.vocab.size(); ++i) {
    out << table.vocab.unit(static_cast<std::int32_t>(i));
    for (float v : table.row(i)) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(end - buf));
    }
    out << '\n';
  }
}

inline void save_text(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write embeddings to '" + path.string() + "'");
  save_text(table, out);
}

/// Loads a word2vec text file. The first row must be "<UNK>" (as written by
/// save_text) or it is inserted with a zero vector.
inline EmbeddingTable load_text(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError("missing embedding header", 1);
  std::size_t count = 0, dim = 0;
  {
    std::istringstream hs(line);
    if (!(hs >> count >> dim) || dim == 0) throw ParseError("bad embedding header '" + line + "'", 1);
  }
  std::vector<std::string> units;
  std::vector<float> vectors;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto words = split_words(line);
    if (words.size() != dim + 1) {
      throw ParseError("expected " + std::to_string(dim) + " values, found " + std::to_string(words.size() - 1),
                       lineno);
    }
    units.push_back(words[0]);
    for (std::size_t d = 1; d <= dim; ++d) {
      float v = 0;
      const auto& w = words[d];
      auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
      if (ec != std::errc() || ptr != w.data() + w.size() || !std::isfinite(v)) {
        throw ParseError("bad value '" + w + "'", lineno);
      }
      vectors.push_back(v);
    }
  }
  if (units.size() != count) {
    throw ParseError("header declares " + std::to_string(count) + " rows, found " + std::to_string(units.size()));
  }
  if (units.empty() || units.front() != UnitVocab::kUnk) {
    units.insert(units.begin(), std::string(UnitVocab::kUnk));
    vectors.insert(vectors.begin(), dim, 0.0f);
  }
  EmbeddingTable t;
  t.vocab = UnitVocab::from_units(units);
  t.dim = dim;
  t.vectors = std::move(vectors);
  return t;
}

inline EmbeddingTable load_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open embeddings '" + path.string() + "'");
  return load_text(in);
}

inline constexpr double kEmbeddingInitRange = 0.05;

/// Trainable (|V| x dim) matrices for the char, Pinyin and Wubi vocabularies.
/// Rows are drawn uniformly from [-0.05, 0.05]; rows whose unit appears in a
/// supplied pre-trained table are then overwritten. UNK is never copied.
template <typename T>
std::array<Tensor<T>, 3> init_model_embeddings(const std::array<const EmbeddingTable*, 3>& pretrained,
                                               const std::array<const UnitVocab*, 3>& vocabs, std::size_t dim,
                                               Rng& rng) {
  std::array<Tensor<T>, 3> out;
  for (std::size_t k = 0; k < 3; ++k) {
    const UnitVocab& vocab = *vocabs[k];
    out[k] = Tensor<T>::zeros({vocab.size(), dim}, true);
    for (T& v : out[k].data()) v = static_cast<T>(rng.uniform(-kEmbeddingInitRange, kEmbeddingInitRange));
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const EmbeddingTable* table = pretrained[k];
    if (!table) continue;
    if (table->dim != dim) {
      throw ConfigError("pre-trained embedding dim " + std::to_string(table->dim) + " does not match model dim " +
                        std::to_string(dim));
    }
    const UnitVocab& vocab = *vocabs[k];
    for (std::size_t id = 1; id < vocab.size(); ++id) {
      const auto& unit = vocab.unit(static_cast<std::int32_t>(id));
      if (!table->vocab.contains(unit)) continue;
      auto src = table->row(static_cast<std::size_t>(table->vocab.lookup(unit)));
      for (std::size_t d = 0; d < dim; ++d) out[k].at(id, d) = static_cast<T>(src[d]);
    }
  }
  return out;
}

}  // namespace polyseg
