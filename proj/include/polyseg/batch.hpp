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

#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "polyseg/corpus.hpp"
#include "polyseg/error.hpp"
#include "polyseg/random.hpp"

namespace polyseg {

enum Stream : std::size_t { kCharStream = 0, kPinyinStream = 1, kWubiStream = 2 };
inline constexpr std::size_t kNumStreams = 3;

/// Padded, time-major mini-batch: entry t * size + b is sentence b at step t.
struct Batch {
  std::size_t size = 0;
  std::size_t steps = 0;
  std::vector<std::size_t> lengths;
  std::array<std::vector<std::int32_t>, kNumStreams> ids;  // padding id 0
  std::vector<std::int32_t> tags;                          // padding -1
  std::vector<std::uint8_t> mask;                          // 1 on real positions
  std::vector<std::size_t> index;                          // position in the source list

  std::size_t real_positions() const { return std::accumulate(lengths.begin(), lengths.end(), std::size_t{0}); }
};

/// Pads `sentences` to `steps` positions (at least the longest one).
inline Batch make_batch(std::span<const EncodedSentence* const> sentences, std::size_t steps = 0) {
  Batch b;
  b.size = sentences.size();
  if (b.size == 0) throw ShapeError("make_batch: no sentences");
  for (const auto* s : sentences) {
    if (s->length == 0) throw ShapeError("make_batch: empty sentence");
    if (s->char_ids.size() != s->length || s->pinyin_ids.size() != s->length || s->wubi_ids.size() != s->length ||
        s->tags.size() != s->length) {
      throw AlignmentError("make_batch: unit streams of a sentence have different lengths");
    }
    steps = std::max(steps, s->length);
  }
  b.steps = steps;
  for (auto& v : b.ids) v.assign(steps * b.size, 0);
  b.tags.assign(steps * b.size, -1);
  b.mask.assign(steps * b.size, 0);
  for (std::size_t j = 0; j < b.size; ++j) {
    const auto& s = *sentences[j];
    b.lengths.push_back(s.length);
    b.index.push_back(j);
    for (std::size_t t = 0; t < s.length; ++t) {
      const std::size_t k = t * b.size + j;
      b.ids[kCharStream][k] = s.char_ids[t];
      b.ids[kPinyinStream][k] = s.pinyin_ids[t];
      b.ids[kWubiStream][k] = s.wubi_ids[t];
      b.tags[k] = s.tags[t];
      b.mask[k] = 1;
    }
  }
  return b;
}

inline Batch make_batch(const EncodedSentence& s) {
  const EncodedSentence* p = &s;
  return make_batch(std::span<const EncodedSentence* const>(&p, 1));
}

/// Consecutive batches of `batch_size` (the last may be smaller). With
/// `shuffle`, sentence order is a permutation determined by `seed`.
inline std::vector<Batch> make_batches(const std::vector<EncodedSentence>& data, std::size_t batch_size,
                                       std::uint64_t seed, bool shuffle) {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    Rng rng(seed);
    rng.shuffle(order);
  }
  std::vector<Batch> out;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
    const std::size_t end = std::min(order.size(), begin + batch_size);
    std::vector<const EncodedSentence*> group;
    for (std::size_t i = begin; i < end; ++i) group.push_back(&data[order[i]]);
    Batch b = make_batch(group);
    for (std::size_t i = begin; i < end; ++i) b.index[i - begin] = order[i];
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace polyseg
