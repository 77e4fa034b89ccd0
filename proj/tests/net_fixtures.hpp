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

#include <string>
#include <vector>

#include "polyseg/batch.hpp"
#include "polyseg/network.hpp"
#include "polyseg/random.hpp"

namespace polyseg::testing {

inline ModelConfig tiny_config(Architecture arch, std::size_t vocab = 6) {
  ModelConfig c;
  c.arch = arch;
  c.vocab_sizes = {vocab, vocab, vocab};
  c.embed_dim = 4;
  c.hidden = 3;
  c.layers = 3;
  c.dropout = 0.0;
  return c;
}

/// Random labelled sentences with ids in [0, vocab).
inline std::vector<EncodedSentence> random_sentences(Rng& rng, std::initializer_list<std::size_t> lengths,
                                                     std::size_t vocab = 6) {
  std::vector<EncodedSentence> out;
  for (auto n : lengths) {
    EncodedSentence e;
    for (std::size_t t = 0; t < n; ++t) {
      e.char_ids.push_back(static_cast<std::int32_t>(rng.below(vocab)));
      e.pinyin_ids.push_back(static_cast<std::int32_t>(rng.below(vocab)));
      e.wubi_ids.push_back(static_cast<std::int32_t>(rng.below(vocab)));
      e.tags.push_back(static_cast<std::int32_t>(rng.below(4)));
    }
    e.length = n;
    out.push_back(e);
  }
  return out;
}

inline Batch batch_of(const std::vector<EncodedSentence>& data, std::size_t steps = 0) {
  std::vector<const EncodedSentence*> ptrs;
  for (const auto& s : data) ptrs.push_back(&s);
  return make_batch(std::span<const EncodedSentence* const>(ptrs), steps);
}

/// Copies values of `src` into the same-named parameters of `dst`, after
/// renaming with `rename` (empty result = skip).
template <typename T, typename Rename>
void copy_params(const TaggerModel<T>& src, TaggerModel<T>& dst, Rename rename) {
  for (const auto& [name, t] : src.params()) {
    const std::string target = rename(name);
    if (target.empty()) continue;
    auto dv = dst.params().at(target).data();
    std::copy(t.data().begin(), t.data().end(), dv.begin());
  }
}

/// Fills every parameter with uniform noise (the zero-initialized CRF and
/// biases would otherwise hide gradient errors).
template <typename T>
void randomize(TaggerModel<T>& m, Rng& rng, double range = 0.5) {
  for (auto& [name, t] : m.params()) {
    for (T& v : t.data()) v = static_cast<T>(rng.uniform(-range, range));
  }
}

}  // namespace polyseg::testing
