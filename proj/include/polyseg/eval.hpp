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

// Word-level segmentation scoring (micro-averaged precision/recall/F1 and
// out-of-vocabulary recall) over half-open character spans.

#pragma once

#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "polyseg/corpus.hpp"
#include "polyseg/error.hpp"
#include "polyseg/utf8.hpp"

namespace polyseg {

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

/// Sorted, non-overlapping spans partitioning [0, length).
using SpanSet = std::vector<Span>;

/// Converts a tag sequence to word spans. Illegal sequences are repaired:
/// a B or M not followed by M/E closes its word there, and an M or E with no
/// open word starts one at its own position.
inline SpanSet tags_to_spans(std::span<const Tag> tags) {
  SpanSet spans;
  bool open = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const Tag t = tags[i];
    const bool continues = i + 1 < tags.size() && (tags[i + 1] == Tag::M || tags[i + 1] == Tag::E);
    switch (t) {
      case Tag::S:
        spans.push_back({i, i + 1});
        open = false;
        break;
      case Tag::B:
      case Tag::M:
        if (t == Tag::B || !open) {
          start = i;
          open = true;
        }
        if (!continues) {
          spans.push_back({start, i + 1});
          open = false;
        }
        break;
      case Tag::E:
        if (!open) start = i;
        spans.push_back({start, i + 1});
        open = false;
        break;
    }
  }
  return spans;
}

inline SpanSet tags_to_spans(std::span<const std::int32_t> ids) {
  std::vector<Tag> tags;
  tags.reserve(ids.size());
  for (auto id : ids) {
    if (id < 0 || id >= kNumTags) throw IndexError("tag id " + std::to_string(id) + " out of range");
    tags.push_back(static_cast<Tag>(id));
  }
  return tags_to_spans(std::span<const Tag>(tags));
}

inline bool is_partition(const SpanSet& spans, std::size_t length) {
  std::size_t pos = 0;
  for (const auto& s : spans) {
    if (s.begin != pos || s.end <= s.begin) return false;
    pos = s.end;
  }
  return pos == length;
}

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t correct = 0;
  std::size_t gold_words = 0;
  std::size_t pred_words = 0;
};

inline Prf make_prf(std::size_t correct, std::size_t gold, std::size_t pred) {
  Prf r;
  r.correct = correct;
  r.gold_words = gold;
  r.pred_words = pred;
  r.precision = pred ? static_cast<double>(correct) / static_cast<double>(pred) : 0.0;
  r.recall = gold ? static_cast<double>(correct) / static_cast<double>(gold) : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

inline std::size_t span_end(const SpanSet& s) { return s.empty() ? 0 : s.back().end; }

/// Micro-averaged word P/R/F over aligned sentences (exact span match).
inline Prf score(const std::vector<SpanSet>& gold, const std::vector<SpanSet>& pred) {
  if (gold.size() != pred.size()) {
    throw AlignmentError("score: " + std::to_string(gold.size()) + " gold vs " + std::to_string(pred.size()) +
                         " predicted sentences");
  }
  std::size_t correct = 0, n_gold = 0, n_pred = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (span_end(gold[i]) != span_end(pred[i])) {
      throw AlignmentError("score: sentence " + std::to_string(i + 1) + " has different lengths");
    }
    const std::set<Span> g(gold[i].begin(), gold[i].end());
    for (const auto& s : pred[i]) correct += g.count(s);
    n_gold += gold[i].size();
    n_pred += pred[i].size();
  }
  return make_prf(correct, n_gold, n_pred);
}

struct OovRecall {
  double recall = 1.0;  // 1.0 when there are no OOV gold words
  std::size_t oov_words = 0;
  std::size_t found = 0;
};

/// Recall over gold words whose surface form is absent from `train_words`.
inline OovRecall oov_recall(const std::vector<std::u32string>& texts, const std::vector<SpanSet>& gold,
                            const std::vector<SpanSet>& pred, const std::unordered_set<std::string>& train_words) {
  if (texts.size() != gold.size() || gold.size() != pred.size()) {
    throw AlignmentError("oov_recall: sentence counts differ");
  }
  OovRecall r;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (span_end(gold[i]) != texts[i].size() || span_end(pred[i]) != texts[i].size()) {
      throw AlignmentError("oov_recall: sentence " + std::to_string(i + 1) + " has different lengths");
    }
    const std::set<Span> p(pred[i].begin(), pred[i].end());
    for (const auto& s : gold[i]) {
      const std::string word = utf8::encode(std::u32string_view(texts[i]).substr(s.begin, s.end - s.begin));
      if (train_words.count(word)) continue;
      ++r.oov_words;
      r.found += p.count(s);
    }
  }
  r.recall = r.oov_words ? static_cast<double>(r.found) / static_cast<double>(r.oov_words) : 1.0;
  return r;
}

/// Words joined by single ASCII spaces.
inline std::string render(std::u32string_view chars, const SpanSet& spans) {
  std::string out;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (i) out.push_back(' ');
    out += utf8::encode(chars.substr(spans[i].begin, spans[i].end - spans[i].begin));
  }
  return out;
}

inline std::unordered_set<std::string> word_set(const std::vector<TaggedSentence>& corpus) {
  std::unordered_set<std::string> words;
  for (const auto& s : corpus) {
    for (const auto& span : tags_to_spans(std::span<const Tag>(s.tags))) {
      words.insert(utf8::encode(std::u32string_view(s.chars).substr(span.begin, span.end - span.begin)));
    }
  }
  return words;
}

struct ScoreReport {
  Prf prf;
  std::optional<OovRecall> oov;
};

inline void print_report(std::ostream& os, const ScoreReport& r) {
  os << std::fixed << std::setprecision(4);
  os << "words   gold " << r.prf.gold_words << "  pred " << r.prf.pred_words << "  correct " << r.prf.correct
     << '\n';
  os << "P       " << r.prf.precision << '\n';
  os << "R       " << r.prf.recall << '\n';
  os << "F1      " << r.prf.f1 << '\n';
  if (r.oov) os << "OOV-R   " << r.oov->recall << "  (" << r.oov->found << "/" << r.oov->oov_words << ")\n";
  os.unsetf(std::ios_base::floatfield);
}

}  // namespace polyseg
