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

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "polyseg/error.hpp"
#include "polyseg/transducer.hpp"
#include "polyseg/utf8.hpp"

namespace polyseg {

// Integer values are part of the checkpoint format.
enum class Tag : std::uint8_t { B = 0, M = 1, E = 2, S = 3 };
inline constexpr int kNumTags = 4;

inline char tag_char(Tag t) { return "BMES"[static_cast<int>(t)]; }

struct TaggedSentence {
  std::u32string chars;
  std::vector<Tag> tags;
};

/// B/M must be followed by M or E, E/S by B, S or end; no open word at the end.
inline bool is_legal_bmes(std::span<const Tag> tags) {
  bool open = false;
  for (Tag t : tags) {
    switch (t) {
      case Tag::B:
      case Tag::S:
        if (open) return false;
        open = t == Tag::B;
        break;
      case Tag::M:
        if (!open) return false;
        break;
      case Tag::E:
        if (!open) return false;
        open = false;
        break;
    }
  }
  return !open;
}

/// Splits on ASCII spaces, dropping empty words and surrounding whitespace.
inline std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r' || line[i] == '\n')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r' && line[j] != '\n') ++j;
    if (j > i) words.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return words;
}

inline TaggedSentence parse_segmented_line(std::string_view line) {
  TaggedSentence s;
  for (const auto& word : split_words(line)) {
    const std::u32string chars = utf8::decode(word);
    if (chars.size() == 1) {
      s.tags.push_back(Tag::S);
    } else {
      s.tags.push_back(Tag::B);
      s.tags.insert(s.tags.end(), chars.size() - 2, Tag::M);
      s.tags.push_back(Tag::E);
    }
    s.chars += chars;
  }
  if (s.chars.empty()) throw EmptySentence();
  return s;
}

/// Reads a space-segmented corpus; blank lines are skipped.
inline std::vector<TaggedSentence> read_corpus(std::istream& in) {
  std::vector<TaggedSentence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (split_words(line).empty()) continue;
    try {
      out.push_back(parse_segmented_line(line));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

inline std::vector<TaggedSentence> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus '" + path.string() + "'");
  return read_corpus(in);
}

/// Dense bijection between unit strings and ids; id 0 is always "<UNK>".
class UnitVocab {
 public:
  static constexpr std::string_view kUnk = "<UNK>";
  static constexpr std::int32_t kUnkId = 0;

  UnitVocab() { add(std::string(kUnk)); }

  /// Builds from an explicit unit list; the first entry must be "<UNK>".
  static UnitVocab from_units(const std::vector<std::string>& units) {
    if (units.empty() || units.front() != kUnk) {
      throw ParseError("vocabulary must start with <UNK>");
    }
    UnitVocab v;
    for (std::size_t i = 1; i < units.size(); ++i) {
      if (v.index_.count(units[i])) throw ParseError("duplicate vocabulary unit '" + units[i] + "'", i + 1);
      v.add(units[i]);
    }
    return v;
  }

  std::int32_t unk_id() const noexcept { return kUnkId; }
  std::size_t size() const noexcept { return units_.size(); }
  const std::vector<std::string>& units() const noexcept { return units_; }
  const std::string& unit(std::int32_t id) const { return units_.at(static_cast<std::size_t>(id)); }
  bool contains(const std::string& unit) const { return index_.count(unit) != 0; }

  std::int32_t lookup(const std::string& unit) const {
    auto it = index_.find(unit);
    return it == index_.end() ? kUnkId : it->second;
  }

  void save(std::ostream& out) const {
    for (const auto& u : units_) out << u << '\n';
  }

  static UnitVocab load(std::istream& in) {
    std::vector<std::string> units;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      units.push_back(line);
    }
    return from_units(units);
  }

  /// FNV-1a over the serialized vocabulary file.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](unsigned char b) {
      h ^= b;
      h *= 1099511628211ULL;
    };
    for (const auto& u : units_) {
      for (char c : u) mix(static_cast<unsigned char>(c));
      mix('\n');
    }
    return h;
  }

  friend bool operator==(const UnitVocab& a, const UnitVocab& b) { return a.units_ == b.units_; }

 private:
  void add(std::string unit) {
    index_.emplace(unit, static_cast<std::int32_t>(units_.size()));
    units_.push_back(std::move(unit));
  }

  std::vector<std::string> units_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Vocabulary of every unit seen at least `min_count` times, most frequent
/// first, ties broken by byte-wise unit order.
template <typename Sequences>
UnitVocab build_vocab(const Sequences& sequences, std::size_t min_count = 1) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& seq : sequences) {
    for (const auto& unit : seq) ++counts[std::string(unit)];
  }
  counts.erase(std::string(UnitVocab::kUnk));
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [unit, n] : counts) {
    if (n >= min_count) kept.emplace_back(unit, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> units{std::string(UnitVocab::kUnk)};
  for (auto& [unit, n] : kept) units.push_back(unit);
  return UnitVocab::from_units(units);
}

/// Per-sentence unit sequences for each of the three streams.
struct UnitCorpus {
  std::vector<std::vector<std::string>> chars;
  std::vector<std::vector<std::string>> pinyin;
  std::vector<std::vector<std::string>> wubi;
};

inline UnitCorpus to_units(const std::vector<TaggedSentence>& sentences, const CodeTable& pinyin,
                           const CodeTable& wubi) {
  UnitCorpus out;
  for (const auto& s : sentences) {
    out.chars.push_back(utf8::split_chars(s.chars));
    auto ann = annotate(pinyin, wubi, s.chars);
    out.pinyin.push_back(std::move(ann.pinyin));
    out.wubi.push_back(std::move(ann.wubi));
  }
  return out;
}

struct Vocabularies {
  UnitVocab chars;
  UnitVocab pinyin;
  UnitVocab wubi;
};

inline Vocabularies build_vocabularies(const std::vector<TaggedSentence>& sentences, const CodeTable& pinyin,
                                       const CodeTable& wubi, std::size_t min_count = 1) {
  const UnitCorpus units = to_units(sentences, pinyin, wubi);
  return {build_vocab(units.chars, min_count), build_vocab(units.pinyin, min_count),
          build_vocab(units.wubi, min_count)};
}

inline constexpr std::size_t kDefaultMaxSentenceLength = 80;

struct EncodedSentence {
  std::vector<std::int32_t> char_ids;
  std::vector<std::int32_t> pinyin_ids;
  std::vector<std::int32_t> wubi_ids;
  std::vector<std::int32_t> tags;
  std::size_t length = 0;
};

/// Looks up all three unit streams; sentences longer than `max_length` are
/// truncated. An empty `tags` input yields tag ids of -1 (unlabelled text).
inline EncodedSentence encode_sentence(const TaggedSentence& s, const Vocabularies& vocabs,
                                       const CodeTable& pinyin, const CodeTable& wubi,
                                       std::size_t max_length = kDefaultMaxSentenceLength) {
  if (!s.tags.empty() && s.tags.size() != s.chars.size()) {
    throw AlignmentError("sentence has " + std::to_string(s.chars.size()) + " chars but " +
                         std::to_string(s.tags.size()) + " tags");
  }
  EncodedSentence e;
  e.length = std::min(s.chars.size(), max_length);
  for (std::size_t i = 0; i < e.length; ++i) {
    const char32_t c = s.chars[i];
    e.char_ids.push_back(vocabs.chars.lookup(utf8::encode(c)));
    e.pinyin_ids.push_back(vocabs.pinyin.lookup(pinyin_of(pinyin, c)));
    e.wubi_ids.push_back(vocabs.wubi.lookup(wubi_of(wubi, c)));
    e.tags.push_back(s.tags.empty() ? -1 : static_cast<std::int32_t>(s.tags[i]));
  }
  return e;
}

inline std::vector<EncodedSentence> encode_corpus(const std::vector<TaggedSentence>& sentences,
                                                  const Vocabularies& vocabs, const CodeTable& pinyin,
                                                  const CodeTable& wubi,
                                                  std::size_t max_length = kDefaultMaxSentenceLength) {
  std::vector<EncodedSentence> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(encode_sentence(s, vocabs, pinyin, wubi, max_length));
  return out;
}

}  // namespace polyseg
