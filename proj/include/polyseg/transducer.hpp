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

// Static character -> code tables for the two auxiliary unit streams.
//
// Pinyin codes are tone-stripped lowercase syllables with one canonical
// reading per character; polyphones are not disambiguated by context.
// Wubi codes are the full (up to four letter) code and are consumed
// downstream as a single opaque unit, never split into letters.

#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "polyseg/error.hpp"
#include "polyseg/utf8.hpp"

namespace polyseg {

enum class CodeKind { kPinyin, kWubi };

inline constexpr std::string_view kNoCode = "<NOCODE>";

inline std::string_view to_string(CodeKind kind) {
  return kind == CodeKind::kPinyin ? "pinyin" : "wubi";
}

class CodeTable {
 public:
  explicit CodeTable(CodeKind kind) : kind_(kind) {}

  CodeKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return codes_.size(); }
  bool contains(char32_t c) const { return codes_.count(c) != 0; }

  /// Returns the code for `c`, or "<NOCODE>" when unmapped.
  std::string_view lookup(char32_t c) const {
    auto it = codes_.find(c);
    return it == codes_.end() ? kNoCode : std::string_view(it->second);
  }

  /// Inserts or overrides the entry for `c`. Pinyin codes are lower-cased and
  /// trailing tone digits dropped. Throws std::invalid_argument for codes
  /// that violate the table kind.
  void set(char32_t c, std::string_view code) {
    std::string normalized(code);
    if (kind_ == CodeKind::kPinyin) {
      while (!normalized.empty() && normalized.back() >= '0' && normalized.back() <= '9') {
        normalized.pop_back();
      }
      for (char& ch : normalized) {
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      }
      if (normalized.empty()) throw std::invalid_argument("empty pinyin code");
      for (char ch : normalized) {
        if (!((ch >= 'a' && ch <= 'z') || ch == ':')) {
          throw std::invalid_argument("pinyin code must be ASCII letters: '" + std::string(code) + "'");
        }
      }
    } else {
      if (normalized.empty() || normalized.size() > 4) {
        throw std::invalid_argument("wubi code must have 1..4 letters: '" + normalized + "'");
      }
      for (char ch : normalized) {
        if (ch < 'A' || ch > 'Y') {
          throw std::invalid_argument("wubi code letters must be A-Y: '" + normalized + "'");
        }
      }
    }
    codes_[c] = std::move(normalized);
  }

 private:
  CodeKind kind_;
  std::unordered_map<char32_t, std::string> codes_;
};

/// Parses `char<TAB>code` lines. Blank lines are skipped; later duplicates win.
inline CodeTable parse_table(std::istream& in, CodeKind kind) {
  CodeTable table(kind);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("missing TAB separator", lineno);
    std::u32string key;
    try {
      key = utf8::decode(std::string_view(line).substr(0, tab));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
    if (key.size() != 1) throw ParseError("key must be exactly one character", lineno);
    try {
      table.set(key.front(), std::string_view(line).substr(tab + 1));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return table;
}

inline CodeTable load_table(const std::filesystem::path& path, CodeKind kind) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open code table '" + path.string() + "'");
  return parse_table(in, kind);
}

inline std::string pinyin_of(const CodeTable& table, char32_t c) {
  if (table.kind() != CodeKind::kPinyin) throw ConfigError("pinyin_of called with a wubi table");
  return std::string(table.lookup(c));
}

inline std::string wubi_of(const CodeTable& table, char32_t c) {
  if (table.kind() != CodeKind::kWubi) throw ConfigError("wubi_of called with a pinyin table");
  return std::string(table.lookup(c));
}

struct Annotation {
  std::vector<std::string> pinyin;
  std::vector<std::string> wubi;
};

/// Positionally aligned Pinyin and Wubi unit sequences for `chars`.
inline Annotation annotate(const CodeTable& pinyin, const CodeTable& wubi, std::u32string_view chars) {
  Annotation out;
  out.pinyin.reserve(chars.size());
  out.wubi.reserve(chars.size());
  for (char32_t c : chars) {
    out.pinyin.push_back(pinyin_of(pinyin, c));
    out.wubi.push_back(wubi_of(wubi, c));
  }
  return out;
}

}  // namespace polyseg
