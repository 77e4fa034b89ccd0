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

// Checkpoint container: one line of compact UTF-8 JSON (the manifest), a
// newline, then every array listed in the manifest as raw little-endian
// float32 values, in manifest order.
//
// Manifest keys:
//   format_version, arch, streams, embed_dim, hidden, layers, dropout,
//   max_sentence_length, tags (["B","M","E","S"]), vocab_sizes,
//   vocab_hashes (FNV-1a, hex), vocabs (unit lists), arrays ([{name, shape}])

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyseg/corpus.hpp"
#include "polyseg/error.hpp"
#include "polyseg/network.hpp"

namespace polyseg {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  ModelConfig config;
  Vocabularies vocabs;
  std::size_t max_sentence_length = kDefaultMaxSentenceLength;
  ParamStore<float> params;
};

namespace ckpt_detail {

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
  return s;
}

inline void write_f32(std::ostream& out, std::span<const float> values) {
  std::vector<char> buf(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) buf[i * 4 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline void read_f32(std::istream& in, std::span<float> values) {
  std::vector<unsigned char> buf(values.size() * 4);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) throw CheckpointError("checkpoint data is truncated");
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(buf[i * 4 + static_cast<std::size_t>(b)]) << (8 * b);
    values[i] = std::bit_cast<float>(bits);
  }
}

inline nlohmann::json streams_json(const ModelConfig& c) {
  nlohmann::json s = nlohmann::json::array();
  for (auto k : c.streams()) s.push_back(std::string(stream_name(k)));
  return s;
}

}  // namespace ckpt_detail

inline nlohmann::json checkpoint_manifest(const Checkpoint& ck) {
  using nlohmann::json;
  const auto& c = ck.config;
  json m;
  m["format_version"] = kCheckpointFormatVersion;
  m["arch"] = std::string(to_string(c.arch));
  m["streams"] = ckpt_detail::streams_json(c);
  m["embed_dim"] = c.embed_dim;
  m["hidden"] = c.hidden;
  m["layers"] = c.layers;
  m["dropout"] = c.dropout;
  m["max_sentence_length"] = ck.max_sentence_length;
  m["tags"] = json::array({"B", "M", "E", "S"});
  const std::array<const UnitVocab*, 3> vocabs{&ck.vocabs.chars, &ck.vocabs.pinyin, &ck.vocabs.wubi};
  for (std::size_t s = 0; s < kNumStreams; ++s) {
    const std::string key(stream_name(s));
    m["vocab_sizes"][key] = vocabs[s]->size();
    m["vocab_hashes"][key] = ckpt_detail::hex64(vocabs[s]->fingerprint());
    m["vocabs"][key] = vocabs[s]->units();
  }
  json arrays = json::array();
  for (const auto& [name, t] : ck.params) arrays.push_back({{"name", name}, {"shape", t.shape()}});
  m["arrays"] = arrays;
  return m;
}

inline void save_checkpoint(const Checkpoint& ck, std::ostream& out) {
  out << checkpoint_manifest(ck).dump() << '\n';
  for (const auto& [name, t] : ck.params) ckpt_detail::write_f32(out, t.data());
  if (!out) throw CheckpointError("failed writing checkpoint");
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
  save_checkpoint(ck, out);
}

/// Reads a checkpoint; if `expected` is given, its architecture, streams
/// and dimensions must match the manifest.
inline Checkpoint load_checkpoint(std::istream& in, const ModelConfig* expected = nullptr) {
  using nlohmann::json;
  std::string header;
  if (!std::getline(in, header)) throw CheckpointError("empty checkpoint");
  json m;
  try {
    m = json::parse(header);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint manifest: ") + e.what());
  }
  Checkpoint ck;
  try {
    if (m.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw CheckpointError("unsupported checkpoint format version " + m.at("format_version").dump());
    }
    if (m.at("tags") != json::array({"B", "M", "E", "S"})) throw CheckpointError("unexpected tag encoding");
    auto& c = ck.config;
    try {
      c.arch = parse_architecture(m.at("arch").get<std::string>());
    } catch (const ConfigError& e) {
      throw CheckpointError(e.what());
    }
    const auto streams = m.at("streams").get<std::vector<std::string>>();
    auto has = [&](std::string_view s) { return std::find(streams.begin(), streams.end(), s) != streams.end(); };
    c.use_pinyin = c.arch == Architecture::kBaseline || has("pinyin");
    c.use_wubi = c.arch == Architecture::kBaseline || has("wubi");
    c.embed_dim = m.at("embed_dim").get<std::size_t>();
    c.hidden = m.at("hidden").get<std::size_t>();
    c.layers = m.at("layers").get<std::size_t>();
    c.dropout = m.at("dropout").get<double>();
    ck.max_sentence_length = m.at("max_sentence_length").get<std::size_t>();
    std::array<UnitVocab*, 3> vocabs{&ck.vocabs.chars, &ck.vocabs.pinyin, &ck.vocabs.wubi};
    for (std::size_t s = 0; s < kNumStreams; ++s) {
      const std::string key(stream_name(s));
      *vocabs[s] = UnitVocab::from_units(m.at("vocabs").at(key).get<std::vector<std::string>>());
      if (vocabs[s]->size() != m.at("vocab_sizes").at(key).get<std::size_t>() ||
          ckpt_detail::hex64(vocabs[s]->fingerprint()) != m.at("vocab_hashes").at(key).get<std::string>()) {
        throw CheckpointError("vocabulary '" + key + "' does not match its recorded size/hash");
      }
      c.vocab_sizes[s] = vocabs[s]->size();
    }
    if (expected) {
      if (expected->arch != c.arch) {
        throw CheckpointError("checkpoint holds a " + std::string(to_string(c.arch)) + " model, expected " +
                              std::string(to_string(expected->arch)));
      }
      if (expected->streams() != c.streams() || expected->embed_dim != c.embed_dim ||
          expected->hidden != c.hidden || expected->layers != c.layers) {
        throw CheckpointError("checkpoint dimensions or streams do not match the requested model");
      }
    }
    ParamStore<float> params;
    for (const auto& a : m.at("arrays")) {
      auto shape = a.at("shape").get<Shape>();
      if (shape.empty() || shape.size() > 2) throw CheckpointError("bad array shape in manifest");
      for (auto d : shape) {
        if (d == 0) throw CheckpointError("bad array shape in manifest");
      }
      auto t = Tensor<float>::zeros(shape, true);
      ckpt_detail::read_f32(in, t.data());
      params.add(a.at("name").get<std::string>(), t);
    }
    if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes after checkpoint data");
    c.validate();
    ck.params = TaggerModel<float>(c, std::move(params)).params();
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(e.what());
  } catch (const ParseError& e) {
    throw CheckpointError(e.what());
  }
  return ck;
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig* expected = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  return load_checkpoint(in, expected);
}

}  // namespace polyseg
