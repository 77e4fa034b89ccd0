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

// Trains a small Model-III tagger on the bundled toy corpus and segments a
// few of its sentences.
//
//   segment_demo [data_dir]

#include <filesystem>
#include <iostream>
#include <string>

#include "polyseg/polyseg.hpp"

int main(int argc, char** argv) {
  using namespace polyseg;
  const std::filesystem::path data = argc > 1 ? argv[1] : POLYSEG_DATA_DIR;

  const auto pinyin = load_table(data / "tables/pinyin.tsv", CodeKind::kPinyin);
  const auto wubi = load_table(data / "tables/wubi.tsv", CodeKind::kWubi);
  const auto corpus = read_corpus(data / "corpora/toy50.txt");
  const auto vocabs = build_vocabularies(corpus, pinyin, wubi);
  const auto encoded = encode_corpus(corpus, vocabs, pinyin, wubi);

  TrainConfig cfg;
  cfg.model.arch = Architecture::kModel3;
  cfg.model.embed_dim = 32;
  cfg.model.hidden = 32;
  cfg.model.layers = 1;
  cfg.model.dropout = 0.0;
  cfg.model.vocab_sizes = {vocabs.chars.size(), vocabs.pinyin.size(), vocabs.wubi.size()};
  cfg.lr = 1e-2;
  cfg.batch_size = 8;
  cfg.epochs = 60;

  TaggerModel<float> model(cfg.model, cfg.seed);
  const auto result = fit<float>(cfg, model, encoded, {}, [](const EpochRecord& r, const TaggerModel<float>&) {
    std::cout << "epoch " << r.epoch << "  loss " << r.train_loss << "  F1 " << r.dev.f1 << '\n';
    return r.dev.f1 < 1.0;
  });
  std::cout << "best F1 " << result.best_dev_f1 << " at epoch " << result.best_epoch << "\n\n";

  for (std::size_t i = 0; i < 5 && i < corpus.size(); ++i) {
    const auto tags = model.decode(make_batch(encoded[i]), true)[0];
    std::cout << render(corpus[i].chars, tags_to_spans(std::span<const std::int32_t>(tags))) << '\n';
  }
}
