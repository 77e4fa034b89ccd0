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

// The `polyseg` command: embed / train / segment / eval / inspect.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 training failure.

#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polyseg/polyseg.hpp"

namespace polyseg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitTraining = 3;

struct TableFlags {
  std::string pinyin;
  std::string wubi;
};

struct EmbedFlags {
  std::string corpus;
  std::string kind = "char";
  TableFlags tables;
  std::size_t dim = 256;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double lr = 0.025;
  std::size_t min_count = 1;
  std::uint64_t seed = 1;
  std::string out;
};

struct TrainFlags {
  std::string train;
  std::string dev;
  std::string arch = "baseline";
  std::string streams = "char,pinyin,wubi";
  TableFlags tables;
  std::string char_emb, pinyin_emb, wubi_emb;
  TrainConfig cfg;
  std::string out;
  std::string history;
};

struct SegmentFlags {
  std::string model;
  TableFlags tables;
  bool constrain = false;
  std::string input = "-";
  std::string out = "-";
};

struct EvalFlags {
  std::string gold;
  std::string pred;
  std::string train_vocab;
  std::string json;
};

struct InspectFlags {
  std::string model;
  bool json = false;
};

namespace detail {

inline CodeTable table_or_empty(const std::string& path, CodeKind kind) {
  return path.empty() ? CodeTable(kind) : load_table(path, kind);
}

inline void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " is required");
  if (!std::filesystem::exists(path)) throw ConfigError(what + " '" + path + "' does not exist");
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == '+') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

/// Applies `key = value` lines from a config file to the subcommand's
/// options, skipping keys already given on the command line.
inline std::vector<std::string> merge_config(CLI::App& sub, const std::string& path,
                                             const std::vector<std::string>& given) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::vector<std::string> extra;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.starts_with("--")) key = key.substr(2);
    const CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (!opt || key == "config") throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    bool on_cmdline = false;
    for (const auto& a : given) on_cmdline = on_cmdline || a == "--" + key || a.starts_with("--" + key + "=");
    if (on_cmdline) continue;
    if (opt->get_expected_min() == 0) {
      if (value == "true" || value == "1") {
        extra.push_back("--" + key);
      } else if (value != "false" && value != "0") {
        throw ConfigError("config line " + std::to_string(lineno) + ": '" + key + "' expects true or false");
      }
    } else {
      extra.push_back("--" + key + "=" + value);
    }
  }
  return extra;
}

inline nlohmann::json prf_json(const Prf& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

inline nlohmann::json report_json(const ScoreReport& r) {
  nlohmann::json j = prf_json(r.prf);
  j["oov_recall"] = r.oov ? nlohmann::json(r.oov->recall) : nlohmann::json(nullptr);
  j["oov_count"] = r.oov ? r.oov->oov_words : 0;
  return j;
}

inline std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  return read_lines(in);
}

}  // namespace detail

inline int cmd_embed(const EmbedFlags& f, std::ostream& out, std::ostream& err) {
  detail::require_file(f.corpus, "--corpus");
  if (f.out.empty()) throw ConfigError("--out is required");
  if (f.kind != "char" && f.kind != "pinyin" && f.kind != "wubi") {
    throw ConfigError("--kind must be char, pinyin or wubi");
  }
  if (f.kind == "pinyin") detail::require_file(f.tables.pinyin, "--pinyin-table");
  if (f.kind == "wubi") detail::require_file(f.tables.wubi, "--wubi-table");
  const auto corpus = read_corpus(std::filesystem::path(f.corpus));
  const auto units = to_units(corpus, detail::table_or_empty(f.tables.pinyin, CodeKind::kPinyin),
                              detail::table_or_empty(f.tables.wubi, CodeKind::kWubi));
  const auto& seqs = f.kind == "char" ? units.chars : f.kind == "pinyin" ? units.pinyin : units.wubi;
  SkipGramConfig sg;
  sg.dim = f.dim;
  sg.window = f.window;
  sg.negatives = f.negatives;
  sg.epochs = f.epochs;
  sg.lr = f.lr;
  sg.seed = f.seed;
  sg.min_count = f.min_count;
  const auto result = train_skipgram(seqs, sg);
  save_text(result.table, std::filesystem::path(f.out));
  out << "vocab " << result.table.vocab.size() << "  dim " << result.table.dim << "  final loss "
      << (result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back()) << '\n';
  (void)err;
  return kExitOk;
}

inline int cmd_train(TrainFlags f, std::ostream& out, std::ostream& err) {
  detail::require_file(f.train, "--train");
  if (!f.dev.empty()) detail::require_file(f.dev, "--dev");
  if (f.out.empty()) throw ConfigError("--out is required");
  auto& mc = f.cfg.model;
  mc.arch = parse_architecture(f.arch);
  const bool baseline = mc.arch == Architecture::kBaseline;
  if (!baseline) {
    const auto streams = detail::split_list(f.streams);
    mc.use_pinyin = mc.use_wubi = false;
    for (const auto& s : streams) {
      if (s == "pinyin") {
        mc.use_pinyin = true;
      } else if (s == "wubi") {
        mc.use_wubi = true;
      } else if (s != "char") {
        throw ConfigError("unknown stream '" + s + "'");
      }
    }
    if (mc.use_pinyin) detail::require_file(f.tables.pinyin, "--pinyin-table");
    if (mc.use_wubi) detail::require_file(f.tables.wubi, "--wubi-table");
  } else if (!f.pinyin_emb.empty() || !f.wubi_emb.empty()) {
    err << "warning: baseline uses character embeddings only; ignoring --pinyin-emb/--wubi-emb\n";
    f.pinyin_emb.clear();
    f.wubi_emb.clear();
  }
  const CodeTable pinyin = detail::table_or_empty(f.tables.pinyin, CodeKind::kPinyin);
  const CodeTable wubi = detail::table_or_empty(f.tables.wubi, CodeKind::kWubi);
  const auto train = read_corpus(std::filesystem::path(f.train));
  if (train.empty()) throw ConfigError("training corpus '" + f.train + "' is empty");
  const auto dev = f.dev.empty() ? std::vector<TaggedSentence>{} : read_corpus(std::filesystem::path(f.dev));
  const Vocabularies vocabs = build_vocabularies(train, pinyin, wubi);
  mc.vocab_sizes = {vocabs.chars.size(), vocabs.pinyin.size(), vocabs.wubi.size()};
  const auto train_data = encode_corpus(train, vocabs, pinyin, wubi, f.cfg.max_sentence_length);
  const auto dev_data = encode_corpus(dev, vocabs, pinyin, wubi, f.cfg.max_sentence_length);

  std::array<std::optional<EmbeddingTable>, 3> tables;
  const std::array<const std::string*, 3> emb_paths{&f.char_emb, &f.pinyin_emb, &f.wubi_emb};
  std::array<const EmbeddingTable*, 3> pretrained{};
  for (std::size_t s = 0; s < kNumStreams; ++s) {
    if (emb_paths[s]->empty()) continue;
    detail::require_file(*emb_paths[s], "embedding file");
    tables[s] = load_text(std::filesystem::path(*emb_paths[s]));
    pretrained[s] = &*tables[s];
  }
  TaggerModel<float> model(mc, f.cfg.seed, pretrained, {&vocabs.chars, &vocabs.pinyin, &vocabs.wubi});

  const std::string history_path = f.history.empty() ? f.out + ".history.jsonl" : f.history;
  std::ofstream history(history_path, std::ios::binary);
  std::ofstream timing(f.out + ".timing.jsonl", std::ios::binary);
  if (!history || !timing) throw ConfigError("cannot write history next to '" + f.out + "'");
  auto result = fit<float>(f.cfg, model, train_data, dev_data, [&](const EpochRecord& r, const TaggerModel<float>&) {
    nlohmann::json h{{"epoch", r.epoch},
                     {"train_loss", r.train_loss},
                     {"dev_precision", r.dev.precision},
                     {"dev_recall", r.dev.recall},
                     {"dev_f1", r.dev.f1},
                     {"improved", r.improved}};
    history << h.dump() << '\n';
    nlohmann::json t{{"epoch", r.epoch},
                     {"mean_batch_seconds", r.mean_batch_seconds()},
                     {"batch_seconds", r.batch_seconds}};
    timing << t.dump() << '\n';
    return true;
  });

  Checkpoint ck{mc, vocabs, f.cfg.max_sentence_length, model.params()};
  save_checkpoint(ck, std::filesystem::path(f.out));

  ScoreReport report;
  report.prf = evaluate(model, dev_data.empty() ? train_data : dev_data, f.cfg.constrain_decode);
  std::ofstream(f.out + ".report.json", std::ios::binary) << detail::report_json(report).dump(2) << '\n';
  out << "best epoch " << result.best_epoch << " of " << result.history.size() << " ("
      << (dev_data.empty() ? "train" : "dev") << ")\n";
  print_report(out, report);
  return kExitOk;
}

/// Segments raw lines. Whitespace in the input is dropped; lines longer than
/// the model's maximum sentence length are decoded in consecutive chunks.
inline std::vector<std::string> segment_lines(const Checkpoint& ck, const CodeTable& pinyin, const CodeTable& wubi,
                                              const std::vector<std::string>& lines, bool constrained) {
  TaggerModel<float> model(ck.config, ck.params);
  const std::size_t max_len = ck.max_sentence_length;
  std::vector<std::u32string> texts;
  std::vector<EncodedSentence> chunks;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::u32string text;
    for (char32_t c : utf8::decode(lines[i])) {
      if (c != U' ' && c != U'\t' && c != U'　') text.push_back(c);
    }
    for (std::size_t begin = 0; begin < text.size(); begin += max_len) {
      TaggedSentence s;
      s.chars = text.substr(begin, max_len);
      chunks.push_back(encode_sentence(s, ck.vocabs, pinyin, wubi, max_len));
      owner.push_back(i);
    }
    texts.push_back(std::move(text));
  }
  const auto tags = predict(model, chunks, constrained);
  std::vector<std::vector<std::int32_t>> joined(lines.size());
  for (std::size_t k = 0; k < chunks.size(); ++k) {
    joined[owner[k]].insert(joined[owner[k]].end(), tags[k].begin(), tags[k].end());
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out.push_back(render(texts[i], tags_to_spans(std::span<const std::int32_t>(joined[i]))));
  }
  return out;
}

inline CodeTable segment_table(const Checkpoint& ck, const std::string& path, CodeKind kind) {
  const std::size_t stream = kind == CodeKind::kPinyin ? kPinyinStream : kWubiStream;
  const auto streams = ck.config.streams();
  if (std::find(streams.begin(), streams.end(), stream) != streams.end()) {
    detail::require_file(path, kind == CodeKind::kPinyin ? "--pinyin-table" : "--wubi-table");
  }
  return detail::table_or_empty(path, kind);
}

inline int cmd_segment(const SegmentFlags& f, std::istream& in, std::ostream& out) {
  detail::require_file(f.model, "--model");
  const Checkpoint ck = load_checkpoint(std::filesystem::path(f.model));
  const CodeTable pinyin = segment_table(ck, f.tables.pinyin, CodeKind::kPinyin);
  const CodeTable wubi = segment_table(ck, f.tables.wubi, CodeKind::kWubi);
  const auto lines = f.input == "-" ? detail::read_lines(in) : detail::read_lines(f.input);
  const auto segmented = segment_lines(ck, pinyin, wubi, lines, f.constrain);
  if (f.out == "-") {
    for (const auto& l : segmented) out << l << '\n';
  } else {
    std::ofstream file(f.out, std::ios::binary);
    if (!file) throw ConfigError("cannot write '" + f.out + "'");
    for (const auto& l : segmented) file << l << '\n';
  }
  return kExitOk;
}

inline int cmd_eval(const EvalFlags& f, std::ostream& out, std::ostream& err) {
  detail::require_file(f.gold, "--gold");
  detail::require_file(f.pred, "--pred");
  const auto gold_lines = detail::read_lines(f.gold);
  const auto pred_lines = detail::read_lines(f.pred);
  if (gold_lines.size() != pred_lines.size()) {
    err << "error: gold has " << gold_lines.size() << " lines, prediction has " << pred_lines.size() << '\n';
    return kExitUsage;
  }
  std::vector<std::u32string> texts;
  std::vector<SpanSet> gold, pred;
  for (std::size_t i = 0; i < gold_lines.size(); ++i) {
    const auto g = split_words(gold_lines[i]);
    const auto p = split_words(pred_lines[i]);
    if (g.empty() && p.empty()) continue;
    if (g.empty() || p.empty()) {
      err << "error: line " << i + 1 << ": character content differs\n";
      return kExitUsage;
    }
    const TaggedSentence gs = parse_segmented_line(gold_lines[i]);
    const TaggedSentence ps = parse_segmented_line(pred_lines[i]);
    if (gs.chars != ps.chars) {
      err << "error: line " << i + 1 << ": character content differs\n";
      return kExitUsage;
    }
    texts.push_back(gs.chars);
    gold.push_back(tags_to_spans(std::span<const Tag>(gs.tags)));
    pred.push_back(tags_to_spans(std::span<const Tag>(ps.tags)));
  }
  ScoreReport report;
  report.prf = score(gold, pred);
  if (!f.train_vocab.empty()) {
    detail::require_file(f.train_vocab, "--train-vocab");
    std::unordered_set<std::string> words;
    for (const auto& line : detail::read_lines(f.train_vocab)) {
      for (auto& w : split_words(line)) words.insert(std::move(w));
    }
    report.oov = oov_recall(texts, gold, pred, words);
  }
  print_report(out, report);
  if (!f.json.empty()) {
    const auto j = detail::report_json(report).dump(2);
    if (f.json == "-") {
      out << j << '\n';
    } else {
      std::ofstream file(f.json, std::ios::binary);
      if (!file) throw ConfigError("cannot write '" + f.json + "'");
      file << j << '\n';
    }
  }
  return kExitOk;
}

inline nlohmann::json inspect_json(const Checkpoint& ck) {
  const TaggerModel<float> model(ck.config, ck.params);
  const auto c = model.param_count();
  nlohmann::json streams = nlohmann::json::array();
  for (auto s : ck.config.streams()) streams.push_back(std::string(stream_name(s)));
  return {{"arch", std::string(to_string(ck.config.arch))},
          {"streams", streams},
          {"embed_dim", ck.config.embed_dim},
          {"hidden", ck.config.hidden},
          {"layers", ck.config.layers},
          {"max_sentence_length", ck.max_sentence_length},
          {"vocab_sizes",
           {{"char", ck.vocabs.chars.size()}, {"pinyin", ck.vocabs.pinyin.size()}, {"wubi", ck.vocabs.wubi.size()}}},
          {"params",
           {{"embedding", c.embedding},
            {"recurrent", c.recurrent},
            {"fc", c.fc},
            {"projection", c.projection},
            {"crf", c.crf},
            {"total", c.total}}}};
}

inline int cmd_inspect(const InspectFlags& f, std::ostream& out) {
  detail::require_file(f.model, "--model");
  const Checkpoint ck = load_checkpoint(std::filesystem::path(f.model));
  const auto j = inspect_json(ck);
  if (f.json) {
    out << j.dump(2) << '\n';
    return kExitOk;
  }
  out << "arch        " << j["arch"].get<std::string>() << '\n';
  out << "streams    ";
  for (const auto& s : j["streams"]) out << ' ' << s.get<std::string>();
  out << '\n';
  out << "dims        embed " << ck.config.embed_dim << "  hidden " << ck.config.hidden << "  layers "
      << ck.config.layers << '\n';
  out << "vocab       char " << ck.vocabs.chars.size() << "  pinyin " << ck.vocabs.pinyin.size() << "  wubi "
      << ck.vocabs.wubi.size() << '\n';
  for (const char* group : {"embedding", "recurrent", "fc", "projection", "crf", "total"}) {
    out << "params." << group << std::string(12 - std::string(group).size(), ' ') << j["params"][group].get<std::size_t>()
        << '\n';
  }
  return kExitOk;
}

/// Entry point; `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Chinese word segmentation with character, Pinyin and Wubi embeddings", "polyseg"};
  app.require_subcommand(1);
  std::string config;

  EmbedFlags ef;
  auto* embed = app.add_subcommand("embed", "pre-train skip-gram unit embeddings");
  embed->add_option("--corpus", ef.corpus, "text corpus (one sentence per line)");
  embed->add_option("--kind", ef.kind, "unit stream: char, pinyin or wubi");
  embed->add_option("--pinyin-table", ef.tables.pinyin, "char<TAB>pinyin table");
  embed->add_option("--wubi-table", ef.tables.wubi, "char<TAB>wubi table");
  embed->add_option("--embed-dim", ef.dim, "vector size");
  embed->add_option("--window", ef.window, "context window");
  embed->add_option("--negatives", ef.negatives, "negative samples per pair");
  embed->add_option("--epochs", ef.epochs, "passes over the corpus");
  embed->add_option("--lr", ef.lr, "initial learning rate");
  embed->add_option("--min-count", ef.min_count, "minimum unit frequency");
  embed->add_option("--seed", ef.seed, "random seed");
  embed->add_option("--out", ef.out, "output word2vec text file");

  TrainFlags tf;
  auto* train = app.add_subcommand("train", "train a segmentation model");
  train->add_option("--train", tf.train, "segmented training corpus");
  train->add_option("--dev", tf.dev, "segmented dev corpus (model selection)");
  train->add_option("--arch", tf.arch, "baseline, model1, model2 or model3");
  train->add_option("--streams", tf.streams, "unit streams besides char, e.g. char,wubi");
  train->add_option("--pinyin-table", tf.tables.pinyin, "char<TAB>pinyin table");
  train->add_option("--wubi-table", tf.tables.wubi, "char<TAB>wubi table");
  train->add_option("--char-emb", tf.char_emb, "pre-trained char embeddings");
  train->add_option("--pinyin-emb", tf.pinyin_emb, "pre-trained Pinyin embeddings");
  train->add_option("--wubi-emb", tf.wubi_emb, "pre-trained Wubi embeddings");
  train->add_option("--embed-dim", tf.cfg.model.embed_dim, "embedding size");
  train->add_option("--hidden", tf.cfg.model.hidden, "LSTM hidden size per direction");
  train->add_option("--layers", tf.cfg.model.layers, "stacked Bi-LSTM layers");
  train->add_option("--dropout", tf.cfg.model.dropout, "dropout rate");
  train->add_option("--lr", tf.cfg.lr, "Adam learning rate");
  train->add_option("--batch", tf.cfg.batch_size, "sentences per batch");
  train->add_option("--epochs", tf.cfg.epochs, "maximum epochs");
  train->add_option("--patience", tf.cfg.patience, "epochs without dev improvement before stopping");
  train->add_option("--seed", tf.cfg.seed, "random seed");
  train->add_option("--max-len", tf.cfg.max_sentence_length, "maximum sentence length");
  train->add_option("--clip", tf.cfg.clip_norm, "global gradient norm limit (0 = off)");
  train->add_flag("--constrain-decode", tf.cfg.constrain_decode, "forbid illegal BMES transitions when decoding");
  train->add_option("--out", tf.out, "checkpoint path");
  train->add_option("--history", tf.history, "history JSON-lines path (default <out>.history.jsonl)");

  SegmentFlags sf;
  auto* segment = app.add_subcommand("segment", "segment raw text");
  segment->add_option("--model", sf.model, "checkpoint");
  segment->add_option("--pinyin-table", sf.tables.pinyin, "char<TAB>pinyin table");
  segment->add_option("--wubi-table", sf.tables.wubi, "char<TAB>wubi table");
  segment->add_flag("--constrain-decode", sf.constrain, "forbid illegal BMES transitions");
  segment->add_option("--input", sf.input, "input file ('-' = stdin)");
  segment->add_option("--out", sf.out, "output file ('-' = stdout)");

  EvalFlags vf;
  auto* eval = app.add_subcommand("eval", "score a segmentation against gold");
  eval->add_option("--gold", vf.gold, "gold segmented file");
  eval->add_option("--pred", vf.pred, "predicted segmented file");
  eval->add_option("--train-vocab", vf.train_vocab, "training corpus or word list for OOV recall");
  eval->add_option("--json", vf.json, "also write the JSON report here ('-' = stdout)");

  InspectFlags inf;
  auto* inspect = app.add_subcommand("inspect", "describe a checkpoint");
  inspect->add_option("--model", inf.model, "checkpoint");
  inspect->add_flag("--json", inf.json, "JSON output");

  for (auto* sub : {embed, train, segment, eval, inspect}) {
    sub->add_option("--config", config, "key=value file; command-line flags win");
  }

  try {
    std::vector<std::string> argv = args;
    // Config keys are appended as flags unless the command line sets them.
    for (std::size_t i = 1; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
      if (args[i].starts_with("--config=")) path = args[i].substr(9);
      if (path.empty()) continue;
      CLI::App* sub = app.get_subcommand_no_throw(args[0]);
      if (!sub) break;
      const auto extra = detail::merge_config(*sub, path, args);
      argv.insert(argv.end(), extra.begin(), extra.end());
    }
    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*embed) return cmd_embed(ef, out, err);
    if (*train) return cmd_train(tf, out, err);
    if (*segment) return cmd_segment(sf, in, out);
    if (*eval) return cmd_eval(vf, out, err);
    if (*inspect) return cmd_inspect(inf, out);
  } catch (const DivergedError& e) {
    err << "error: " << e.what() << '\n';
    return kExitTraining;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace polyseg::cli
