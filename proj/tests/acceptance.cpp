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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.
//
//   acceptance [criterion ...]     (default: all of 1-9)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "crf_oracle.hpp"
#include "net_fixtures.hpp"
#include "polyseg/grad_check.hpp"
#include "polyseg/polyseg.hpp"

namespace fs = std::filesystem;
using namespace polyseg;

namespace {

const fs::path kData = POLYSEG_DATA_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const CodeTable& pinyin() {
  static const CodeTable t = load_table(kData / "tables/pinyin.tsv", CodeKind::kPinyin);
  return t;
}

const CodeTable& wubi() {
  static const CodeTable t = load_table(kData / "tables/wubi.tsv", CodeKind::kWubi);
  return t;
}

struct Encoded {
  Vocabularies vocabs;
  std::vector<EncodedSentence> train, dev;
};

Encoded encode(const fs::path& train, const fs::path& dev = {}) {
  Encoded e;
  const auto tr = read_corpus(train);
  e.vocabs = build_vocabularies(tr, pinyin(), wubi());
  e.train = encode_corpus(tr, e.vocabs, pinyin(), wubi());
  if (!dev.empty()) e.dev = encode_corpus(read_corpus(dev), e.vocabs, pinyin(), wubi());
  return e;
}

ModelConfig default_model(Architecture arch, const Vocabularies& v) {
  ModelConfig c;
  c.arch = arch;
  c.vocab_sizes = {v.chars.size(), v.pinyin.size(), v.wubi.size()};
  return c;
}

constexpr Architecture kArchs[] = {Architecture::kBaseline, Architecture::kModel1, Architecture::kModel2,
                                   Architecture::kModel3};

// 1. CRF against brute-force enumeration.
Outcome crf_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2026);
  double worst = 0;
  int mismatches = 0, trials = 0;
  for (; trials < 200; ++trials) {
    const std::size_t steps = 1 + trials % 5;
    const auto p = testing::random_crf(rng);
    const auto em = testing::random_emissions(rng, steps);
    const auto bf = testing::brute_force(em, p);
    worst = std::max(worst, std::abs(log_partition(em, p) - bf.log_z));
    const EmissionView<double> view{em.data().data(), steps, 1};
    mismatches += viterbi(view, p).tags != bf.best;
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-8 && mismatches == 0 && secs < 10,
          std::to_string(trials) + " instances, max |logZ - brute| " + fmt("%.2e", worst) + ", viterbi mismatches " +
              std::to_string(mismatches) + ", " + fmt("%.2f", secs) + " s"};
}

// 2. End-to-end gradients of every architecture.
Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;
  for (auto arch : kArchs) {
    TaggerModel<double> m(testing::tiny_config(arch), 5);
    Rng rng(13);
    testing::randomize(m, rng, 1.0);
    const auto data = testing::random_sentences(rng, {4, 2});
    const Batch batch = testing::batch_of(data);
    std::vector<std::pair<std::string, Tensor<double>>> params(m.params().begin(), m.params().end());
    const auto report = grad_check([&](Graph<double>& g) { return m.loss(g, batch); }, params, 1e-3, 1e-4,
                                   FiniteDifference::kRichardson);
    pass = pass && report.passed;
    detail += std::string(to_string(arch)) + " " + fmt("%.1e", report.max_rel_error) + "  ";
  }
  const double secs = seconds_since(t0);
  return {pass && secs < 60, detail + "(tol 1e-4, " + fmt("%.1f", secs) + " s)"};
}

// 3. Recurrent parameter counts read back through the inspect command.
Outcome parameter_economy() {
  const auto dir = fs::temp_directory_path() / "polyseg_acceptance_params";
  fs::create_directories(dir);
  std::map<std::string, std::size_t> recurrent;
  for (auto arch : kArchs) {
    const std::string name(to_string(arch));
    const auto ckpt = (dir / (name + ".ckpt")).string();
    std::ostringstream out, err;
    std::istringstream in;
    const std::vector<std::string> train{"train", "--train", (kData / "corpora/toy50.txt").string(), "--arch", name,
                                         "--pinyin-table", (kData / "tables/pinyin.tsv").string(), "--wubi-table",
                                         (kData / "tables/wubi.tsv").string(), "--epochs", "1", "--out", ckpt};
    if (cli::run(train, in, out, err) != 0) return {false, "training " + name + " failed: " + err.str()};
    std::ostringstream json;
    cli::InspectFlags f;
    f.model = ckpt;
    f.json = true;
    cli::cmd_inspect(f, json);
    recurrent[name] = nlohmann::json::parse(json.str())["params"]["recurrent"].get<std::size_t>();
  }
  fs::remove_all(dir);
  const auto b = recurrent["baseline"], m1 = recurrent["model1"], m3 = recurrent["model3"];
  return {m1 == 3 * b && m3 == b, "recurrent: baseline " + std::to_string(b) + ", model1 " + std::to_string(m1) +
                                      ", model2 " + std::to_string(recurrent["model2"]) + ", model3 " +
                                      std::to_string(m3)};
}

// Per-batch wall-clock means of the overfit runs, reused by criterion 5.
std::map<Architecture, std::vector<double>> g_batch_seconds;

// 4. Every architecture overfits the toy corpus at default hyperparameters.
Outcome overfit() {
  const auto data = encode(kData / "corpora/toy50.txt");
  bool pass = true;
  std::string detail;
  for (auto arch : kArchs) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> reached;
    for (std::uint64_t seed : {1, 2, 3}) {
      TrainConfig cfg;
      cfg.model = default_model(arch, data.vocabs);
      cfg.epochs = 300;
      cfg.patience = 300;
      cfg.seed = seed;
      TaggerModel<float> m(cfg.model, seed);
      std::size_t hit = 0;
      fit<float>(cfg, m, data.train, {}, [&](const EpochRecord& r, const TaggerModel<float>&) {
        g_batch_seconds[arch].insert(g_batch_seconds[arch].end(), r.batch_seconds.begin(), r.batch_seconds.end());
        if (r.dev.f1 >= 0.99) hit = r.epoch;
        return hit == 0;
      });
      reached.push_back(hit);
    }
    const double secs = seconds_since(t0);
    const bool ok = std::count(reached.begin(), reached.end(), 0u) == 0 && secs < 300;
    pass = pass && ok;
    detail += std::string(to_string(arch)) + " epochs " + std::to_string(reached[0]) + "/" +
              std::to_string(reached[1]) + "/" + std::to_string(reached[2]) + " " + fmt("%.0f", secs) + "s  ";
  }
  return {pass, detail};
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0 : s / static_cast<double>(v.size());
}

// 5. Per-batch cost relative to the baseline.
Outcome efficiency() {
  if (g_batch_seconds.size() < 4) overfit();
  const double base = mean(g_batch_seconds[Architecture::kBaseline]);
  const double m1 = mean(g_batch_seconds[Architecture::kModel1]) / base;
  const double m3 = mean(g_batch_seconds[Architecture::kModel3]) / base;
  const double m2 = mean(g_batch_seconds[Architecture::kModel2]) / base;
  return {m3 <= 1.5 && m1 >= 1.8 && m3 >= 1.0 && m3 < m1,
          "baseline " + fmt("%.4f", base) + " s/batch; model1 " + fmt("%.2f", m1) + "x, model2 " + fmt("%.2f", m2) +
              "x, model3 " + fmt("%.2f", m3) + "x (need model3 <= 1.5x, model1 >= 1.8x)"};
}

// 6. Wubi helps on the synthetic structure-correlated corpus.
Outcome wubi_benefit() {
  const auto data = encode(kData / "corpora/synth_wubi_train.txt", kData / "corpora/synth_wubi_dev.txt");
  std::map<Architecture, double> mean_f1;
  for (auto arch : {Architecture::kBaseline, Architecture::kModel2, Architecture::kModel3}) {
    double sum = 0;
    for (std::uint64_t seed : {1, 2, 3}) {
      TrainConfig cfg;
      cfg.model = default_model(arch, data.vocabs);
      cfg.model.use_pinyin = false;
      cfg.epochs = 30;
      cfg.patience = 5;
      cfg.seed = seed;
      TaggerModel<float> m(cfg.model, seed);
      sum += fit<float>(cfg, m, data.train, data.dev).best_dev_f1;
    }
    mean_f1[arch] = sum / 3;
  }
  const double b = mean_f1[Architecture::kBaseline];
  return {mean_f1[Architecture::kModel2] > b && mean_f1[Architecture::kModel3] > b,
          "mean dev F1 over seeds 1-3: baseline " + fmt("%.4f", b) + ", model2+WB " +
              fmt("%.4f", mean_f1[Architecture::kModel2]) + ", model3+WB " +
              fmt("%.4f", mean_f1[Architecture::kModel3])};
}

// 7. Table fidelity.
Outcome transducer() {
  std::size_t letters_ok = 0, missing = 0, chars = 0;
  for (const auto& [word, letter] : std::vector<std::pair<std::u32string, char>>{
           {U"提", 'r'}, {U"打", 'r'}, {U"抬", 'r'}, {U"花", 'a'}, {U"草", 'a'}, {U"芽", 'a'}}) {
    const auto code = wubi_of(wubi(), word[0]);
    letters_ok += !code.empty() && std::tolower(static_cast<unsigned char>(code[0])) == letter;
  }
  std::set<char32_t> seen;
  for (const char* corpus : {"corpora/toy50.txt", "corpora/synth_wubi_train.txt", "corpora/synth_wubi_dev.txt"}) {
    for (const auto& s : read_corpus(kData / corpus)) seen.insert(s.chars.begin(), s.chars.end());
  }
  for (char32_t c : seen) {
    ++chars;
    missing += pinyin_of(pinyin(), c) == kNoCode;
  }
  return {letters_ok == 6 && missing == 0, std::to_string(letters_ok) + "/6 first letters match; " +
                                               std::to_string(missing) + " of " + std::to_string(chars) +
                                               " corpus characters lack Pinyin"};
}

// 8. Scorer on hand-computed cases plus partition fuzzing.
Outcome scoring() {
  auto spans = [](std::initializer_list<std::pair<std::size_t, std::size_t>> s) {
    SpanSet out;
    for (auto [b, e] : s) out.push_back({b, e});
    return out;
  };
  bool exact = true;
  const auto same = score({spans({{0, 2}, {2, 3}})}, {spans({{0, 2}, {2, 3}})});
  exact = exact && same.precision == 1.0 && same.recall == 1.0 && same.f1 == 1.0;
  const auto r = score({spans({{0, 2}, {2, 3}})}, {spans({{0, 1}, {1, 2}, {2, 3}})});
  exact = exact && r.precision == 1.0 / 3.0 && r.recall == 0.5 && std::abs(r.f1 - 0.4) < 1e-15;
  const auto none = score({spans({{0, 2}})}, {spans({{0, 1}, {1, 2}})});
  exact = exact && none.precision == 0.0 && none.recall == 0.0 && none.f1 == 0.0;
  const auto micro = score({spans({{0, 1}}), spans({{0, 2}, {2, 3}})}, {spans({{0, 1}}), spans({{0, 1}, {1, 2}, {2, 3}})});
  exact = exact && micro.precision == 0.5 && micro.recall == 2.0 / 3.0;

  Rng rng(8);
  std::size_t broken = 0;
  const std::size_t trials = 10000;
  for (std::size_t i = 0; i < trials; ++i) {
    std::vector<Tag> tags(rng.below(40));
    for (auto& t : tags) t = static_cast<Tag>(rng.below(4));
    broken += !is_partition(tags_to_spans(std::span<const Tag>(tags)), tags.size());
  }
  return {exact && broken == 0, std::string("hand examples ") + (exact ? "exact" : "WRONG") + ", " +
                                    std::to_string(broken) + "/" + std::to_string(trials) +
                                    " fuzzed tag sequences failed to partition"};
}

// 9. Bit-reproducible training and byte-stable checkpoints.
Outcome determinism() {
  const auto data = encode(kData / "corpora/toy50.txt");
  TrainConfig cfg;
  cfg.model = default_model(Architecture::kModel3, data.vocabs);
  cfg.model.embed_dim = 32;
  cfg.model.hidden = 16;
  cfg.epochs = 3;
  cfg.seed = 7;
  std::vector<std::string> bytes;
  std::vector<std::vector<double>> losses;
  for (int run = 0; run < 2; ++run) {
    TaggerModel<float> m(cfg.model, cfg.seed);
    const auto r = fit<float>(cfg, m, data.train, {});
    std::vector<double> l;
    for (const auto& e : r.history) l.push_back(e.train_loss);
    losses.push_back(l);
    std::ostringstream out(std::ios::binary);
    save_checkpoint(Checkpoint{cfg.model, data.vocabs, cfg.max_sentence_length, m.params()}, out);
    bytes.push_back(out.str());
  }
  std::istringstream in(bytes[0], std::ios::binary);
  std::ostringstream again(std::ios::binary);
  save_checkpoint(load_checkpoint(in), again);
  const bool reproducible = bytes[0] == bytes[1] && losses[0] == losses[1];
  const bool stable = again.str() == bytes[0];
  return {reproducible && stable, std::string("same-seed runs ") + (reproducible ? "identical" : "DIFFER") +
                                      ", save-load-save " + (stable ? "byte-identical" : "DIFFERS") + " (" +
                                      std::to_string(bytes[0].size()) + " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"crf oracle equivalence", crf_oracle},    {"gradient correctness", gradients},
      {"parameter economy", parameter_economy},  {"overfit sanity", overfit},
      {"relative efficiency", efficiency},       {"wubi benefit", wubi_benefit},
      {"transducer fidelity", transducer},       {"scoring oracle", scoring},
      {"determinism and persistence", determinism}};
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::stoi(argv[i]));
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!wanted.empty() && !wanted.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << criteria[k].first << ": " << o.detail << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << '\n';
  return failed ? 1 : 0;
}
