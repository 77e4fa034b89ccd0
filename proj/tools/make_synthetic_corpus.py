#!/usr/bin/env python3
# Copyright 2026 The polyseg Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Builds the structure-correlated synthetic corpus used by the Wubi ablation.

Every word is made of characters whose Wubi codes share the first letter, and
adjacent words always start with different letters, so word boundaries sit
exactly where the first Wubi letter changes.

Some characters share their full Wubi code with another character. The train
split only ever uses one member of each such pair; the dev split swaps in the
other member. Those dev characters are unknown to a character vocabulary but
map to a Wubi unit seen in training.

    python3 tools/make_synthetic_corpus.py data/tables/wubi.tsv data/corpora
"""
import collections
import os
import random
import sys

SEED = 20190728
LETTERS_PER_RUN = 12
CHARS_PER_LETTER = 14
LEXICON_SIZE = 420
TRAIN_SENTENCES = 800
DEV_SENTENCES = 200


def load_table(path):
    table = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            ch, code = line.rstrip("\n").split("\t")
            table[ch] = code
    return table


def main(table_path, out_dir):
    rng = random.Random(SEED)
    table = load_table(table_path)
    by_code = collections.defaultdict(list)
    for ch, code in table.items():
        by_code[code].append(ch)
    twins = {}  # train member -> dev replacement
    for code, members in sorted(by_code.items()):
        if len(members) >= 2:
            twins[members[0]] = members[1]
    twin_targets = set(twins.values())

    by_letter = collections.defaultdict(list)
    for ch, code in table.items():
        if ch not in twin_targets and ch not in twins:
            by_letter[code[0]].append(ch)
    letters = sorted(l for l in by_letter if len(by_letter[l]) >= CHARS_PER_LETTER)
    letters = sorted(rng.sample(letters, LETTERS_PER_RUN))

    pools = {}
    twin_pools = collections.defaultdict(list)
    for l in letters:
        pools[l] = rng.sample(sorted(by_letter[l]), CHARS_PER_LETTER)
    for src in sorted(twins):
        if table[src][0] in pools:
            twin_pools[table[src][0]].append(src)

    lexicon = set()
    while len(lexicon) < LEXICON_SIZE:
        l = rng.choice(letters)
        n = rng.choices([1, 2, 3, 4], weights=[2, 5, 3, 1])[0]
        chars = []
        for _ in range(n):
            if twin_pools[l] and rng.random() < 0.3:
                chars.append(rng.choice(twin_pools[l]))
            else:
                chars.append(rng.choice(pools[l]))
        lexicon.add("".join(chars))
    lexicon = sorted(lexicon)
    by_first = collections.defaultdict(list)
    for w in lexicon:
        by_first[table[w[0]][0]].append(w)

    def sentence():
        words = []
        prev = None
        for _ in range(rng.randint(4, 8)):
            l = rng.choice([x for x in letters if x != prev])
            words.append(rng.choice(by_first[l]))
            prev = l
        return words

    train = [" ".join(sentence()) for _ in range(TRAIN_SENTENCES)]
    dev = []
    for _ in range(DEV_SENTENCES):
        words = sentence()
        dev.append(" ".join("".join(twins.get(c, c) for c in w) for w in words))

    os.makedirs(out_dir, exist_ok=True)
    for name, lines in (("synth_wubi_train.txt", train), ("synth_wubi_dev.txt", dev)):
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")
    print(f"letters={''.join(letters)} lexicon={len(lexicon)} "
          f"twins_in_use={sum(len(v) for v in twin_pools.values())}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/tables/wubi.tsv",
         sys.argv[2] if len(sys.argv) > 2 else "data/corpora")
