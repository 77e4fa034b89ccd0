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
"""Regenerates data/tables/{pinyin,wubi}.tsv.

Character set: GB2312 level-1 (3755 common characters).
Pinyin: pypinyin's default single-character reading, tone-stripped, 'v' for u-umlaut.
Wubi: pywubi's 86-edition full code (first listed, i.e. longest), upper-cased.

    pip install pypinyin pywubi
    python3 tools/make_tables.py data/tables
"""
import os
import sys

from pypinyin import Style, lazy_pinyin
from pywubi import wubi_dict


def gb2312_level1():
    for hi in range(0xB0, 0xD8):
        for lo in range(0xA1, 0xFF):
            try:
                yield bytes([hi, lo]).decode("gb2312")
            except UnicodeDecodeError:
                pass


def main(out_dir):
    chars = list(gb2312_level1())
    wubi = wubi_dict.wubi_86_dict
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "pinyin.tsv"), "w", encoding="utf-8") as f:
        for c in chars:
            code = lazy_pinyin(c, style=Style.NORMAL)[0]
            assert code.isascii() and code.isalpha(), (c, code)
            f.write(f"{c}\t{code.lower()}\n")
    with open(os.path.join(out_dir, "wubi.tsv"), "w", encoding="utf-8") as f:
        for c in chars:
            code = wubi[ord(c)].split(",")[0].upper()
            assert 1 <= len(code) <= 4 and all("A" <= x <= "Y" for x in code), (c, code)
            f.write(f"{c}\t{code}\n")
    print(f"wrote {len(chars)} entries per table to {out_dir}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/tables")
