#!/usr/bin/env python3
"""Regenerates the bundled lexicons and phoneme inventories under crates/core/data.

Requires: pypinyin, pykakasi, cmudict, wordfreq.
"""
import os
import re
import sys

import cmudict
import pykakasi
import pypinyin
import wordfreq

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "crates", "core", "data")
RESERVED = ["<pad>", "<bos>", "<eos>", "|", "sil"]


def write_lines(name, lines):
    with open(os.path.join(OUT, name), "w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(line + "\n")


def hangul_inventory():
    # compatibility jamo: 30 consonants (incl. clusters) + 21 vowels
    cons = [chr(c) for c in range(0x3131, 0x314F)]
    vows = [chr(c) for c in range(0x314F, 0x3164)]
    return cons + vows


# ---------------------------------------------------------------- English
EN_EXTRA = """zero one two three four five six seven eight nine ten eleven twelve thirteen
fourteen fifteen sixteen seventeen eighteen nineteen twenty thirty forty fifty sixty
seventy eighty ninety hundred thousand million billion point minus first second third
fourth fifth sixth seventh eighth ninth tenth eleventh twelfth thirteenth fourteenth
fifteenth sixteenth seventeenth eighteenth nineteenth twentieth thirtieth fortieth
fiftieth sixtieth seventieth eightieth ninetieth hundredth thousandth millionth
billionth january february march april may june july august september october november
december doctor mister missus miss saint junior senior professor mount versus et cetera
oh hundred""".split()


def english():
    cmu = cmudict.dict()
    words = []
    seen = set()
    for w in EN_EXTRA + wordfreq.top_n_list("en", 6000):
        if w in seen or not re.fullmatch(r"[a-z']+", w) or w not in cmu:
            continue
        seen.add(w)
        words.append(w)
        if len(words) >= 2000 + len(EN_EXTRA):
            break
    lex = [f"{w}\t{' '.join(cmu[w][0])}" for w in words]
    # letter names for spelling fallback
    for c in "abcdefghijklmnopqrstuvwxyz":
        if c not in seen:
            lex.append(f"{c}\t{' '.join(cmu[c][0])}")
    vowels = ["AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY", "IH", "IY", "OW", "OY", "UH", "UW"]
    cons = ["B", "CH", "D", "DH", "F", "G", "HH", "JH", "K", "L", "M", "N", "NG", "P", "R", "S",
            "SH", "T", "TH", "V", "W", "Y", "Z", "ZH"]
    inv = [v + s for v in vowels for s in "012"] + cons
    for line in lex:
        for p in line.split("\t")[1].split():
            assert p in inv, p
    return sorted(lex), inv


# ---------------------------------------------------------------- Japanese
def hira_inventory():
    inv = [chr(c) for c in range(0x3041, 0x3095)]  # ぁ..ゔ
    inv.append("ー")
    return inv


KANJI = re.compile(r"[一-鿿々]")
JA_SCRIPT = re.compile(r"[ぁ-ゖァ-ヺー一-鿿々]+")


def to_hira(s):
    return "".join(chr(ord(c) - 0x60) if 0x30A1 <= ord(c) <= 0x30F6 else c for c in s)


def japanese(inv):
    kks = pykakasi.kakasi()
    entries = {}
    extra = list("日月年時分秒円人本語話今明後前先生学校私何見行来出大小中上下山川水火木金土")
    for w in extra + wordfreq.top_n_list("ja", 20000):
        if len(entries) >= 2000:
            break
        if not JA_SCRIPT.fullmatch(w) or not KANJI.search(w) or w in entries:
            continue
        hira = to_hira("".join(t["hira"] for t in kks.convert(w)))
        if not hira or any(c not in inv for c in hira):
            continue
        entries[w] = hira
    return [f"{k}\t{' '.join(v)}" for k, v in sorted(entries.items())]


# ---------------------------------------------------------------- Chinese
HANZI = re.compile(r"[一-鿿]+")
ZH_EXTRA = list("零一二三四五六七八九十百千万亿两点负年月日号第")


def chinese():
    entries = {}
    for w in ZH_EXTRA + wordfreq.top_n_list("zh", 20000):
        if len(entries) >= 2000:
            break
        if not HANZI.fullmatch(w) or w in entries or len(w) > 4:
            continue
        py = pypinyin.lazy_pinyin(w, style=pypinyin.Style.TONE3, neutral_tone_with_five=True)
        if len(py) != len(w) or not all(re.fullmatch(r"[a-z]+[1-5]", p) for p in py):
            continue
        entries[w] = py
    # every character of a word must also be mappable on its own
    for w in list(entries):
        for c in w:
            if c not in entries:
                py = pypinyin.lazy_pinyin(c, style=pypinyin.Style.TONE3, neutral_tone_with_five=True)
                if len(py) == 1 and re.fullmatch(r"[a-z]+[1-5]", py[0]):
                    entries[c] = py
    inv = sorted({p for v in entries.values() for p in v})
    return [f"{k}\t{' '.join(v)}" for k, v in sorted(entries.items())], inv


# ---------------------------------------------------------------- toy vocab
HANGUL = re.compile(r"[가-힣]+")


def main():
    os.makedirs(OUT, exist_ok=True)
    write_lines("inventory_ko.txt", RESERVED + hangul_inventory())
    en_lex, en_inv = english()
    write_lines("lexicon_en.tsv", en_lex)
    write_lines("inventory_en.txt", RESERVED + en_inv)
    ja_inv = hira_inventory()
    write_lines("lexicon_ja.tsv", japanese(ja_inv))
    write_lines("inventory_ja.txt", RESERVED + ja_inv)
    zh_lex, zh_inv = chinese()
    write_lines("lexicon_zh.tsv", zh_lex)
    write_lines("inventory_zh.txt", RESERVED + zh_inv)
    ko_words = [w for w in wordfreq.top_n_list("ko", 2000) if HANGUL.fullmatch(w) and 2 <= len(w) <= 3][:64]
    write_lines("toy_words_ko.txt", ko_words)
    print("ok", len(en_lex), sys.argv[1:])


if __name__ == "__main__":
    main()
