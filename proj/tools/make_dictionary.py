#!/usr/bin/env python3
"""Regenerates data/dictionary.txt from the web2 and GCIDE word lists (pip install english-words).

Words that have a glossary entry are dropped so the shipped te reo Māori
vocabulary stays out-of-dictionary.
"""
import json
import pathlib
import unicodedata

from english_words import get_english_words_set

root = pathlib.Path(__file__).resolve().parent.parent / "data"
glossary = json.loads((root / "glossary.json").read_text(encoding="utf-8"))
drop = set()
for w in glossary:
    drop.add(w.lower())
    drop.add("".join(c for c in unicodedata.normalize("NFD", w.lower()) if unicodedata.category(c) != "Mn"))
words = sorted(get_english_words_set(["web2", "gcide"], lower=True, alpha=True) - drop)
(root / "dictionary.txt").write_text("\n".join(words) + "\n", encoding="utf-8")
print(len(words), "words")
